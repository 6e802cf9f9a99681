#include <doctest.h>

#include <cmath>

#include "chsav/fem.hpp"
#include "oracles.hpp"

using namespace chsav;

TEST_CASE("local stiffness of the reference right triangle") {
    for (double h : {1.0, 0.3, 7.0, 1e-3}) {
        CAPTURE(h);
        const auto S = local_stiffness_triangle({0, 0}, {h, 0}, {0, h});
        const double expected[3][3] = {{1, -0.5, -0.5}, {-0.5, 0.5, 0}, {-0.5, 0, 0.5}};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) CHECK(std::abs(S[a][b] - expected[a][b]) <= 1e-14);
    }
}

TEST_CASE("local stiffness properties on random triangles") {
    const auto coords = oracle::random_vector(6 * 50, 4);
    for (int k = 0; k < 50; ++k) {
        const Point2 p[3] = {{coords[6 * k], coords[6 * k + 1]},
                             {coords[6 * k + 2], coords[6 * k + 3]},
                             {coords[6 * k + 4], coords[6 * k + 5]}};
        if (std::abs(triangle_signed_area(p[0], p[1], p[2])) < 1e-3) continue;
        const auto S = local_stiffness_triangle(p[0], p[1], p[2]);
        double ref[3][3];
        oracle::local_stiffness_cot(p, ref);
        const auto S2 = local_stiffness_triangle({3 * p[0].x, 3 * p[0].y}, {3 * p[1].x, 3 * p[1].y},
                                                 {3 * p[2].x, 3 * p[2].y});
        for (int a = 0; a < 3; ++a) {
            CHECK(std::abs(S[a][0] + S[a][1] + S[a][2]) <= 1e-12);
            for (int b = 0; b < 3; ++b) {
                CHECK(S[a][b] == doctest::Approx(S[b][a]));
                CHECK(std::abs(S[a][b] - ref[a][b]) <= 1e-10 * (1 + std::abs(ref[a][b])));
                CHECK(std::abs(S[a][b] - S2[a][b]) <= 1e-10 * (1 + std::abs(ref[a][b])));
            }
        }
    }
    CHECK_THROWS_AS(local_stiffness_triangle({0, 0}, {1, 1}, {2, 2}), std::invalid_argument);
}

TEST_CASE("lumped masses on the level-1 square") {
    const auto [mesh, bnd] = build_unit_square_mesh(1);
    const auto ops = assemble_operators(mesh, bnd);
    double sum = 0.0, sum_bnd = 0.0;
    for (double m : ops.ml_bulk) sum += m;
    for (double m : ops.ml_bnd) sum_bnd += m;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sum_bnd == doctest::Approx(4.0).epsilon(1e-15));
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        if (mesh.vertices[i].x == 0.5 && mesh.vertices[i].y == 0.5) {
            CHECK(ops.ml_bulk[i] == doctest::Approx(0.25).epsilon(1e-15));
        }
    }
    CHECK(ops.area == doctest::Approx(1.0));
    CHECK(ops.perimeter == doctest::Approx(4.0));
}

TEST_CASE("operators agree with the dense oracle") {
    for (int level = 1; level <= 3; ++level) {
        CAPTURE(level);
        const auto [mesh, bnd] = build_unit_square_mesh(level);
        const auto ops = assemble_operators(mesh, bnd);
        const auto d = oracle::dense_ops(mesh);
        const int n = static_cast<int>(mesh.num_vertices());
        for (int i = 0; i < n; ++i) {
            CHECK(ops.ml_bulk[i] == doctest::Approx(d.ml_bulk[i]).epsilon(1e-14));
            double row = 0.0;
            for (int j = 0; j < n; ++j) {
                CHECK(std::abs(ops.k_bulk.at(i, j) - d.k_bulk[i][j]) <= 1e-13);
                row += d.m_consistent[i][j];
            }
            // Lumped value equals the consistent-mass row sum.
            CHECK(ops.ml_bulk[i] == doctest::Approx(row).epsilon(1e-13));
        }
        const int nb = static_cast<int>(ops.num_bnd());
        for (int a = 0; a < nb; ++a) {
            CHECK(d.on_boundary[ops.trace[a]] == 1);
            CHECK(ops.ml_bnd[a] == doctest::Approx(d.ml_bnd_bulk[ops.trace[a]]).epsilon(1e-14));
            for (int b = 0; b < nb; ++b) {
                CHECK(std::abs(ops.k_bnd.at(a, b) - d.k_bnd[ops.trace[a]][ops.trace[b]]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("operator invariants") {
    for (int level = 2; level <= 5; ++level) {
        CAPTURE(level);
        const auto [mesh, bnd] = build_unit_square_mesh(level);
        const auto ops = assemble_operators(mesh, bnd);

        const std::vector<double> one(ops.num_bulk(), 1.0), one_b(ops.num_bnd(), 1.0);
        CHECK(norm_inf(ops.k_bulk.multiply(one)) <= 1e-12 * ops.k_bulk.norm_inf());
        CHECK(norm_inf(ops.k_bnd.multiply(one_b)) <= 1e-12 * ops.k_bnd.norm_inf());

        for (const auto* K : {&ops.k_bulk, &ops.k_bnd}) {
            const auto& rp = K->row_ptr();
            const auto& ci = K->col_idx();
            for (int i = 0; i < K->rows(); ++i) {
                for (int k = rp[i]; k < rp[i + 1]; ++k) {
                    if (k > rp[i]) CHECK(ci[k] > ci[k - 1]);
                    CHECK(K->at(i, ci[k]) == K->at(ci[k], i));
                    CHECK(std::isfinite(K->values()[k]));
                }
            }
        }

        double sum = 0.0, sum_b = 0.0;
        for (double m : ops.ml_bulk) {
            CHECK(m > 0.0);
            sum += m;
        }
        for (double m : ops.ml_bnd) {
            CHECK(m > 0.0);
            sum_b += m;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-13);
        CHECK(std::abs(sum_b - 4.0) <= 4e-13);

        for (int k = 0; k < 100; ++k) {
            const auto v = oracle::random_vector(ops.num_bulk(), 1000 * level + k);
            const auto w = oracle::random_vector(ops.num_bnd(), 7000 * level + k);
            CHECK(ops.k_bulk.bilinear(v, v) >= -1e-12 * dot(v, v));
            CHECK(ops.k_bnd.bilinear(w, w) >= -1e-12 * dot(w, w));
        }

        const auto f = oracle::random_vector(ops.num_bulk(), 5);
        const auto tf = ops.restrict_to_boundary(f);
        for (std::size_t j = 0; j < tf.size(); ++j) CHECK(tf[j] == f[bnd.bnd_to_bulk[j]]);
    }
}

TEST_CASE("P1 exactness for linear fields") {
    const auto [mesh, bnd] = build_unit_square_mesh(3);
    const auto ops = assemble_operators(mesh, bnd);
    std::vector<double> x(mesh.num_vertices());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = mesh.vertices[i].x;
    CHECK(std::abs(ops.k_bulk.bilinear(x, x) - 1.0) <= 1e-13);
    CHECK(lumped_integral_bulk(ops, x) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("lumped integrals") {
    const auto [mesh, bnd] = build_unit_square_mesh(2);
    const auto ops = assemble_operators(mesh, bnd);
    CHECK(lumped_integral_bulk(ops, std::vector<double>(ops.num_bulk(), 1.0)) == doctest::Approx(1.0));
    CHECK(lumped_integral_bnd(ops, std::vector<double>(ops.num_bnd(), 2.5)) == doctest::Approx(10.0));
    CHECK_THROWS_AS(lumped_integral_bulk(ops, std::vector<double>(3, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(lumped_integral_bnd(ops, std::vector<double>(3, 1.0)), std::invalid_argument);
}

TEST_CASE("lumped and consistent L2 norms are equivalent") {
    // Elementwise the lumped mass |K|/3 I dominates the consistent mass
    // |K|/12 [[2,1,1],[1,2,1],[1,1,2]] (eigenvalues |K|/12 {4,1,1}), so
    // consistent <= lumped <= 4 consistent.
    for (int level = 1; level <= 3; ++level) {
        const auto [mesh, bnd] = build_unit_square_mesh(level);
        const auto ops = assemble_operators(mesh, bnd);
        const auto d = oracle::dense_ops(mesh);
        for (int k = 0; k < 20; ++k) {
            const auto f = oracle::random_vector(ops.num_bulk(), 31 * level + k);
            std::vector<double> f2(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) f2[i] = f[i] * f[i];
            const double lumped = lumped_integral_bulk(ops, f2);
            const double consistent = oracle::quad(d.m_consistent, f);
            CHECK(lumped >= consistent / 4.0);
            CHECK(lumped >= consistent * (1 - 1e-12));
            CHECK(lumped <= 4.0 * consistent * (1 + 1e-12));
        }
    }
}

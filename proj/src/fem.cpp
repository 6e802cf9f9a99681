#include "chsav/fem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chsav {

LocalMatrix local_stiffness_triangle(const Point2& v0, const Point2& v1, const Point2& v2) {
    const double area = triangle_signed_area(v0, v1, v2);
    if (area == 0.0 || !std::isfinite(area)) {
        throw std::invalid_argument("degenerate triangle in stiffness assembly");
    }
    // grad(lambda_a) = rot(opposite edge) / (2 |K|); the sign cancels in products.
    const std::array<Point2, 3> p{v0, v1, v2};
    std::array<std::array<double, 2>, 3> g{};
    for (int a = 0; a < 3; ++a) {
        const Point2& b = p[(a + 1) % 3];
        const Point2& c = p[(a + 2) % 3];
        g[a] = {(b.y - c.y) / (2.0 * area), (c.x - b.x) / (2.0 * area)};
    }
    const double abs_area = std::abs(area);
    LocalMatrix s{};
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) s[a][b] = abs_area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
    }
    return s;
}

std::vector<double> FemOperators::restrict_to_boundary(std::span<const double> bulk) const {
    if (bulk.size() != num_bulk()) throw std::invalid_argument("trace: bulk vector length mismatch");
    std::vector<double> out(trace.size());
    for (std::size_t j = 0; j < trace.size(); ++j) out[j] = bulk[trace[j]];
    return out;
}

std::vector<double> FemOperators::extend_from_boundary(std::span<const double> bnd) const {
    if (bnd.size() != num_bnd()) throw std::invalid_argument("trace: boundary vector length mismatch");
    std::vector<double> out(num_bulk(), 0.0);
    for (std::size_t j = 0; j < trace.size(); ++j) out[trace[j]] += bnd[j];
    return out;
}

FemOperators assemble_operators(const BulkMesh& mesh, const BoundaryMesh& bnd) {
    FemOperators ops;
    const int n = static_cast<int>(mesh.num_vertices());
    const int nb = static_cast<int>(bnd.num_vertices());

    ops.ml_bulk.assign(n, 0.0);
    std::vector<Triplet> kt;
    kt.reserve(9 * mesh.num_triangles());
    for (const auto& t : mesh.triangles) {
        const auto& a = mesh.vertices[t[0]];
        const auto& b = mesh.vertices[t[1]];
        const auto& c = mesh.vertices[t[2]];
        const auto s = local_stiffness_triangle(a, b, c);
        const double area = std::abs(triangle_signed_area(a, b, c));
        for (int i = 0; i < 3; ++i) {
            ops.ml_bulk[t[i]] += area / 3.0;
            for (int j = 0; j < 3; ++j) kt.push_back({t[i], t[j], s[i][j]});
        }
        ops.area += area;
    }
    ops.k_bulk = SparseMatrix::from_triplets(n, n, std::move(kt));

    ops.trace = bnd.bnd_to_bulk;
    std::vector<int> bulk_to_bnd(n, -1);
    for (int j = 0; j < nb; ++j) {
        const int v = ops.trace[j];
        if (v < 0 || v >= n || bulk_to_bnd[v] != -1) {
            throw std::invalid_argument("boundary-to-bulk map is not injective into the bulk mesh");
        }
        bulk_to_bnd[v] = j;
    }

    ops.ml_bnd.assign(nb, 0.0);
    std::vector<Triplet> kb;
    kb.reserve(4 * bnd.edges.size());
    for (const auto& e : bnd.edges) {
        const int i = bulk_to_bnd[e[0]];
        const int j = bulk_to_bnd[e[1]];
        if (i < 0 || j < 0) throw std::invalid_argument("boundary edge vertex missing from trace map");
        const double len = distance(mesh.vertices[e[0]], mesh.vertices[e[1]]);
        if (!(len > 0.0)) throw std::invalid_argument("degenerate boundary edge");
        ops.ml_bnd[i] += 0.5 * len;
        ops.ml_bnd[j] += 0.5 * len;
        const double k = 1.0 / len;
        kb.push_back({i, i, k});
        kb.push_back({i, j, -k});
        kb.push_back({j, i, -k});
        kb.push_back({j, j, k});
        ops.perimeter += len;
    }
    ops.k_bnd = SparseMatrix::from_triplets(nb, nb, std::move(kb));
    return ops;
}

double lumped_integral_bulk(const FemOperators& ops, std::span<const double> nodal) {
    if (nodal.size() != ops.num_bulk()) throw std::invalid_argument("lumped integral: length mismatch");
    return dot(ops.ml_bulk, nodal);
}

double lumped_integral_bnd(const FemOperators& ops, std::span<const double> nodal) {
    if (nodal.size() != ops.num_bnd()) throw std::invalid_argument("lumped integral: length mismatch");
    return dot(ops.ml_bnd, nodal);
}

}  // namespace chsav

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "chsav/cli.hpp"
#include "chsav/config.hpp"
#include "chsav/fem.hpp"
#include "chsav/output.hpp"
#include "chsav/scenario.hpp"

using namespace chsav;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("chsav_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

int call_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "chsav");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli(static_cast<int>(argv.size()), argv.data());
}

// Naive legacy-VTK reader: returns the values of a named point-data array.
std::vector<double> read_scalars(const std::filesystem::path& path, const std::string& name, int* points = nullptr,
                                 std::vector<int>* cell_types = nullptr) {
    std::ifstream in(path);
    std::string tok;
    std::vector<double> out;
    while (in >> tok) {
        if (tok == "POINTS" && points) in >> *points;
        if (tok == "CELL_TYPES" && cell_types) {
            int n = 0;
            in >> n;
            cell_types->resize(n);
            for (int& c : *cell_types) in >> c;
        }
        if (tok == "POINT_DATA") {
            int n = 0;
            in >> n;
            std::string kw, array, type;
            int comps = 0;
            while (in >> kw >> array >> type >> comps) {
                std::string lt, def;
                in >> lt >> def;
                std::vector<double> values(n);
                for (double& v : values) {
                    std::string s;
                    in >> s;
                    v = std::stod(s);
                }
                if (array == name) return values;
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("separation scenario") {
    const Scenario s = scenario_separation();
    CHECK(s.phi0({0.5, 0.5}) == doctest::Approx(0.1));
    CHECK(s.phi0({0.0, 0.0}) == 0.0);
    for (int i = 0; i <= 40; ++i) {
        for (int j = 0; j <= 40; ++j) {
            const double v = s.phi0({i / 40.0, j / 40.0});
            CHECK(v >= -1e-17);
            CHECK(v <= 0.1 + 1e-15);
        }
    }
    CHECK(s.defaults.m == 0.01);
    CHECK(s.defaults.epsilon == 0.02);
    CHECK(s.defaults.sigma == 2.0);
    CHECK(s.defaults.m_gamma == 0.02);
    CHECK(s.defaults.delta == 0.02);
    CHECK(s.defaults.beta == 1.0);
    CHECK(s.defaults.xi == 0.0);
    CHECK(s.defaults.t_end == 1.0);
    CHECK(s.shift_bulk == 0.01);
    CHECK(s.shift_bnd == 0.01);
}

TEST_CASE("adsorption scenario") {
    const Scenario s = scenario_adsorption();
    CHECK(s.phi0({0.1, 0.5}) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.phi0({0.9, 0.5}) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(s.defaults.epsilon == 0.01);
    CHECK(s.defaults.delta == 0.01);
    CHECK(s.defaults.beta == 4.0);
    CHECK(s.defaults.t_end == 2.5);
    CHECK(s.shift_bulk == 0.001);
    // Zero level set passes through the ends of the stated extents.
    CHECK(std::abs(s.phi0({0.1 + 0.6814 / 2, 0.5})) <= 1e-12);
    CHECK(std::abs(s.phi0({0.1, 0.5 + 0.367 / 2})) <= 1e-12);

    const auto [mesh, bnd] = build_unit_square_mesh(6);
    const auto ops = assemble_operators(mesh, bnd);
    CHECK(lumped_integral_bulk(ops, interpolate(mesh, s.phi0)) < 0.0);
}

TEST_CASE("custom initial conditions") {
    CHECK(parse_initial_condition("one", 0.01)({0.3, 0.3}) == 1.0);
    CHECK(parse_initial_condition("constant -0.25", 0.01)({0.3, 0.3}) == -0.25);
    const auto rnd = parse_initial_condition("random 0.05 7", 0.01);
    CHECK(std::abs(rnd({0.3, 0.4})) <= 0.05);
    CHECK(rnd({0.3, 0.4}) == parse_initial_condition("random 0.05 7", 0.01)({0.3, 0.4}));
    CHECK_THROWS(parse_initial_condition("sine", 0.01));
}

TEST_CASE("config round trip") {
    for (const char* name : {"separation", "adsorption", "custom"}) {
        Config c = default_config(name);
        c.params.xi = kInfiniteXi;
        c.params.tau = 3.3e-5;
        c.eoc_levels = {3, 4};
        c.eoc_xis = {1e-4, 3e-4};
        c.snapshot_every = 7;
        c.svg = false;
        c.solver = SolverKind::gmres;
        const std::string text = serialize_config(c);
        const Config back = parse_config(text);
        CHECK(back == c);
        CHECK(serialize_config(back) == text);
    }
}

TEST_CASE("config parsing") {
    const Config c = parse_config(R"(
# comment
[scenario]
name = adsorption
[params]
xi = inf     # limit model
t_end = 0.2
[eoc]
axis = xi-inverse
xis = 1e-4, 2e-4
)");
    CHECK(c.scenario == "adsorption");
    CHECK(std::isinf(c.params.xi));
    CHECK(c.params.t_end == 0.2);
    CHECK(c.params.beta == 4.0);  // scenario default
    CHECK(c.eoc_axis == EocAxis::xi_inverse);
    CHECK(c.eoc_xis == std::vector<double>{1e-4, 2e-4});
    CHECK(parse_xi("inf") == kInfiniteXi);
    CHECK(format_xi(kInfiniteXi) == "inf");

    CHECK_THROWS_AS(parse_config("[params]\ncolour = red\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[params]\ntau = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[params]\ntau\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[scenario]\nname = vortex\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[params]\nxi = -2\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), ConfigError);

    Config missing = default_config("separation");
    missing.mesh_path = "/nonexistent/mesh.txt";
    CHECK_THROWS_AS(missing.validate(), ConfigError);
    Config bad = default_config("separation");
    bad.params.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("vtk output") {
    const auto dir = scratch("vtk");
    SUBCASE("level 1, zero state") {
        const auto [mesh, bnd] = build_unit_square_mesh(1);
        State s;
        s.phi.assign(9, 0.0);
        s.mu.assign(9, 0.0);
        s.theta.assign(8, 0.0);
        const auto path = dir / "zero.vtk";
        write_vtk(mesh, bnd, s, path);
        int points = 0;
        std::vector<int> types;
        const auto phi = read_scalars(path, "phi", &points, &types);
        CHECK(points == 9);
        CHECK(types == std::vector<int>(8, 5));
        CHECK(phi == std::vector<double>(9, 0.0));
        int bpoints = 0;
        std::vector<int> btypes;
        const auto theta = read_scalars(boundary_vtk_path(path), "theta", &bpoints, &btypes);
        CHECK(bpoints == 8);
        CHECK(btypes == std::vector<int>(8, 3));
        CHECK(theta.size() == 8);
    }
    SUBCASE("round trip is exact") {
        const auto [mesh, bnd] = build_unit_square_mesh(3);
        State s;
        s.phi = interpolate(mesh, scenario_adsorption().phi0);
        s.mu = interpolate(mesh, [](const Point2& p) { return std::sin(10 * p.x) / 3.0; });
        s.theta.assign(bnd.num_vertices(), 1.0 / 7.0);
        const auto path = dir / "state.vtk";
        write_vtk(mesh, bnd, s, path);
        CHECK(read_scalars(path, "phi") == s.phi);
        CHECK(read_scalars(path, "mu") == s.mu);
        CHECK(read_scalars(boundary_vtk_path(path), "theta") == s.theta);
        std::vector<double> trace(bnd.num_vertices());
        for (std::size_t j = 0; j < trace.size(); ++j) trace[j] = s.phi[bnd.bnd_to_bulk[j]];
        CHECK(read_scalars(boundary_vtk_path(path), "phi") == trace);
    }
    CHECK_THROWS(write_vtk(build_unit_square_mesh(1).first, build_unit_square_mesh(1).second, State{}, dir / "x.vtk"));
}

TEST_CASE("energy svg") {
    std::vector<DiagnosticsRow> rows(3);
    rows[0].t = 0.0, rows[0].e_mod = 2.0, rows[0].e_orig = 2.0;
    rows[1].t = 0.5, rows[1].e_mod = 1.5, rows[1].e_orig = 1.4;
    rows[2].t = 1.0, rows[2].e_mod = 1.0, rows[2].e_orig = 0.9;
    const std::string svg = energy_svg(rows);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("cli run with xi = inf") {
    const auto dir = scratch("cli_run");
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "[params]\nxi = inf\ntau = 1e-4\nt_end = 1e-3\n[mesh]\nlevel = 3\n[output]\nevery = 2\nsnapshot_every = 5\n";
    }
    CHECK(call_cli({"run", (dir / "run.cfg").string(), "--output-dir", (dir / "out").string()}) == 0);
    CHECK(std::filesystem::exists(dir / "out" / "diagnostics.csv"));
    CHECK(std::filesystem::exists(dir / "out" / "energy.svg"));
    CHECK(std::filesystem::exists(dir / "out" / "snapshot_0000005.vtk"));
    CHECK(std::filesystem::exists(dir / "out" / "snapshot_0000005_boundary.vtk"));
    const Config used = load_config(dir / "out" / "config.txt");
    CHECK(std::isinf(used.params.xi));

    std::ifstream csv(dir / "out" / "diagnostics.csv");
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 1 + 6);  // header, steps 0, 2, 4, 6, 8, 10
}

TEST_CASE("cli errors") {
    CHECK(call_cli({"run", "/nonexistent/config.txt"}) != 0);
    CHECK(call_cli({"frobnicate"}) != 0);
    CHECK(call_cli({"run", "--tau", "abc"}) != 0);
}

TEST_CASE("cli validate") {
    CHECK(call_cli({"validate", "--mesh-level", "3", "--tau", "1e-4", "--steps", "20"}) == 0);
}

TEST_CASE("invariant suite") {
    Config c = default_config("separation");
    c.mesh_level = 3;
    c.params.tau = 1e-4;
    const auto results = run_invariant_suite(c, {0.0, 1.0, kInfiniteXi}, 30);
    CHECK(results.size() == 13);
    for (const auto& r : results) {
        CAPTURE(r.name);
        CAPTURE(r.detail);
        CHECK(r.passed);
    }
}

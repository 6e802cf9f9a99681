// Acceptance suite: one PASS/FAIL line per criterion.
//
//   chsav_acceptance            run all criteria
//   chsav_acceptance --only 6   run a single criterion

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "chsav/cli.hpp"
#include "chsav/diagnostics.hpp"
#include "chsav/eoc.hpp"
#include "chsav/fem.hpp"
#include "chsav/potential.hpp"
#include "chsav/scenario.hpp"
#include "chsav/stepper.hpp"

using namespace chsav;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Setup {
    Scenario scenario;
    BulkMesh mesh;
    BoundaryMesh bnd;
    FemOperators ops;
    DoubleWell F{1.0};
    DoubleWell G{1.0};
    Params params;

    Setup(Scenario sc, int level, double tau, long steps, double xi) : scenario(std::move(sc)) {
        std::tie(mesh, bnd) = build_unit_square_mesh(level);
        ops = assemble_operators(mesh, bnd);
        F = DoubleWell::with_integrated_shift(scenario.shift_bulk, ops.area);
        G = DoubleWell::with_integrated_shift(scenario.shift_bnd, ops.perimeter);
        params = scenario.defaults;
        params.tau = tau;
        params.t_end = static_cast<double>(steps) * tau;
        params.xi = xi;
    }

    [[nodiscard]] State initial() const { return init_state(ops, F, G, interpolate(mesh, scenario.phi0)); }
};

const double kXis[] = {0.0, 0.5, 1.0, 10.0, kInfiniteXi};
constexpr long kSteps = 200;

// Steps the separation scenario at level 4 and hands every (prev, next) pair to @p check.
void separation_runs(const std::function<void(const Setup&, const State&, const State&)>& check) {
    for (double xi : kXis) {
        const Setup s(scenario_separation(), 4, 1e-4, kSteps, xi);
        const Stepper stepper(s.ops, s.params, s.F, s.G);
        State prev = s.initial();
        check(s, prev, prev);
        for (long k = 0; k < kSteps; ++k) {
            State next = stepper.step(prev);
            check(s, prev, next);
            prev = std::move(next);
        }
    }
}

Outcome energy_identity() {
    Outcome o;
    double worst = 0.0;
    long increases = 0;
    separation_runs([&](const Setup& s, const State& prev, const State& next) {
        if (next.n == 0) return;
        const double e_next = modified_energy(s.ops, s.params, next);
        const double defect = std::abs(energy_identity_residual(s.ops, s.params, prev, next)) / (1 + e_next);
        worst = std::max(worst, defect);
        if (defect > 1e-9) o.passed = false;
        // Non-increasing up to one rounding unit of the energy itself.
        if (e_next > modified_energy(s.ops, s.params, prev) * (1 + 1e-14)) {
            ++increases;
            o.passed = false;
        }
    });
    o.detail = "max identity residual/(1+E) " + fmt("%.2e", worst) + " (tol 1e-09), E increases: " +
               std::to_string(increases);
    return o;
}

Outcome mass_conservation() {
    Outcome o;
    double worst = 0.0, worst_individual = 0.0;
    Masses m0;
    separation_runs([&](const Setup& s, const State&, const State& next) {
        const Masses m = masses(s.ops, s.params, next);
        if (next.n == 0) {
            m0 = m;
            return;
        }
        const double drift = std::abs(m.combined - m0.combined) / std::max(1.0, std::abs(m0.combined));
        worst = std::max(worst, drift);
        if (drift > 1e-11) o.passed = false;
        if (s.params.xi == 0.0) {
            const double db = std::abs(m.bulk - m0.bulk) / std::max(1.0, std::abs(m0.bulk));
            const double dg = std::abs(m.bnd - m0.bnd) / std::max(1.0, std::abs(m0.bnd));
            worst_individual = std::max({worst_individual, db, dg});
            if (std::max(db, dg) > 1e-11) o.passed = false;
        }
    });

    const Setup ad(scenario_adsorption(), 5, 5e-5, 500, 1.0);
    const Stepper stepper(ad.ops, ad.params, ad.F, ad.G);
    State st = ad.initial();
    const double bnd0 = masses(ad.ops, ad.params, st).bnd;
    for (int k = 0; k < 500; ++k) st = stepper.step(st);
    const double exchange = std::abs(masses(ad.ops, ad.params, st).bnd - bnd0);
    if (!(exchange > 1e-6)) o.passed = false;

    o.detail = "combined drift " + fmt("%.2e", worst) + ", xi=0 individual drift " + fmt("%.2e", worst_individual) +
               " (tol 1e-11), adsorption boundary-mass change " + fmt("%.3e", exchange) + " (> 1e-06)";
    return o;
}

Outcome infinite_xi_constraint() {
    Outcome o;
    const Setup s(scenario_separation(), 4, 1e-4, kSteps, kInfiniteXi);
    const Stepper stepper(s.ops, s.params, s.F, s.G);
    State st = s.initial();
    double worst = 0.0;
    for (long k = 0; k < kSteps; ++k) {
        st = stepper.step(st);
        worst = std::max(worst, max_jump(s.ops, st, s.params.beta));
    }
    o.passed = worst <= 1e-10;
    o.detail = "max |beta theta - T mu| " + fmt("%.2e", worst) + " (tol 1e-10)";
    return o;
}

Outcome fixed_points() {
    Outcome o;
    double dphi = 0.0, dmu = 0.0, drs = 0.0;
    for (double value : {0.0, 1.0}) {
        for (double xi : {0.0, 1.0, kInfiniteXi}) {
            const Setup s(scenario_separation(), 4, 1e-4, 50, xi);
            const Stepper stepper(s.ops, s.params, s.F, s.G);
            const State first = init_state(s.ops, s.F, s.G, std::vector<double>(s.ops.num_bulk(), value));
            State st = first;
            for (int k = 0; k < 50; ++k) {
                st = stepper.step(st);
                for (std::size_t i = 0; i < st.phi.size(); ++i) {
                    dphi = std::max(dphi, std::abs(st.phi[i] - first.phi[i]));
                    dmu = std::max(dmu, std::abs(st.mu[i]));
                }
                for (double th : st.theta) dmu = std::max(dmu, std::abs(th));
                drs = std::max({drs, std::abs(st.r - first.r), std::abs(st.s - first.s)});
            }
        }
    }
    o.passed = dphi <= 1e-11 && dmu <= 1e-11 && drs <= 1e-12;
    o.detail = "phi deviation " + fmt("%.2e", dphi) + ", mu/theta " + fmt("%.2e", dmu) + " (tol 1e-11), r/s drift " +
               fmt("%.2e", drs) + " (tol 1e-12)";
    return o;
}

Outcome printed_tables() {
    Outcome o;
    std::ostringstream sink;
    const auto results = check_reference_tables(sink, 0.01);
    long failed = 0;
    std::string names;
    for (const auto& r : results) {
        if (r.passed) continue;
        ++failed;
        names += (names.empty() ? "" : "; ") + r.name + " " + r.detail;
    }
    o.passed = failed == 0;
    o.detail = std::to_string(results.size() - failed) + " of " + std::to_string(results.size()) +
               " recomputed EOC entries within 0.01 of the printed value";
    if (failed) o.detail += "; off: " + names;
    return o;
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::string eoc_list(const EocReport& r, bool bulk) {
    std::string s;
    for (std::size_t k = 1; k < r.rows.size(); ++k)
        s += (k > 1 ? "," : "") + fmt("%.3f", bulk ? r.rows[k].eoc_bulk : r.rows[k].eoc_bnd);
    return s;
}

Outcome check_eoc(const EocReport& r, double lo, double hi, double lo_bnd, double hi_bnd) {
    Outcome o;
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
        if (!in_range(r.rows[k].eoc_bulk, lo, hi)) o.passed = false;
        if (!in_range(r.rows[k].eoc_bnd, lo_bnd, hi_bnd)) o.passed = false;
    }
    o.detail = "EOC bulk " + eoc_list(r, true) + " in [" + fmt("%g", lo) + ", " + fmt("%g", hi) + "], bnd " +
               eoc_list(r, false) + " in [" + fmt("%g", lo_bnd) + ", " + fmt("%g", hi_bnd) + "]";
    return o;
}

Outcome h_convergence() {
    EocStudy st;
    st.axis = EocAxis::h;
    st.scenario = scenario_separation();
    st.params = st.scenario.defaults;
    st.params.tau = 1e-5;
    st.params.t_end = 0.05;
    st.levels = {4, 5};
    st.reference_level = 6;
    st.threads = threads_from_environment();
    return check_eoc(run_eoc_study(st), 1.7, 2.6, 0.8, 1.6);
}

Outcome tau_convergence() {
    EocStudy st;
    st.axis = EocAxis::tau;
    st.scenario = scenario_separation();
    st.params = st.scenario.defaults;
    st.params.t_end = 0.05;
    st.level = 5;
    st.taus = {2e-5, 4e-5};
    st.reference_tau = 1e-5;
    st.threads = threads_from_environment();
    return check_eoc(run_eoc_study(st), 1.2, 2.1, 1.2, 2.1);
}

Outcome xi_convergence() {
    Outcome o;
    o.detail.clear();
    for (EocAxis axis : {EocAxis::xi, EocAxis::xi_inverse}) {
        EocStudy st;
        st.axis = axis;
        st.scenario = scenario_adsorption();
        st.params = st.scenario.defaults;
        st.params.tau = 5e-5;
        st.params.t_end = 0.1;
        st.level = 5;
        st.xis = {1e-4, 2e-4, 4e-4};
        st.threads = threads_from_environment();
        const Outcome part = check_eoc(run_eoc_study(st), 0.8, 1.2, 0.8, 1.2);
        o.passed = o.passed && part.passed;
        o.detail += (o.detail.empty() ? "" : "; ") + to_string(axis) + ": " + part.detail;
    }
    return o;
}

Outcome operator_properties() {
    Outcome o;
    double kernel = 0.0, mass = 0.0, energy_x = 0.0, symmetry = 0.0, nested = 0.0, fd = 0.0;
    for (int level = 1; level <= 5; ++level) {
        const auto [mesh, bnd] = build_unit_square_mesh(level);
        const auto ops = assemble_operators(mesh, bnd);
        const std::vector<double> ones(ops.num_bulk(), 1.0), ones_b(ops.num_bnd(), 1.0);
        for (double v : ops.k_bulk.multiply(ones)) kernel = std::max(kernel, std::abs(v));
        for (double v : ops.k_bnd.multiply(ones_b)) kernel = std::max(kernel, std::abs(v));
        double sum = 0.0, sum_b = 0.0;
        for (double v : ops.ml_bulk) sum += v;
        for (double v : ops.ml_bnd) sum_b += v;
        mass = std::max({mass, std::abs(sum - 1.0), std::abs(sum_b - 4.0) / 4.0});

        std::vector<double> x(ops.num_bulk());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = mesh.vertices[i].x;
        const auto kx = ops.k_bulk.multiply(x);
        double xkx = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) xkx += x[i] * kx[i];
        energy_x = std::max(energy_x, std::abs(xkx - 1.0));

        const int n = static_cast<int>(ops.num_bulk());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; j += 7)
                symmetry = std::max(symmetry, std::abs(ops.k_bulk.at(i, j) - ops.k_bulk.at(j, i)));

        // Prolongation to the next level reproduces the coarse P1 function.
        if (level < 5) {
            const auto fine = build_unit_square_mesh(level + 1).first;
            std::vector<double> coarse(ops.num_bulk());
            for (std::size_t i = 0; i < coarse.size(); ++i)
                coarse[i] = std::sin(3.0 * static_cast<double>(i)) + 0.5 * std::cos(static_cast<double>(i * i));
            std::vector<double> prolonged(fine.num_vertices());
            for (std::size_t i = 0; i < prolonged.size(); ++i)
                prolonged[i] = evaluate_unit_square_p1(level, coarse, fine.vertices[i]);
            for (int k = 0; k < 500; ++k) {
                const Point2 p{std::fmod(0.6180339887 * k, 1.0), std::fmod(0.7548776662 * k + 0.1, 1.0)};
                nested = std::max(nested, std::abs(evaluate_unit_square_p1(level, coarse, p) -
                                                   evaluate_unit_square_p1(level + 1, prolonged, p)));
            }
        }
    }
    const DoubleWell dw(0.01);
    for (int k = 0; k <= 400; ++k) {
        const double x = -2.0 + 0.01 * k, d = 1e-5;
        fd = std::max(fd, std::abs((dw.value(x + d) - dw.value(x - d)) / (2 * d) - dw.derivative(x)));
    }
    o.passed = kernel <= 1e-12 && mass <= 1e-13 && energy_x <= 1e-12 && symmetry <= 1e-14 && nested <= 1e-13 &&
               fd <= 1e-6;
    o.detail = "|K 1| " + fmt("%.1e", kernel) + ", lumped totals " + fmt("%.1e", mass) + ", x^T K x - 1 " +
               fmt("%.1e", energy_x) + ", symmetry " + fmt("%.1e", symmetry) + ", prolongation " +
               fmt("%.1e", nested) + ", potential FD " + fmt("%.1e", fd);
    return o;
}

std::string diagnostics_csv() {
    const Setup s(scenario_separation(), 4, 1e-4, kSteps, 1.0);
    std::ostringstream out;
    CsvDiagnosticsSink sink(out, s.ops, s.params, s.F, s.G, 1);
    StepObserver* sinks[] = {&sink};
    run(s.ops, s.params, s.F, s.G, interpolate(s.mesh, s.scenario.phi0), sinks);
    return out.str();
}

Outcome determinism() {
    Outcome o;
    const std::string serial = diagnostics_csv();
    constexpr int kThreads = 4;
    std::vector<std::string> concurrent(kThreads);
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < kThreads; ++t) pool.emplace_back([&concurrent, t] { concurrent[t] = diagnostics_csv(); });
    }
    int identical = 0;
    for (const auto& c : concurrent) identical += c == serial;
    o.passed = identical == kThreads && !serial.empty();
    o.detail = std::to_string(identical) + " of " + std::to_string(kThreads) +
               " concurrent runs bitwise identical to the serial run (" + std::to_string(serial.size()) + " bytes)";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chsav acceptance suite"};
    int only = 0;
    app.add_option("--only", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"energy dissipation identity", energy_identity},
        {"mass conservation", mass_conservation},
        {"xi = inf constraint", infinite_xi_constraint},
        {"constant fixed points", fixed_points},
        {"printed table arithmetic", printed_tables},
        {"h-convergence", h_convergence},
        {"tau-convergence", tau_convergence},
        {"xi-limit convergence", xi_convergence},
        {"operator properties", operator_properties},
        {"determinism", determinism},
    };

    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && static_cast<std::size_t>(only) != k + 1) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "criterion " << k + 1 << " " << (o.passed ? "PASS" : "FAIL") << "  " << criteria[k].first
                  << ": " << o.detail << " [" << fmt("%.1f", secs) << " s]" << std::endl;
        failed += !o.passed;
    }
    return failed == 0 ? 0 : 1;
}

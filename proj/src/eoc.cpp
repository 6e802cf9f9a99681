#include "chsav/eoc.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "chsav/fem.hpp"

namespace chsav {

TrajectoryRecorder::TrajectoryRecorder(const FemOperators& ops, int level, double tau, double interval)
    : ops_(&ops) {
    traj_.level = level;
    traj_.tau = tau;
    const double ratio = interval / tau;
    const double rounded = std::round(ratio);
    if (rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * ratio) stride_ = static_cast<long>(rounded);
}

void TrajectoryRecorder::record(const State& s) {
    traj_.times.push_back(s.t);
    traj_.bulk.push_back(s.phi);
    traj_.bnd.push_back(ops_->restrict_to_boundary(s.phi));
}

void TrajectoryRecorder::on_start(const State& initial) { record(initial); }

void TrajectoryRecorder::on_step(const State&, const State& next) {
    if (next.n % stride_ == 0) record(next);
}

void TrajectoryRecorder::on_finish(const State& final_state) {
    if (traj_.times.empty() || traj_.times.back() != final_state.t) record(final_state);
}

std::vector<double> sample_bulk(const Trajectory& traj, double t) {
    if (traj.times.empty()) throw std::invalid_argument("empty trajectory");
    const auto& ts = traj.times;
    if (t <= ts.front()) return traj.bulk.front();
    if (t >= ts.back()) return traj.bulk.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const auto k = static_cast<std::size_t>(it - ts.begin());
    const double t0 = ts[k - 1], t1 = ts[k];
    const double w = (t - t0) / (t1 - t0);
    const auto& a = traj.bulk[k - 1];
    const auto& b = traj.bulk[k];
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
    return out;
}

namespace {

// Coarse-to-fine P1 prolongation, stored as three (index, weight) pairs per fine vertex.
struct Prolongation {
    std::vector<std::array<int, 3>> idx;
    std::vector<std::array<double, 3>> w;

    std::vector<double> apply(const std::vector<double>& coarse) const {
        std::vector<double> out(idx.size());
        for (std::size_t v = 0; v < idx.size(); ++v) {
            out[v] = w[v][0] * coarse[idx[v][0]] + w[v][1] * coarse[idx[v][1]] + w[v][2] * coarse[idx[v][2]];
        }
        return out;
    }
};

Prolongation make_prolongation(int coarse_level, const BulkMesh& fine) {
    const int n = 1 << coarse_level;
    Prolongation p;
    p.idx.reserve(fine.num_vertices());
    p.w.reserve(fine.num_vertices());
    for (const auto& v : fine.vertices) {
        const double x = std::clamp(v.x, 0.0, 1.0) * n;
        const double y = std::clamp(v.y, 0.0, 1.0) * n;
        const int i = std::min(static_cast<int>(x), n - 1);
        const int j = std::min(static_cast<int>(y), n - 1);
        const double u = x - i, s = y - j;
        auto id = [n](int ii, int jj) { return jj * (n + 1) + ii; };
        const int ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1), ul = id(i, j + 1);
        if (s <= u) {
            p.idx.push_back({ll, lr, ur});
            p.w.push_back({1.0 - u, u - s, s});
        } else {
            p.idx.push_back({ll, ur, ul});
            p.w.push_back({1.0 - s, u, s - u});
        }
    }
    return p;
}

double l2_squared_bulk(const BulkMesh& mesh, const std::vector<double>& f) {
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        const double a = f[t[0]], b = f[t[1]], c = f[t[2]];
        const double area = std::abs(triangle_signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                                          mesh.vertices[t[2]]));
        total += area / 6.0 * (a * a + b * b + c * c + a * b + b * c + a * c);
    }
    return total;
}

double l2_squared_bnd(const BulkMesh& mesh, const BoundaryMesh& bnd, const std::vector<double>& f) {
    double total = 0.0;
    for (const auto& e : bnd.edges) {
        const double a = f[e[0]], b = f[e[1]];
        total += distance(mesh.vertices[e[0]], mesh.vertices[e[1]]) / 3.0 * (a * a + a * b + b * b);
    }
    return total;
}

}  // namespace

SpaceTimeError l2l2_error(const Trajectory& a, const Trajectory& b, double sample_step) {
    if (a.level < 1 || b.level < 1) {
        throw std::invalid_argument("l2l2_error needs trajectories on nested unit-square meshes");
    }
    if (a.times.empty() || b.times.empty()) throw std::invalid_argument("l2l2_error: empty trajectory");
    const double horizon = std::max(a.horizon(), b.horizon());
    if (std::abs(a.horizon() - b.horizon()) > 1e-9 * horizon) {
        throw std::invalid_argument("l2l2_error: trajectories cover different time horizons");
    }
    if (!(sample_step > 0.0)) throw std::invalid_argument("l2l2_error: sample step must be positive");

    const Trajectory& fine = a.level >= b.level ? a : b;
    const Trajectory& coarse = a.level >= b.level ? b : a;
    const auto [mesh, bnd] = build_unit_square_mesh(fine.level);
    const bool prolong = coarse.level != fine.level;
    const Prolongation P = prolong ? make_prolongation(coarse.level, mesh) : Prolongation{};

    std::vector<double> samples;
    const double ratio = horizon / sample_step;
    const long k_full = static_cast<long>(std::floor(ratio + 1e-9));
    for (long k = 0; k <= k_full; ++k) samples.push_back(std::min(k * sample_step, horizon));
    if (horizon - samples.back() > 1e-9 * horizon) samples.push_back(horizon);

    std::vector<double> err_bulk(samples.size()), err_bnd(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        auto f = sample_bulk(fine, samples[k]);
        auto c = sample_bulk(coarse, samples[k]);
        if (prolong) c = P.apply(c);
        if (c.size() != f.size()) throw std::invalid_argument("l2l2_error: snapshot size mismatch");
        for (std::size_t i = 0; i < f.size(); ++i) f[i] -= c[i];
        err_bulk[k] = l2_squared_bulk(mesh, f);
        err_bnd[k] = l2_squared_bnd(mesh, bnd, f);
    }
    SpaceTimeError e;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const double dt = samples[k] - samples[k - 1];
        e.bulk += 0.5 * dt * (err_bulk[k - 1] + err_bulk[k]);
        e.bnd += 0.5 * dt * (err_bnd[k - 1] + err_bnd[k]);
    }
    e.bulk = std::sqrt(e.bulk);
    e.bnd = std::sqrt(e.bnd);
    return e;
}

std::vector<double> compute_eoc(std::span<const std::pair<double, double>> errors) {
    if (errors.size() < 2) throw std::invalid_argument("compute_eoc needs at least two rows");
    for (const auto& [p, e] : errors) {
        if (!(p > 0.0) || !(e > 0.0)) {
            throw std::invalid_argument("compute_eoc needs positive parameters and errors");
        }
    }
    std::vector<double> out;
    for (std::size_t k = 1; k < errors.size(); ++k) {
        const double dp = std::log(errors[k].first / errors[k - 1].first);
        if (dp == 0.0) throw std::invalid_argument("compute_eoc: repeated parameter value");
        out.push_back(std::log(errors[k].second / errors[k - 1].second) / dp);
    }
    return out;
}

EocAxis parse_axis(const std::string& name) {
    if (name == "h") return EocAxis::h;
    if (name == "tau") return EocAxis::tau;
    if (name == "xi") return EocAxis::xi;
    if (name == "xi_inverse" || name == "xi-inverse") return EocAxis::xi_inverse;
    throw std::invalid_argument("unknown EOC axis '" + name + "' (h | tau | xi | xi-inverse)");
}

std::string to_string(EocAxis axis) {
    switch (axis) {
        case EocAxis::h: return "h";
        case EocAxis::tau: return "tau";
        case EocAxis::xi: return "xi";
        case EocAxis::xi_inverse: return "xi_inverse";
    }
    return "?";
}

void fill_eoc(EocReport& report) {
    if (report.rows.size() < 2) return;
    std::vector<std::pair<double, double>> bulk, bnd;
    for (const auto& r : report.rows) {
        bulk.emplace_back(r.parameter, r.error_bulk);
        bnd.emplace_back(r.parameter, r.error_bnd);
    }
    const auto eb = compute_eoc(bulk);
    const auto eg = compute_eoc(bnd);
    for (std::size_t k = 1; k < report.rows.size(); ++k) {
        report.rows[k].eoc_bulk = eb[k - 1];
        report.rows[k].eoc_bnd = eg[k - 1];
    }
}

std::string EocReport::to_csv() const {
    std::ostringstream out;
    out << "axis,parameter,error_bulk,error_bnd,eoc_bulk,eoc_bnd\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,", to_string(axis).c_str(), r.parameter,
                      r.error_bulk, r.error_bnd);
        out << buf;
        if (std::isnan(r.eoc_bulk)) {
            out << ",\n";
        } else {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.eoc_bulk, r.eoc_bnd);
            out << buf;
        }
    }
    return out.str();
}

Trajectory simulate_trajectory(const Scenario& scenario, const Params& params, int level,
                               double snapshot_interval, const SolverOptions& solver) {
    const auto [mesh, bnd] = build_unit_square_mesh(level);
    const auto ops = assemble_operators(mesh, bnd);
    const auto dw_bulk = DoubleWell::with_integrated_shift(scenario.shift_bulk, ops.area);
    const auto dw_bnd = DoubleWell::with_integrated_shift(scenario.shift_bnd, ops.perimeter);
    TrajectoryRecorder recorder(ops, level, params.tau, snapshot_interval);
    StepObserver* sinks[] = {&recorder};
    RunOptions options;
    options.solver = solver;
    run(ops, params, dw_bulk, dw_bnd, interpolate(mesh, scenario.phi0), sinks, options);
    return recorder.take();
}

namespace {

struct Job {
    Params params;
    int level;
};

std::vector<Trajectory> run_jobs(const EocStudy& study, const std::vector<Job>& jobs) {
    std::vector<Trajectory> out(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            try {
                out[k] = simulate_trajectory(study.scenario, jobs[k].params, jobs[k].level, study.sample_step,
                                             study.solver);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(study.threads, 1, static_cast<int>(jobs.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace

EocReport run_eoc_study(const EocStudy& study) {
    study.params.validate();
    EocReport report;
    report.axis = study.axis;
    std::vector<Job> jobs;
    std::vector<double> parameters;
    switch (study.axis) {
        case EocAxis::h:
            for (int l : study.levels) {
                if (l >= study.reference_level) throw std::invalid_argument("h-study levels must be below the reference level");
                jobs.push_back({study.params, l});
                parameters.push_back(std::sqrt(2.0) * std::ldexp(1.0, -l));
            }
            jobs.push_back({study.params, study.reference_level});
            break;
        case EocAxis::tau:
            for (double tau : study.taus) {
                Params p = study.params;
                p.tau = tau;
                jobs.push_back({p, study.level});
                parameters.push_back(tau);
            }
            {
                Params p = study.params;
                p.tau = study.reference_tau;
                jobs.push_back({p, study.level});
            }
            break;
        case EocAxis::xi:
        case EocAxis::xi_inverse:
            for (double v : study.xis) {
                if (!(v > 0.0)) throw std::invalid_argument("xi-study values must be positive");
                Params p = study.params;
                p.xi = study.axis == EocAxis::xi ? v : 1.0 / v;
                jobs.push_back({p, study.level});
                parameters.push_back(v);
            }
            {
                Params p = study.params;
                p.xi = study.axis == EocAxis::xi ? 0.0 : kInfiniteXi;
                jobs.push_back({p, study.level});
            }
            break;
    }
    const auto trajectories = run_jobs(study, jobs);
    const Trajectory& reference = trajectories.back();
    for (std::size_t k = 0; k < parameters.size(); ++k) {
        const auto e = l2l2_error(trajectories[k], reference, study.sample_step);
        report.rows.push_back({parameters[k], e.bulk, e.bnd});
    }
    if (report.rows.size() >= 2) fill_eoc(report);
    return report;
}

std::vector<ReferenceTable> reference_tables() {
    const double h7 = std::sqrt(2.0) * std::ldexp(1.0, -7);
    const double h6 = std::sqrt(2.0) * std::ldexp(1.0, -6);
    const std::vector<double> xi{1e-4, 2e-4, 3e-4, 4e-4, 5e-4, 7.5e-4, 1e-3, 1e-2, 1e-1, 1.0};
    return {
        {"h (separation)", EocAxis::h, {h7, h6}, {6.28e-3, 3.06e-2}, {8.33e-2, 1.82e-1}, {2.28}, {1.13}},
        {"tau (separation)", EocAxis::tau, {2e-5, 4e-5}, {4.79e-3, 1.44e-2}, {2.48e-2, 7.38e-2}, {1.59}, {1.58}},
        {"xi -> 0 (adsorption)", EocAxis::xi, xi,
         {3.11e-4, 6.20e-4, 9.29e-4, 1.24e-3, 1.54e-3, 2.31e-3, 3.07e-3, 2.72e-2, 1.40e-1, 3.73e-1},
         {3.54e-4, 7.07e-4, 1.06e-3, 1.41e-3, 1.76e-3, 2.64e-3, 3.50e-3, 3.21e-2, 1.96e-1, 6.09e-1},
         {1.00, 1.00, 1.00, 0.99, 0.99, 0.99, 0.95, 0.71, 0.42},
         {1.00, 1.00, 1.00, 1.00, 0.99, 0.99, 0.96, 0.77, 0.49}},
        {"1/xi -> 0 (adsorption)", EocAxis::xi_inverse, xi,
         {2.85e-4, 5.69e-4, 8.52e-4, 1.13e-3, 1.42e-3, 2.12e-3, 2.81e-3, 2.54e-2, 1.54e-1, 4.02e-1},
         {4.83e-4, 9.64e-4, 1.44e-3, 1.92e-3, 2.40e-3, 3.59e-3, 4.77e-3, 4.31e-2, 2.64e-1, 7.10e-1},
         {1.00, 1.00, 1.00, 0.99, 0.99, 0.99, 0.96, 0.78, 0.42},
         {1.00, 1.00, 1.00, 0.99, 0.99, 0.99, 0.96, 0.79, 0.43}},
    };
}

int threads_from_environment() {
    const char* env = std::getenv("CHSAV_NUM_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

}  // namespace chsav

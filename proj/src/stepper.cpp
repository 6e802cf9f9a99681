#include "chsav/stepper.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chsav {

void Params::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("parameter '") + name + "' must be positive and finite");
        }
    };
    positive(m, "m");
    positive(m_gamma, "m_gamma");
    positive(epsilon, "epsilon");
    positive(sigma, "sigma");
    positive(delta, "delta");
    positive(beta, "beta");
    positive(tau, "tau");
    positive(t_end, "t_end");
    if (!(xi >= 0.0)) throw std::invalid_argument("parameter 'xi' must be in [0, inf]");
}

std::pair<double, double> xi_weights(double xi) {
    if (std::isinf(xi)) return {0.0, 1.0};
    return {1.0 / (1.0 + xi), xi / (1.0 + xi)};
}

SolverKind parse_solver_kind(const std::string& name) {
    if (name == "bordered_lu" || name == "lu") return SolverKind::bordered_lu;
    if (name == "full_lu") return SolverKind::full_lu;
    if (name == "gmres") return SolverKind::gmres;
    throw std::invalid_argument("unknown solver '" + name + "' (bordered_lu | full_lu | gmres)");
}

std::string to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::bordered_lu: return "bordered_lu";
        case SolverKind::full_lu: return "full_lu";
        case SolverKind::gmres: return "gmres";
    }
    return "?";
}

State init_state(const FemOperators& ops, const DoubleWell& dw_bulk, const DoubleWell& dw_bnd,
                 std::vector<double> phi0) {
    if (phi0.size() != ops.num_bulk()) throw std::invalid_argument("initial phi has wrong length");
    for (double v : phi0) {
        if (!std::isfinite(v)) throw std::invalid_argument("initial phi contains non-finite values");
    }
    State s;
    const auto phi_bnd = ops.restrict_to_boundary(phi0);
    s.r = sav_radius(discrete_energy_bulk(ops, dw_bulk, phi0), energy_floor(dw_bulk, ops.area));
    s.s = sav_radius(discrete_energy_bnd(ops, dw_bnd, phi_bnd), energy_floor(dw_bnd, ops.perimeter));
    s.phi = std::move(phi0);
    s.mu.assign(ops.num_bulk(), 0.0);
    s.theta.assign(ops.num_bnd(), 0.0);
    return s;
}

namespace {

// Entries of rows (A)-(C) that do not depend on the previous state.
std::vector<Triplet> constant_block(const FemOperators& ops, const Params& p, const StepLayout& L) {
    const auto [w1, w2] = xi_weights(p.xi);
    const int nb = L.n_bnd;
    std::vector<Triplet> t;
    t.reserve(3 * ops.k_bulk.nonzeros() + 8 * ops.k_bnd.nonzeros() + 8 * nb + 2 * L.n_bulk);

    // (A): (M + T'MbT/beta) phi + tau m K mu + tau m_G/beta T'Kb theta
    for (int i = 0; i < L.n_bulk; ++i) t.push_back({L.phi() + i, L.phi() + i, ops.ml_bulk[i]});
    for (int j = 0; j < nb; ++j) {
        const int v = ops.trace[j];
        t.push_back({L.phi() + v, L.phi() + v, ops.ml_bnd[j] / p.beta});
    }
    for (const auto& k : ops.k_bulk.to_triplets()) {
        t.push_back({L.phi() + k.row, L.mu() + k.col, p.tau * p.m * k.value});
    }
    const auto kb = ops.k_bnd.to_triplets();
    for (const auto& k : kb) {
        t.push_back({L.phi() + ops.trace[k.row], L.theta() + k.col, p.tau * p.m_gamma / p.beta * k.value});
    }

    // (B): w1 [Mb T phi / tau + m_G Kb theta] + w2 beta m Mb (beta theta - T mu)
    for (int j = 0; j < nb; ++j) {
        const int v = ops.trace[j];
        if (w1 != 0.0) t.push_back({L.theta() + j, L.phi() + v, w1 * ops.ml_bnd[j] / p.tau});
        if (w2 != 0.0) {
            t.push_back({L.theta() + j, L.theta() + j, w2 * p.beta * p.m * p.beta * ops.ml_bnd[j]});
            t.push_back({L.theta() + j, L.mu() + v, -w2 * p.beta * p.m * ops.ml_bnd[j]});
        }
    }
    if (w1 != 0.0) {
        for (const auto& k : kb) t.push_back({L.theta() + k.row, L.theta() + k.col, w1 * p.m_gamma * k.value});
    }

    // (C): M mu + T'Mb theta - eps sigma K phi - delta T'KbT phi
    for (int i = 0; i < L.n_bulk; ++i) t.push_back({L.mu() + i, L.mu() + i, ops.ml_bulk[i]});
    for (int j = 0; j < nb; ++j) t.push_back({L.mu() + ops.trace[j], L.theta() + j, ops.ml_bnd[j]});
    for (const auto& k : ops.k_bulk.to_triplets()) {
        t.push_back({L.mu() + k.row, L.phi() + k.col, -p.epsilon * p.sigma * k.value});
    }
    for (const auto& k : kb) {
        t.push_back({L.mu() + ops.trace[k.row], L.phi() + ops.trace[k.col], -p.delta * k.value});
    }
    return t;
}

// Step-dependent SAV coupling: columns u_r, u_s (rows C) and rows v_r, v_s
// (acting on phi), all indexed over the (phi, mu, theta) block.
struct Border {
    std::vector<double> u_r, u_s, v_r, v_s;
    std::vector<double> rhs_block;  // right-hand side of rows (A)-(C)
    double g_r = 0.0, g_s = 0.0;    // right-hand sides of rows (D), (E)
};

Border make_border(const FemOperators& ops, const Params& p, const DoubleWell& dw_bulk,
                   const DoubleWell& dw_bnd, const State& prev, const StepLayout& L) {
    if (prev.phi.size() != ops.num_bulk()) throw std::invalid_argument("state phi has wrong length");
    const auto phi_bnd = ops.restrict_to_boundary(prev.phi);
    const double e_bulk = discrete_energy_bulk(ops, dw_bulk, prev.phi);
    const double e_bnd = discrete_energy_bnd(ops, dw_bnd, phi_bnd);
    const double sq_bulk = sav_radius(e_bulk, energy_floor(dw_bulk, ops.area));
    const double sq_bnd = sav_radius(e_bnd, energy_floor(dw_bnd, ops.perimeter));
    const auto b = nodal_force_bulk(ops, dw_bulk, prev.phi);
    const auto bg = ops.extend_from_boundary(nodal_force_bnd(ops, dw_bnd, phi_bnd));

    const int size = L.size() - 2;
    Border B;
    B.u_r.assign(size, 0.0);
    B.u_s.assign(size, 0.0);
    B.v_r.assign(size, 0.0);
    B.v_s.assign(size, 0.0);
    for (int i = 0; i < L.n_bulk; ++i) {
        B.u_r[L.mu() + i] = -p.sigma / p.epsilon * b[i] / sq_bulk;
        B.u_s[L.mu() + i] = -bg[i] / (p.delta * sq_bnd);
        B.v_r[L.phi() + i] = -b[i] / (2.0 * sq_bulk);
        B.v_s[L.phi() + i] = -bg[i] / (2.0 * sq_bnd);
    }

    const auto [w1, w2] = xi_weights(p.xi);
    (void)w2;
    B.rhs_block.assign(size, 0.0);
    for (int i = 0; i < L.n_bulk; ++i) B.rhs_block[L.phi() + i] = ops.ml_bulk[i] * prev.phi[i];
    for (int j = 0; j < L.n_bnd; ++j) {
        const int v = ops.trace[j];
        B.rhs_block[L.phi() + v] += ops.ml_bnd[j] / p.beta * prev.phi[v];
        B.rhs_block[L.theta() + j] = w1 * ops.ml_bnd[j] / p.tau * prev.phi[v];
    }
    B.g_r = prev.r - dot(b, prev.phi) / (2.0 * sq_bulk);
    B.g_s = prev.s - dot(bg, prev.phi) / (2.0 * sq_bnd);
    return B;
}

Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& m) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(m.nonzeros());
    for (const auto& e : m.to_triplets()) t.emplace_back(e.row, e.col, e.value);
    Eigen::SparseMatrix<double> out(m.rows(), m.cols());
    out.setFromTriplets(t.begin(), t.end());
    out.makeCompressed();
    return out;
}

StepSolution unpack(const StepLayout& L, std::span<const double> x) {
    StepSolution s;
    s.phi.assign(x.begin() + L.phi(), x.begin() + L.phi() + L.n_bulk);
    s.mu.assign(x.begin() + L.mu(), x.begin() + L.mu() + L.n_bulk);
    s.theta.assign(x.begin() + L.theta(), x.begin() + L.theta() + L.n_bnd);
    s.r = x[L.r()];
    s.s = x[L.s()];
    return s;
}

using SparseLu = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

}  // namespace

StepSystem assemble_step_system(const FemOperators& ops, const Params& params,
                                const DoubleWell& dw_bulk, const DoubleWell& dw_bnd,
                                const State& prev) {
    params.validate();
    StepLayout L{static_cast<int>(ops.num_bulk()), static_cast<int>(ops.num_bnd())};
    auto t = constant_block(ops, params, L);
    const Border B = make_border(ops, params, dw_bulk, dw_bnd, prev, L);
    for (int k = 0; k < L.size() - 2; ++k) {
        if (B.u_r[k] != 0.0) t.push_back({k, L.r(), B.u_r[k]});
        if (B.u_s[k] != 0.0) t.push_back({k, L.s(), B.u_s[k]});
        if (B.v_r[k] != 0.0) t.push_back({L.r(), k, B.v_r[k]});
        if (B.v_s[k] != 0.0) t.push_back({L.s(), k, B.v_s[k]});
    }
    t.push_back({L.r(), L.r(), 1.0});
    t.push_back({L.s(), L.s(), 1.0});

    StepSystem sys;
    sys.layout = L;
    sys.matrix = SparseMatrix::from_triplets(L.size(), L.size(), std::move(t));
    sys.rhs = B.rhs_block;
    sys.rhs.push_back(B.g_r);
    sys.rhs.push_back(B.g_s);
    return sys;
}

StepSolution solve_step(const StepSystem& system) {
    return solve_step(system, std::vector<double>(system.rhs.size(), 0.0));
}

StepSolution solve_step(const StepSystem& system, std::span<const double> guess) {
    if (guess.size() != system.rhs.size()) throw std::invalid_argument("initial guess has wrong length");
    const auto A = to_eigen(system.matrix);
    SparseLu lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
        throw StepError("sparse LU failed on the step system (singular matrix): " + lu.lastErrorMessage());
    }
    std::vector<double> xv(guess.begin(), guess.end());
    auto residual_of = [&](std::vector<double>& res) {
        res = system.matrix.multiply(xv);
        for (std::size_t i = 0; i < res.size(); ++i) res[i] -= system.rhs[i];
        return norm_inf(res);
    };
    const double tol = 1e-11 * (1.0 + norm_inf(system.rhs));
    std::vector<double> res;
    double residual = residual_of(res);
    // Correction solves; the first one is the actual solve.
    for (int it = 0; it < 4 && (it == 0 || residual > tol); ++it) {
        const Eigen::Map<const Eigen::VectorXd> r(res.data(), static_cast<Eigen::Index>(res.size()));
        const Eigen::VectorXd d = lu.solve(r);
        if (lu.info() != Eigen::Success || !d.allFinite()) throw StepError("sparse LU solve failed");
        for (std::size_t i = 0; i < xv.size(); ++i) xv[i] -= d[static_cast<Eigen::Index>(i)];
        residual = residual_of(res);
    }
    if (!(residual <= tol)) {
        std::ostringstream msg;
        msg << "step system residual " << residual << " above tolerance (ill-conditioned matrix)";
        throw StepError(msg.str());
    }
    auto sol = unpack(system.layout, xv);
    sol.residual = residual;
    return sol;
}

struct Stepper::Impl {
    const FemOperators* ops;
    Params params;
    DoubleWell dw_bulk;
    DoubleWell dw_bnd;
    SolverOptions options;
    StepLayout layout;
    SparseMatrix block;  // rows/cols (phi, mu, theta)
    Eigen::SparseMatrix<double> block_eigen;
    std::unique_ptr<SparseLu> lu;
    std::unique_ptr<Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>> gmres;
    mutable double last_residual = 0.0;

    Impl(const FemOperators& o, const Params& p, DoubleWell b, DoubleWell g, SolverOptions opt)
        : ops(&o), params(p), dw_bulk(b), dw_bnd(g), options(opt) {
        params.validate();
        layout = {static_cast<int>(o.num_bulk()), static_cast<int>(o.num_bnd())};
        if (options.kind == SolverKind::full_lu) return;
        const int n = layout.size() - 2;
        block = SparseMatrix::from_triplets(n, n, constant_block(o, params, layout));
        block_eigen = to_eigen(block);
        if (options.kind == SolverKind::bordered_lu) {
            lu = std::make_unique<SparseLu>();
            lu->compute(block_eigen);
            if (lu->info() != Eigen::Success) {
                throw StepError("sparse LU of the step operator failed: " + lu->lastErrorMessage());
            }
        } else {
            gmres = std::make_unique<Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>>();
            gmres->preconditioner().setDroptol(1e-6);
            gmres->preconditioner().setFillfactor(20);
            gmres->set_restart(options.gmres_restart);
            gmres->setMaxIterations(options.gmres_max_iter);
            gmres->setTolerance(options.gmres_tol);
            gmres->compute(block_eigen);
            if (gmres->info() != Eigen::Success) throw StepError("ILUT preconditioner setup failed");
        }
    }

    Eigen::VectorXd block_solve(const std::vector<double>& rhs) const {
        const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        Eigen::VectorXd x;
        if (lu) {
            x = lu->solve(b);
            if (lu->info() != Eigen::Success) throw StepError("sparse LU back-substitution failed");
        } else {
            x = gmres->solve(b);
            if (gmres->info() != Eigen::Success) {
                throw StepError("GMRES did not converge (" + std::to_string(gmres->iterations()) +
                                " iterations, error " + std::to_string(gmres->error()) + ")");
            }
        }
        return x;
    }

    State step_bordered(const State& prev) const {
        const auto& L = layout;
        const Border B = make_border(*ops, params, dw_bulk, dw_bnd, prev, L);
        const int n = L.size() - 2;

        // Residual of the full augmented system at (x, z).
        auto residual = [&](const std::vector<double>& x, double zr, double zs,
                            std::vector<double>& rx, double& rr, double& rs) {
            rx = block.multiply(x);
            for (int k = 0; k < n; ++k) rx[k] += B.u_r[k] * zr + B.u_s[k] * zs - B.rhs_block[k];
            rr = dot(B.v_r, x) + zr - B.g_r;
            rs = dot(B.v_s, x) + zs - B.g_s;
        };

        const Eigen::VectorXd y_r = block_solve(B.u_r);
        const Eigen::VectorXd y_s = block_solve(B.u_s);
        const Eigen::Map<const Eigen::VectorXd> v_r(B.v_r.data(), n);
        const Eigen::Map<const Eigen::VectorXd> v_s(B.v_s.data(), n);
        // Schur complement of the block: S = I - V' A^{-1} U
        const double s11 = 1.0 - v_r.dot(y_r), s12 = -v_r.dot(y_s);
        const double s21 = -v_s.dot(y_r), s22 = 1.0 - v_s.dot(y_s);
        const double det = s11 * s22 - s12 * s21;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
            throw StepError("singular SAV Schur complement at step " + std::to_string(prev.n + 1));
        }

        auto bordered_solve = [&](const std::vector<double>& f, double gr, double gs,
                                  std::vector<double>& x, double& zr, double& zs) {
            const Eigen::VectorXd y_f = block_solve(f);
            const double hr = gr - v_r.dot(y_f);
            const double hs = gs - v_s.dot(y_f);
            zr = (s22 * hr - s12 * hs) / det;
            zs = (s11 * hs - s21 * hr) / det;
            x.resize(n);
            for (int k = 0; k < n; ++k) x[k] = y_f[k] - y_r[k] * zr - y_s[k] * zs;
        };

        // Solve for the increment from the previous state, so that states that
        // are stationary up to roundoff stay stationary.
        std::vector<double> x(n, 0.0);
        std::copy(prev.phi.begin(), prev.phi.end(), x.begin() + L.phi());
        double zr = prev.r, zs = prev.s;

        double rhs_norm = std::max({norm_inf(B.rhs_block), std::abs(B.g_r), std::abs(B.g_s)});
        const double tol = options.residual_tol * (1.0 + rhs_norm);
        std::vector<double> rx;
        double rr = 0.0, rs = 0.0;
        residual(x, zr, zs, rx, rr, rs);
        double res = std::max({norm_inf(rx), std::abs(rr), std::abs(rs)});
        // Correction solves with the same factorization; the first one is the actual solve.
        for (int it = 0; it < 4 && (it == 0 || res > tol) && std::isfinite(res); ++it) {
            std::vector<double> dx;
            double dr = 0.0, ds = 0.0;
            bordered_solve(rx, rr, rs, dx, dr, ds);
            for (int k = 0; k < n; ++k) x[k] -= dx[k];
            zr -= dr;
            zs -= ds;
            residual(x, zr, zs, rx, rr, rs);
            res = std::max({norm_inf(rx), std::abs(rr), std::abs(rs)});
        }
        if (!(res <= tol)) {
            std::ostringstream msg;
            msg << "step " << prev.n + 1 << ": residual " << res << " above tolerance " << tol;
            throw StepError(msg.str());
        }
        last_residual = res;

        std::vector<double> full(x);
        full.push_back(zr);
        full.push_back(zs);
        StepSolution sol = unpack(L, full);
        State next;
        next.phi = std::move(sol.phi);
        next.mu = std::move(sol.mu);
        next.theta = std::move(sol.theta);
        next.r = sol.r;
        next.s = sol.s;
        return next;
    }

    State step(const State& prev) const {
        State next;
        if (options.kind == SolverKind::full_lu) {
            auto sys = assemble_step_system(*ops, params, dw_bulk, dw_bnd, prev);
            std::vector<double> guess(sys.rhs.size(), 0.0);
            std::copy(prev.phi.begin(), prev.phi.end(), guess.begin() + layout.phi());
            guess[layout.r()] = prev.r;
            guess[layout.s()] = prev.s;
            auto sol = solve_step(sys, guess);
            last_residual = sol.residual;
            next.phi = std::move(sol.phi);
            next.mu = std::move(sol.mu);
            next.theta = std::move(sol.theta);
            next.r = sol.r;
            next.s = sol.s;
        } else {
            next = step_bordered(prev);
        }
        next.n = prev.n + 1;
        next.t = prev.t + params.tau;
        auto finite = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
        };
        if (!finite(next.phi) || !finite(next.mu) || !finite(next.theta) || !std::isfinite(next.r) ||
            !std::isfinite(next.s)) {
            throw StepError("non-finite values produced at step " + std::to_string(next.n));
        }
        return next;
    }
};

Stepper::Stepper(const FemOperators& ops, const Params& params, DoubleWell dw_bulk, DoubleWell dw_bnd,
                 SolverOptions options)
    : impl_(std::make_unique<Impl>(ops, params, dw_bulk, dw_bnd, options)) {}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

State Stepper::step(const State& prev) const { return impl_->step(prev); }
double Stepper::last_residual() const { return impl_->last_residual; }
const Params& Stepper::params() const { return impl_->params; }

std::pair<long, double> step_count(double t_end, double tau) {
    const double ratio = t_end / tau;
    const double rounded = std::round(ratio);
    if (rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-12 * ratio) return {static_cast<long>(rounded), tau};
    const long n = static_cast<long>(std::ceil(ratio));
    return {n, t_end - static_cast<double>(n - 1) * tau};
}

State run(const FemOperators& ops, const Params& params, const DoubleWell& dw_bulk,
          const DoubleWell& dw_bnd, std::vector<double> phi0,
          std::span<StepObserver* const> sinks, const RunOptions& options) {
    params.validate();
    const auto [steps, last_tau] = step_count(params.t_end, params.tau);
    const bool truncated = last_tau != params.tau;
    if (truncated && options.warnings) {
        std::ostringstream msg;
        msg << "t_end " << params.t_end << " is not a multiple of tau " << params.tau
            << "; last step shortened to " << last_tau;
        options.warnings->push_back(msg.str());
    }

    State state = init_state(ops, dw_bulk, dw_bnd, std::move(phi0));
    for (auto* sink : sinks) sink->on_start(state);

    Stepper stepper(ops, params, dw_bulk, dw_bnd, options.solver);
    std::unique_ptr<Stepper> last_stepper;
    if (truncated) {
        Params p = params;
        p.tau = last_tau;
        last_stepper = std::make_unique<Stepper>(ops, p, dw_bulk, dw_bnd, options.solver);
    }
    for (long k = 1; k <= steps; ++k) {
        const Stepper& active = (truncated && k == steps) ? *last_stepper : stepper;
        State next;
        try {
            next = active.step(state);
        } catch (const EnergyFloorError& e) {
            throw StepError("step " + std::to_string(k) + ": " + e.what());
        }
        next.t = (k == steps) ? params.t_end : static_cast<double>(k) * params.tau;
        for (auto* sink : sinks) sink->on_step(state, next);
        state = std::move(next);
    }
    for (auto* sink : sinks) sink->on_finish(state);
    return state;
}

}  // namespace chsav

/// @file stepper.hpp
/// @brief Linear SAV time stepping for Cahn-Hilliard with Cahn-Hilliard-type
/// dynamic boundary conditions, for adsorption rates xi in [0, inf].
///
/// One step solves for (phi^n, mu^n, theta^n, r^n, s^n) given (phi^{n-1}, r^{n-1}, s^{n-1}).
/// With T the trace, M/Mb the lumped masses, K/Kb the stiffness matrices, b/bg the
/// nodal forces at phi^{n-1}, E/Eg the lumped potential energies at phi^{n-1} and
/// (w1, w2) = (1/(1+xi), xi/(1+xi)) ((0, 1) at xi = inf):
///
///   (A)  (M + T'MbT/beta)(phi^n - phi^{n-1}) + tau m K mu + tau m_G/beta T'Kb theta = 0
///   (B)  w1 [Mb T(phi^n - phi^{n-1})/tau + m_G Kb theta] + w2 beta m Mb (beta theta - T mu) = 0
///   (C)  M mu + T'Mb theta - eps sigma K phi - delta T'KbT phi
///          - (sigma/eps) b r / sqrt(E) - (1/delta) T'bg s / sqrt(Eg) = 0
///   (D)  r - b.phi / (2 sqrt(E))   = r^{n-1} - b.phi^{n-1} / (2 sqrt(E))
///   (E)  s - bg.T phi / (2 sqrt(Eg)) = s^{n-1} - bg.T phi^{n-1} / (2 sqrt(Eg))
///
/// Row (A) is the time-scaled sum of the bulk and boundary mass balances; the
/// unknown vector is laid out as [phi | mu | theta | r | s].
#pragma once

#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chsav/fem.hpp"
#include "chsav/potential.hpp"
#include "chsav/sparse.hpp"

namespace chsav {

inline constexpr double kInfiniteXi = std::numeric_limits<double>::infinity();

struct Params {
    double m = 0.01;
    double m_gamma = 0.02;
    double epsilon = 0.02;
    double sigma = 2.0;
    double delta = 0.02;
    double beta = 1.0;
    double xi = 0.0;  // may be kInfiniteXi
    double tau = 2e-5;
    double t_end = 1.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    bool operator==(const Params&) const = default;
};

/// (w1, w2) = (1/(1+xi), xi/(1+xi)), with (0, 1) at xi = inf.
std::pair<double, double> xi_weights(double xi);

struct State {
    std::vector<double> phi;    // bulk nodal values
    std::vector<double> mu;     // bulk nodal values
    std::vector<double> theta;  // boundary nodal values
    double r = 0.0;
    double s = 0.0;
    double t = 0.0;
    long n = 0;
};

struct StepLayout {
    int n_bulk = 0;
    int n_bnd = 0;

    [[nodiscard]] int phi() const { return 0; }
    [[nodiscard]] int mu() const { return n_bulk; }
    [[nodiscard]] int theta() const { return 2 * n_bulk; }
    [[nodiscard]] int r() const { return 2 * n_bulk + n_bnd; }
    [[nodiscard]] int s() const { return 2 * n_bulk + n_bnd + 1; }
    [[nodiscard]] int size() const { return 2 * n_bulk + n_bnd + 2; }
};

struct StepSystem {
    SparseMatrix matrix;
    std::vector<double> rhs;
    StepLayout layout;
};

struct StepSolution {
    std::vector<double> phi;
    std::vector<double> mu;
    std::vector<double> theta;
    double r = 0.0;
    double s = 0.0;
    double residual = 0.0;  // ||A x - rhs||_inf of the full augmented system
};

class StepError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// phi^0 = nodal values, r^0 = sqrt(E_bulk(phi^0)), s^0 = sqrt(E_bnd(T phi^0)); mu, theta zero.
State init_state(const FemOperators& ops, const DoubleWell& dw_bulk, const DoubleWell& dw_bnd,
                 std::vector<double> phi0);

StepSystem assemble_step_system(const FemOperators& ops, const Params& params,
                                const DoubleWell& dw_bulk, const DoubleWell& dw_bnd,
                                const State& prev);

/// Direct sparse LU solve of the full augmented system. The residual is
/// checked against 1e-11 (1 + ||rhs||_inf); failure throws StepError.
StepSolution solve_step(const StepSystem& system);
/// Same, solving for the correction to @p guess (e.g. the previous state).
StepSolution solve_step(const StepSystem& system, std::span<const double> guess);

enum class SolverKind {
    bordered_lu,  // factor the constant block once, eliminate r and s per step
    full_lu,      // refactor the full augmented matrix every step
    gmres,        // restarted GMRES + ILUT on the constant block, bordered elimination
};

struct SolverOptions {
    SolverKind kind = SolverKind::bordered_lu;
    double residual_tol = 1e-11;
    double gmres_tol = 1e-14;
    int gmres_restart = 60;
    int gmres_max_iter = 5000;
};

SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

/// Advances states for fixed operators, parameters and time increment.
/// Factorizations of the step-independent block are built once and reused.
class Stepper {
public:
    Stepper(const FemOperators& ops, const Params& params, DoubleWell dw_bulk, DoubleWell dw_bnd,
            SolverOptions options = {});
    ~Stepper();
    Stepper(Stepper&&) noexcept;
    Stepper& operator=(Stepper&&) noexcept;
    Stepper(const Stepper&) = delete;
    Stepper& operator=(const Stepper&) = delete;

    /// Returns the state at t + tau. Throws StepError on non-finite output or
    /// a residual above tolerance, EnergyFloorError if the lumped energy of
    /// prev.phi is below half its shift floor.
    [[nodiscard]] State step(const State& prev) const;

    [[nodiscard]] double last_residual() const;
    [[nodiscard]] const Params& params() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Receives the trajectory as it is produced. States are immutable snapshots.
class StepObserver {
public:
    virtual ~StepObserver() = default;
    virtual void on_start(const State& initial) { (void)initial; }
    virtual void on_step(const State& prev, const State& next) = 0;
    virtual void on_finish(const State& final_state) { (void)final_state; }
};

struct RunOptions {
    SolverOptions solver;
    std::vector<std::string>* warnings = nullptr;
};

/// Integrates from t = 0 to params.t_end. If t_end is not a multiple of tau
/// (1e-12 relative) the last step is shortened and a warning is emitted.
State run(const FemOperators& ops, const Params& params, const DoubleWell& dw_bulk,
          const DoubleWell& dw_bnd, std::vector<double> phi0,
          std::span<StepObserver* const> sinks, const RunOptions& options = {});

/// Number of uniform steps and the length of the last one.
std::pair<long, double> step_count(double t_end, double tau);

}  // namespace chsav

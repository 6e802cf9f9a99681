/// @file eoc.hpp
/// @brief Space-time L2 errors between runs and experimental orders of convergence.
///
/// Errors are L2(0,T; L2) norms of the difference of two trajectories. The
/// coarser trajectory is prolonged to the finer unit-square mesh (exact for
/// nested P1 spaces), both are interpolated linearly in time, and the squared
/// spatial norms are integrated with the trapezoidal rule.
#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chsav/scenario.hpp"
#include "chsav/stepper.hpp"

namespace chsav {

struct Trajectory {
    int level = 0;  // unit-square refinement level
    double tau = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> bulk;  // nodal phi
    std::vector<std::vector<double>> bnd;   // nodal phi on the boundary

    [[nodiscard]] double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

/// Records snapshots every @p interval time units (rounded to whole steps;
/// every step if the interval is not a multiple of tau), plus t = 0 and the
/// final state.
class TrajectoryRecorder : public StepObserver {
public:
    TrajectoryRecorder(const FemOperators& ops, int level, double tau, double interval);

    void on_start(const State& initial) override;
    void on_step(const State& prev, const State& next) override;
    void on_finish(const State& final_state) override;

    [[nodiscard]] const Trajectory& trajectory() const { return traj_; }
    Trajectory take() { return std::move(traj_); }

private:
    void record(const State& s);

    const FemOperators* ops_;
    long stride_ = 1;
    Trajectory traj_;
};

struct SpaceTimeError {
    double bulk = 0.0;
    double bnd = 0.0;
};

/// Throws std::invalid_argument for trajectories on non-unit-square meshes or
/// with different horizons.
SpaceTimeError l2l2_error(const Trajectory& a, const Trajectory& b, double sample_step = 2e-4);

/// Linear interpolation of the snapshots at time @p t.
std::vector<double> sample_bulk(const Trajectory& traj, double t);

/// eoc_k = log(e_k / e_{k-1}) / log(p_k / p_{k-1}) for k >= 1; the result has
/// one entry fewer than the input.
std::vector<double> compute_eoc(std::span<const std::pair<double, double>> errors);

enum class EocAxis { h, tau, xi, xi_inverse };
EocAxis parse_axis(const std::string& name);
std::string to_string(EocAxis axis);

struct EocRow {
    double parameter = 0.0;
    double error_bulk = 0.0;
    double error_bnd = 0.0;
    double eoc_bulk = std::nan("");  // undefined for the first row
    double eoc_bnd = std::nan("");
};

struct EocReport {
    EocAxis axis = EocAxis::h;
    std::vector<EocRow> rows;

    /// Columns: axis,parameter,error_bulk,error_bnd,eoc_bulk,eoc_bnd; EOC of
    /// the first row is empty.
    [[nodiscard]] std::string to_csv() const;
};

/// Fills the EOC columns from the error columns.
void fill_eoc(EocReport& report);

struct EocStudy {
    EocAxis axis = EocAxis::h;
    Scenario scenario = scenario_separation();
    Params params;                        // base parameters (tau, t_end, xi used per axis)
    std::vector<int> levels{4, 5};        // axis h: coarse levels
    int reference_level = 6;              // axis h: reference
    int level = 5;                        // axes tau, xi, xi_inverse
    std::vector<double> taus{2e-5, 4e-5}; // axis tau
    double reference_tau = 1e-5;          // axis tau
    std::vector<double> xis{1e-4, 2e-4, 4e-4};  // axis xi: xi values; xi_inverse: 1/xi values
    double sample_step = 2e-4;
    SolverOptions solver;
    int threads = 1;
};

/// Runs every simulation of the study (independent runs in parallel on
/// @p study.threads threads) and measures errors against the reference run:
/// the finest level (h), the smallest tau (tau), xi = 0 (xi) or xi = inf
/// (xi_inverse).
EocReport run_eoc_study(const EocStudy& study);

/// Simulates one scenario run on a unit-square mesh and records its trajectory.
Trajectory simulate_trajectory(const Scenario& scenario, const Params& params, int level,
                               double snapshot_interval, const SolverOptions& solver = {});

/// Error columns of published convergence tables with their printed EOC columns.
struct ReferenceTable {
    std::string name;
    EocAxis axis;
    std::vector<double> parameters;
    std::vector<double> errors_bulk;
    std::vector<double> errors_bnd;
    std::vector<double> printed_eoc_bulk;  // one entry fewer than parameters
    std::vector<double> printed_eoc_bnd;
};

std::vector<ReferenceTable> reference_tables();

/// Number of worker threads from CHSAV_NUM_THREADS (default 1).
int threads_from_environment();

}  // namespace chsav

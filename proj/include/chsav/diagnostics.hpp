/// @file diagnostics.hpp
/// @brief Energies, masses and the discrete dissipation identity.
#pragma once

#include <ostream>
#include <string>

#include "chsav/fem.hpp"
#include "chsav/potential.hpp"
#include "chsav/stepper.hpp"

namespace chsav {

/// Energy with the lumped potential integrals replaced by r^2 and s^2:
///   eps sigma/2 |grad phi|^2 + sigma/eps r^2 + delta/2 |grad_G phi|^2 + s^2/delta
double modified_energy(const FemOperators& ops, const Params& params, const State& state);

/// Same with the lumped potential energies of phi in place of r^2 and s^2.
double original_energy(const FemOperators& ops, const Params& params, const DoubleWell& dw_bulk,
                       const DoubleWell& dw_bnd, const State& state);

/// Signed defect of the one-step dissipation identity
///   [E~(next) - E~(prev)] + numerical dissipation + tau (m |grad mu|^2 + m_G |grad_G theta|^2)
///   + xi tau m |beta theta - T mu|^2_{lumped}  ==  0,
/// the jump term being dropped at xi = inf. The time increment is next.t - prev.t.
double energy_identity_residual(const FemOperators& ops, const Params& params, const State& prev,
                                const State& next);

struct Masses {
    double bulk = 0.0;
    double bnd = 0.0;
    double combined = 0.0;  // bulk + bnd / beta
};

Masses masses(const FemOperators& ops, const Params& params, const State& state);

/// Lumped L2 norm of beta theta - T mu on the boundary.
double jump_norm(const FemOperators& ops, const State& state, double beta);
/// Max nodal |beta theta - T mu|.
double max_jump(const FemOperators& ops, const State& state, double beta);

struct DiagnosticsRow {
    double t = 0.0;
    double e_mod = 0.0;
    double e_orig = 0.0;
    double mass_bulk = 0.0;
    double mass_bnd = 0.0;
    double mass_combined = 0.0;
    double r = 0.0;
    double s = 0.0;
    double diss_residual = 0.0;  // zero for the initial state
    double jump_norm = 0.0;      // zero for the initial state
};

/// Row for @p next; @p prev is null for the initial state.
DiagnosticsRow make_row(const FemOperators& ops, const Params& params, const DoubleWell& dw_bulk,
                        const DoubleWell& dw_bnd, const State* prev, const State& next);

inline constexpr const char* kDiagnosticsHeader =
    "t,E_mod,E_orig,mass_bulk,mass_bnd,mass_combined,r,s,diss_residual,jump_norm";

/// One CSV line (no newline), 17 significant digits.
std::string format_row(const DiagnosticsRow& row);

/// Step observer that writes diagnostics rows every @p every steps (and
/// always for the initial and final state).
class CsvDiagnosticsSink : public StepObserver {
public:
    CsvDiagnosticsSink(std::ostream& out, const FemOperators& ops, const Params& params,
                       const DoubleWell& dw_bulk, const DoubleWell& dw_bnd, long every = 1);

    void on_start(const State& initial) override;
    void on_step(const State& prev, const State& next) override;
    void on_finish(const State& final_state) override;

    [[nodiscard]] const std::vector<DiagnosticsRow>& rows() const { return rows_; }

private:
    std::ostream* out_;
    const FemOperators* ops_;
    Params params_;
    DoubleWell dw_bulk_;
    DoubleWell dw_bnd_;
    long every_;
    long last_written_ = -1;
    DiagnosticsRow pending_;
    long pending_n_ = -1;
    std::vector<DiagnosticsRow> rows_;
};

}  // namespace chsav

#include "chsav/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace chsav {

namespace {

// eps sigma/2 phi'K phi + delta/2 (T phi)'Kb (T phi)
double gradient_energy(const FemOperators& ops, const Params& p, std::span<const double> phi) {
    const auto tb = ops.restrict_to_boundary(phi);
    return 0.5 * p.epsilon * p.sigma * ops.k_bulk.bilinear(phi, phi) + 0.5 * p.delta * ops.k_bnd.bilinear(tb, tb);
}

}  // namespace

double modified_energy(const FemOperators& ops, const Params& params, const State& state) {
    return gradient_energy(ops, params, state.phi) + params.sigma / params.epsilon * state.r * state.r +
           state.s * state.s / params.delta;
}

double original_energy(const FemOperators& ops, const Params& params, const DoubleWell& dw_bulk,
                       const DoubleWell& dw_bnd, const State& state) {
    const auto tb = ops.restrict_to_boundary(state.phi);
    return gradient_energy(ops, params, state.phi) +
           params.sigma / params.epsilon * discrete_energy_bulk(ops, dw_bulk, state.phi) +
           discrete_energy_bnd(ops, dw_bnd, tb) / params.delta;
}

double energy_identity_residual(const FemOperators& ops, const Params& params, const State& prev,
                                const State& next) {
    // A shortened final step is recognized from the time stamps.
    double tau = params.tau;
    if (std::abs((next.t - prev.t) - tau) > 1e-9 * tau) tau = next.t - prev.t;
    std::vector<double> dphi(prev.phi.size());
    for (std::size_t i = 0; i < dphi.size(); ++i) dphi[i] = next.phi[i] - prev.phi[i];
    const double dr = next.r - prev.r;
    const double ds = next.s - prev.s;

    const double change = modified_energy(ops, params, next) - modified_energy(ops, params, prev);
    const double numerical = gradient_energy(ops, params, dphi) + params.sigma / params.epsilon * dr * dr +
                             ds * ds / params.delta;
    const double physical = tau * (params.m * ops.k_bulk.bilinear(next.mu, next.mu) +
                                   params.m_gamma * ops.k_bnd.bilinear(next.theta, next.theta));
    double exchange = 0.0;
    if (!std::isinf(params.xi) && params.xi != 0.0) {
        const double j = jump_norm(ops, next, params.beta);
        exchange = params.xi * tau * params.m * j * j;
    }
    return change + numerical + physical + exchange;
}

Masses masses(const FemOperators& ops, const Params& params, const State& state) {
    Masses m;
    m.bulk = lumped_integral_bulk(ops, state.phi);
    m.bnd = lumped_integral_bnd(ops, ops.restrict_to_boundary(state.phi));
    m.combined = m.bulk + m.bnd / params.beta;
    return m;
}

double jump_norm(const FemOperators& ops, const State& state, double beta) {
    double sum = 0.0;
    for (std::size_t j = 0; j < ops.num_bnd(); ++j) {
        const double d = beta * state.theta[j] - state.mu[ops.trace[j]];
        sum += ops.ml_bnd[j] * d * d;
    }
    return std::sqrt(sum);
}

double max_jump(const FemOperators& ops, const State& state, double beta) {
    double m = 0.0;
    for (std::size_t j = 0; j < ops.num_bnd(); ++j) {
        m = std::max(m, std::abs(beta * state.theta[j] - state.mu[ops.trace[j]]));
    }
    return m;
}

DiagnosticsRow make_row(const FemOperators& ops, const Params& params, const DoubleWell& dw_bulk,
                        const DoubleWell& dw_bnd, const State* prev, const State& next) {
    DiagnosticsRow row;
    row.t = next.t;
    row.e_mod = modified_energy(ops, params, next);
    row.e_orig = original_energy(ops, params, dw_bulk, dw_bnd, next);
    const auto m = masses(ops, params, next);
    row.mass_bulk = m.bulk;
    row.mass_bnd = m.bnd;
    row.mass_combined = m.combined;
    row.r = next.r;
    row.s = next.s;
    if (prev) {
        row.diss_residual = energy_identity_residual(ops, params, *prev, next);
        row.jump_norm = jump_norm(ops, next, params.beta);
    }
    return row;
}

std::string format_row(const DiagnosticsRow& row) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", row.t,
                  row.e_mod, row.e_orig, row.mass_bulk, row.mass_bnd, row.mass_combined, row.r, row.s,
                  row.diss_residual, row.jump_norm);
    return buf;
}

CsvDiagnosticsSink::CsvDiagnosticsSink(std::ostream& out, const FemOperators& ops, const Params& params,
                                       const DoubleWell& dw_bulk, const DoubleWell& dw_bnd, long every)
    : out_(&out), ops_(&ops), params_(params), dw_bulk_(dw_bulk), dw_bnd_(dw_bnd), every_(std::max(1L, every)) {}

void CsvDiagnosticsSink::on_start(const State& initial) {
    *out_ << kDiagnosticsHeader << '\n';
    rows_.push_back(make_row(*ops_, params_, dw_bulk_, dw_bnd_, nullptr, initial));
    *out_ << format_row(rows_.back()) << '\n';
    last_written_ = initial.n;
}

void CsvDiagnosticsSink::on_step(const State& prev, const State& next) {
    pending_ = make_row(*ops_, params_, dw_bulk_, dw_bnd_, &prev, next);
    pending_n_ = next.n;
    if (next.n % every_ != 0) return;
    rows_.push_back(pending_);
    *out_ << format_row(rows_.back()) << '\n';
    last_written_ = next.n;
}

void CsvDiagnosticsSink::on_finish(const State& final_state) {
    if (final_state.n != last_written_ && pending_n_ == final_state.n) {
        rows_.push_back(pending_);
        *out_ << format_row(rows_.back()) << '\n';
        last_written_ = final_state.n;
    }
    out_->flush();
}

}  // namespace chsav

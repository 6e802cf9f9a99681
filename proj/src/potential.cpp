#include "chsav/potential.hpp"

#include <cmath>
#include <string>

namespace chsav {

DoubleWell::DoubleWell(double c0) : shift(c0) {
    if (!(c0 > 0.0) || !std::isfinite(c0)) {
        throw std::invalid_argument("double-well shift must be positive and finite");
    }
}

namespace {

double lumped_energy(std::span<const double> weights, const DoubleWell& dw, std::span<const double> phi) {
    if (weights.size() != phi.size()) throw std::invalid_argument("energy: length mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) e += weights[i] * dw.value(phi[i]);
    return e;
}

std::vector<double> lumped_force(std::span<const double> weights, const DoubleWell& dw,
                                 std::span<const double> phi) {
    if (weights.size() != phi.size()) throw std::invalid_argument("force: length mismatch");
    std::vector<double> b(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) b[i] = weights[i] * dw.derivative(phi[i]);
    return b;
}

}  // namespace

double discrete_energy_bulk(const FemOperators& ops, const DoubleWell& dw, std::span<const double> phi) {
    return lumped_energy(ops.ml_bulk, dw, phi);
}

double discrete_energy_bnd(const FemOperators& ops, const DoubleWell& dw, std::span<const double> phi_bnd) {
    return lumped_energy(ops.ml_bnd, dw, phi_bnd);
}

std::vector<double> nodal_force_bulk(const FemOperators& ops, const DoubleWell& dw,
                                     std::span<const double> phi) {
    return lumped_force(ops.ml_bulk, dw, phi);
}

std::vector<double> nodal_force_bnd(const FemOperators& ops, const DoubleWell& dw,
                                    std::span<const double> phi_bnd) {
    return lumped_force(ops.ml_bnd, dw, phi_bnd);
}

double sav_radius(double energy, double floor) {
    if (!std::isfinite(energy) || energy < floor || !(energy > 0.0)) {
        throw EnergyFloorError("lumped potential energy " + std::to_string(energy) +
                               " below positivity floor " + std::to_string(floor));
    }
    return std::sqrt(energy);
}

}  // namespace chsav

/// @file potential.hpp
/// @brief Shifted quartic double-well potentials and their lumped energies.
#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "chsav/fem.hpp"

namespace chsav {

/// W(x) = (1 - x^2)^2 / 4 + shift, with shift > 0.
struct DoubleWell {
    double shift = 0.0;

    explicit DoubleWell(double c0);

    [[nodiscard]] double value(double x) const {
        const double w = 1.0 - x * x;
        return 0.25 * w * w + shift;
    }
    [[nodiscard]] double derivative(double x) const { return x * x * x - x; }

    /// Shift chosen so that shift * measure == total, e.g. 0.01 / |Omega|.
    static DoubleWell with_integrated_shift(double total, double measure) {
        return DoubleWell(total / measure);
    }
};

/// Raised when a lumped energy falls below its positivity floor.
class EnergyFloorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// E_h(phi) = sum_i (ML_bulk)_i W(phi_i)
double discrete_energy_bulk(const FemOperators& ops, const DoubleWell& dw, std::span<const double> phi);
/// Boundary analogue; @p phi_bnd is a boundary nodal vector.
double discrete_energy_bnd(const FemOperators& ops, const DoubleWell& dw, std::span<const double> phi_bnd);

/// (b)_i = (ML_bulk)_i W'(phi_i), so that b . psi is the lumped integral of W'(phi) psi.
std::vector<double> nodal_force_bulk(const FemOperators& ops, const DoubleWell& dw,
                                     std::span<const double> phi);
std::vector<double> nodal_force_bnd(const FemOperators& ops, const DoubleWell& dw,
                                    std::span<const double> phi_bnd);

/// Lower bound used to sanity-check lumped energies: half the shift times the measure.
inline double energy_floor(const DoubleWell& dw, double measure) { return 0.5 * dw.shift * measure; }

/// sqrt(energy); throws EnergyFloorError if energy < floor.
double sav_radius(double energy, double floor = 0.0);

}  // namespace chsav

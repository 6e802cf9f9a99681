/// @file fem.hpp
/// @brief P1 operators on the bulk triangulation and its boundary polygon.
///
/// Mass-type terms are always evaluated through nodal interpolation, which for
/// P1 reduces to diagonal (lumped) mass matrices:
///   (ML_bulk)_i = sum_{K contains i} |K| / 3,   (ML_bnd)_j = sum_{e contains j} |e| / 2.
#pragma once

#include <array>
#include <span>
#include <vector>

#include "chsav/mesh.hpp"
#include "chsav/sparse.hpp"

namespace chsav {

using LocalMatrix = std::array<std::array<double, 3>, 3>;

/// |K| grad(lambda_a) . grad(lambda_b) for the P1 element on (v0, v1, v2).
/// Throws std::invalid_argument for a degenerate triangle.
LocalMatrix local_stiffness_triangle(const Point2& v0, const Point2& v1, const Point2& v2);

struct FemOperators {
    SparseMatrix k_bulk;            // N_bulk x N_bulk
    SparseMatrix k_bnd;             // N_bnd x N_bnd, edgewise Laplace-Beltrami stiffness
    std::vector<double> ml_bulk;
    std::vector<double> ml_bnd;
    std::vector<int> trace;         // boundary-local -> bulk
    double area = 0.0;              // |Omega|
    double perimeter = 0.0;         // |Gamma|

    [[nodiscard]] std::size_t num_bulk() const { return ml_bulk.size(); }
    [[nodiscard]] std::size_t num_bnd() const { return ml_bnd.size(); }

    /// T f: boundary nodal values of a bulk nodal vector.
    [[nodiscard]] std::vector<double> restrict_to_boundary(std::span<const double> bulk) const;
    /// T^T g: scatters boundary values into a zero bulk vector.
    [[nodiscard]] std::vector<double> extend_from_boundary(std::span<const double> bnd) const;
};

FemOperators assemble_operators(const BulkMesh& mesh, const BoundaryMesh& bnd);

/// Integral of the nodal interpolant: sum_i (ML_bulk)_i nodal_i.
double lumped_integral_bulk(const FemOperators& ops, std::span<const double> nodal);
double lumped_integral_bnd(const FemOperators& ops, std::span<const double> nodal);

}  // namespace chsav

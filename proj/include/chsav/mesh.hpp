/// @file mesh.hpp
/// @brief Conforming P1 triangulations of 2D polygons and their boundary partitions.
#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace chsav {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Triangulation of a polygonal domain. Triangles are stored counter-clockwise.
struct BulkMesh {
    std::vector<Point2> vertices;
    std::vector<std::array<int, 3>> triangles;
    double h = 0.0;  // longest edge over all triangles
    // Refinement level when produced by build_unit_square_mesh, 0 otherwise.
    // Meshes with the same nonzero structure are nested across levels.
    int unit_square_level = 0;

    [[nodiscard]] std::size_t num_vertices() const { return vertices.size(); }
    [[nodiscard]] std::size_t num_triangles() const { return triangles.size(); }
};

/// Boundary partition induced by a BulkMesh. Edges are bulk-vertex pairs,
/// ordered head-to-tail along each boundary loop.
struct BoundaryMesh {
    std::vector<std::array<int, 2>> edges;
    std::vector<int> bnd_to_bulk;  // boundary-local vertex -> bulk vertex

    [[nodiscard]] std::size_t num_vertices() const { return bnd_to_bulk.size(); }
};

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    double quasiuniformity = 0.0;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

double triangle_signed_area(const Point2& a, const Point2& b, const Point2& c);
double distance(const Point2& a, const Point2& b);

/// Ratio of a triangle's diameter to the diameter of its inscribed circle.
double shape_ratio(const Point2& a, const Point2& b, const Point2& c);

/// Uniform 2^level x 2^level grid on (0,1)^2, every square cut along its
/// lower-left to upper-right diagonal. The boundary loop runs
/// counter-clockwise starting at the origin.
std::pair<BulkMesh, BoundaryMesh> build_unit_square_mesh(int level);

/// Reads the text mesh format
///   nv nt ne
///   x y          (nv lines)
///   i j k        (nt lines, 0-based)
///   i j          (ne lines, boundary edges)
/// '#' starts a comment. Clockwise triangles are reoriented and reported
/// through @p warnings. The boundary is recomputed from the triangles; listed
/// boundary edges must agree with it.
std::pair<BulkMesh, BoundaryMesh> load_mesh(const std::filesystem::path& path,
                                            std::vector<std::string>* warnings = nullptr);

/// Same as load_mesh but from an in-memory string.
std::pair<BulkMesh, BoundaryMesh> parse_mesh(const std::string& text,
                                             std::vector<std::string>* warnings = nullptr);

/// Serializes in the load_mesh format.
std::string format_mesh(const BulkMesh& mesh, const BoundaryMesh& bnd);

ValidationReport validate(const BulkMesh& mesh, const BoundaryMesh& bnd,
                          double quasiuniformity_bound = 10.0);

double domain_area(const BulkMesh& mesh);
double boundary_length(const BulkMesh& mesh, const BoundaryMesh& bnd);

/// Evaluates the P1 function with nodal values @p nodal on a unit-square mesh
/// of the given level at point @p p (clamped to the closed square).
double evaluate_unit_square_p1(int level, const std::vector<double>& nodal, const Point2& p);

}  // namespace chsav

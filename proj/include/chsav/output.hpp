/// @file output.hpp
/// @brief VTK snapshots and SVG energy plots.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chsav/diagnostics.hpp"
#include "chsav/mesh.hpp"
#include "chsav/stepper.hpp"

namespace chsav {

/// Companion file name for boundary data: "<stem>_boundary.vtk" next to @p bulk_path.
std::filesystem::path boundary_vtk_path(const std::filesystem::path& bulk_path);

/// Legacy ASCII VTK: an unstructured triangle grid with point data phi and mu
/// at @p path, and a polyline over the boundary with point data phi and
/// theta at boundary_vtk_path(path). Values use 17 significant digits.
/// Throws std::runtime_error on I/O failure.
void write_vtk(const BulkMesh& mesh, const BoundaryMesh& bnd, const State& state,
               const std::filesystem::path& path);

/// Writes snapshot_<n>.vtk into a directory every @p every steps (and at the
/// start and end of the run).
class VtkSnapshotSink : public StepObserver {
public:
    VtkSnapshotSink(const BulkMesh& mesh, const BoundaryMesh& bnd, std::filesystem::path dir,
                    long every);

    void on_start(const State& initial) override;
    void on_step(const State& prev, const State& next) override;
    void on_finish(const State& final_state) override;

    [[nodiscard]] const std::vector<std::filesystem::path>& written() const { return written_; }

private:
    void write(const State& s);

    const BulkMesh* mesh_;
    const BoundaryMesh* bnd_;
    std::filesystem::path dir_;
    long every_;
    long last_n_ = -1;
    std::vector<std::filesystem::path> written_;
};

/// Self-contained SVG line chart of E_mod and E_orig against t.
std::string energy_svg(const std::vector<DiagnosticsRow>& rows);

}  // namespace chsav

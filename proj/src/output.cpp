#include "chsav/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chsav {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void scalars(std::ostringstream& out, const char* name, const std::vector<double>& values) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) out << num(v) << '\n';
}

}  // namespace

std::filesystem::path boundary_vtk_path(const std::filesystem::path& bulk_path) {
    auto p = bulk_path;
    p.replace_filename(bulk_path.stem().string() + "_boundary.vtk");
    return p;
}

void write_vtk(const BulkMesh& mesh, const BoundaryMesh& bnd, const State& state,
               const std::filesystem::path& path) {
    const std::size_t nv = mesh.num_vertices();
    const std::size_t nt = mesh.num_triangles();
    if (state.phi.size() != nv || state.mu.size() != nv || state.theta.size() != bnd.num_vertices()) {
        throw std::invalid_argument("write_vtk: state does not match the mesh");
    }

    std::ostringstream out;
    out << "# vtk DataFile Version 3.0\nchsav bulk t=" << num(state.t) << "\nASCII\n"
        << "DATASET UNSTRUCTURED_GRID\nPOINTS " << nv << " double\n";
    for (const auto& v : mesh.vertices) out << num(v.x) << ' ' << num(v.y) << " 0\n";
    out << "CELLS " << nt << ' ' << 4 * nt << '\n';
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "CELL_TYPES " << nt << '\n';
    for (std::size_t k = 0; k < nt; ++k) out << "5\n";
    out << "POINT_DATA " << nv << '\n';
    scalars(out, "phi", state.phi);
    scalars(out, "mu", state.mu);
    write_file(path, out.str());

    // Boundary polyline in boundary-local numbering.
    const std::size_t nb = bnd.num_vertices();
    std::vector<int> bulk_to_bnd(nv, -1);
    for (std::size_t j = 0; j < nb; ++j) bulk_to_bnd[bnd.bnd_to_bulk[j]] = static_cast<int>(j);
    std::vector<double> trace(nb);
    for (std::size_t j = 0; j < nb; ++j) trace[j] = state.phi[bnd.bnd_to_bulk[j]];

    std::ostringstream b;
    b << "# vtk DataFile Version 3.0\nchsav boundary t=" << num(state.t) << "\nASCII\n"
      << "DATASET UNSTRUCTURED_GRID\nPOINTS " << nb << " double\n";
    for (std::size_t j = 0; j < nb; ++j) {
        const auto& v = mesh.vertices[bnd.bnd_to_bulk[j]];
        b << num(v.x) << ' ' << num(v.y) << " 0\n";
    }
    const std::size_t ne = bnd.edges.size();
    b << "CELLS " << ne << ' ' << 3 * ne << '\n';
    for (const auto& e : bnd.edges) b << "2 " << bulk_to_bnd[e[0]] << ' ' << bulk_to_bnd[e[1]] << '\n';
    b << "CELL_TYPES " << ne << '\n';
    for (std::size_t k = 0; k < ne; ++k) b << "3\n";
    b << "POINT_DATA " << nb << '\n';
    scalars(b, "phi", trace);
    scalars(b, "theta", state.theta);
    write_file(boundary_vtk_path(path), b.str());
}

VtkSnapshotSink::VtkSnapshotSink(const BulkMesh& mesh, const BoundaryMesh& bnd,
                                 std::filesystem::path dir, long every)
    : mesh_(&mesh), bnd_(&bnd), dir_(std::move(dir)), every_(std::max(1L, every)) {}

void VtkSnapshotSink::write(const State& s) {
    char name[40];
    std::snprintf(name, sizeof name, "snapshot_%07ld.vtk", s.n);
    const auto path = dir_ / name;
    write_vtk(*mesh_, *bnd_, s, path);
    written_.push_back(path);
    last_n_ = s.n;
}

void VtkSnapshotSink::on_start(const State& initial) { write(initial); }

void VtkSnapshotSink::on_step(const State&, const State& next) {
    if (next.n % every_ == 0) write(next);
}

void VtkSnapshotSink::on_finish(const State& final_state) {
    if (final_state.n != last_n_) write(final_state);
}

std::string energy_svg(const std::vector<DiagnosticsRow>& rows) {
    constexpr double width = 640, height = 400, left = 80, right = 20, top = 30, bottom = 50;
    double t0 = 0, t1 = 1, lo = 0, hi = 1;
    if (!rows.empty()) {
        t0 = rows.front().t;
        t1 = rows.back().t;
        lo = hi = rows.front().e_mod;
        for (const auto& r : rows) {
            lo = std::min({lo, r.e_mod, r.e_orig});
            hi = std::max({hi, r.e_mod, r.e_orig});
        }
    }
    if (t1 <= t0) t1 = t0 + 1;
    if (hi <= lo) {
        hi = lo + 0.5;
        lo -= 0.5;
    }
    const auto px = [&](double t) { return left + (t - t0) / (t1 - t0) * (width - left - right); };
    const auto py = [&](double e) { return top + (hi - e) / (hi - lo) * (height - top - bottom); };
    const auto line = [&](auto get, const char* colour) {
        std::ostringstream s;
        s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : rows) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(r.t), py(get(r)));
            s << buf;
        }
        s << "\"/>\n";
        return s.str();
    };
    const auto label = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
        << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << height - bottom << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << left << "\" y=\"" << height - bottom + 18 << "\">" << label(t0) << "</text>\n"
        << "<text x=\"" << width - right << "\" y=\"" << height - bottom + 18
        << "\" text-anchor=\"end\">" << label(t1) << "</text>\n"
        << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\">t</text>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << label(hi)
        << "</text>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << height - bottom << "\" text-anchor=\"end\">"
        << label(lo) << "</text>\n"
        << line([](const DiagnosticsRow& r) { return r.e_mod; }, "#1f77b4")
        << line([](const DiagnosticsRow& r) { return r.e_orig; }, "#d62728")
        << "<text x=\"" << width - right - 150 << "\" y=\"" << top << "\" fill=\"#1f77b4\">modified energy</text>\n"
        << "<text x=\"" << width - right - 150 << "\" y=\"" << top + 16
        << "\" fill=\"#d62728\">original energy</text>\n"
        << "</svg>\n";
    return svg.str();
}

}  // namespace chsav

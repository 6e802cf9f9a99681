#include "chsav/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace chsav {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey make_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

struct EdgeUse {
    int count = 0;
    int from = -1;  // orientation inherited from the first triangle seen
    int to = -1;
    bool opposite_seen = false;
};

std::map<EdgeKey, EdgeUse> collect_edges(const BulkMesh& mesh) {
    std::map<EdgeKey, EdgeUse> edges;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            auto& use = edges[make_key(a, b)];
            if (use.count == 0) {
                use.from = a;
                use.to = b;
            } else if (use.from == b && use.to == a) {
                use.opposite_seen = true;
            }
            ++use.count;
        }
    }
    return edges;
}

double longest_edge(const BulkMesh& mesh) {
    double h = 0.0;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            h = std::max(h, distance(mesh.vertices[t[k]], mesh.vertices[t[(k + 1) % 3]]));
        }
    }
    return h;
}

// Orders directed boundary edges into closed loops, starting each loop at
// its smallest unvisited vertex.
BoundaryMesh order_loops(const std::vector<std::array<int, 2>>& directed) {
    std::map<int, int> next;
    for (const auto& e : directed) {
        if (!next.emplace(e[0], e[1]).second) {
            throw MeshError("boundary vertex " + std::to_string(e[0]) +
                            " has more than one outgoing boundary edge (pinched boundary)");
        }
    }
    BoundaryMesh bnd;
    std::map<int, bool> visited;
    for (const auto& [start, unused] : next) {
        if (visited[start]) continue;
        int v = start;
        do {
            visited[v] = true;
            auto it = next.find(v);
            if (it == next.end()) {
                throw MeshError("open boundary loop at vertex " + std::to_string(v));
            }
            bnd.bnd_to_bulk.push_back(v);
            bnd.edges.push_back({v, it->second});
            v = it->second;
        } while (v != start && !visited[v]);
        if (v != start) throw MeshError("open boundary loop at vertex " + std::to_string(v));
    }
    return bnd;
}

}  // namespace

double triangle_signed_area(const Point2& a, const Point2& b, const Point2& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double distance(const Point2& a, const Point2& b) { return std::hypot(b.x - a.x, b.y - a.y); }

double shape_ratio(const Point2& a, const Point2& b, const Point2& c) {
    const double la = distance(b, c);
    const double lb = distance(c, a);
    const double lc = distance(a, b);
    const double diam = std::max({la, lb, lc});
    const double area = std::abs(triangle_signed_area(a, b, c));
    const double inradius = 2.0 * area / (la + lb + lc);
    return diam / (2.0 * inradius);
}

std::pair<BulkMesh, BoundaryMesh> build_unit_square_mesh(int level) {
    if (level < 1 || level > 14) {
        throw std::invalid_argument("unit square mesh level must be in [1, 14], got " +
                                    std::to_string(level));
    }
    const int n = 1 << level;
    const double dx = 1.0 / n;
    BulkMesh mesh;
    mesh.unit_square_level = level;
    mesh.vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) mesh.vertices.push_back({i * dx, j * dx});
    }
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    mesh.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1), ul = id(i, j + 1);
            mesh.triangles.push_back({ll, lr, ur});
            mesh.triangles.push_back({ll, ur, ul});
        }
    }
    mesh.h = std::sqrt(2.0) * dx;

    BoundaryMesh bnd;
    std::vector<int> loop;
    for (int i = 0; i < n; ++i) loop.push_back(id(i, 0));
    for (int j = 0; j < n; ++j) loop.push_back(id(n, j));
    for (int i = n; i > 0; --i) loop.push_back(id(i, n));
    for (int j = n; j > 0; --j) loop.push_back(id(0, j));
    bnd.bnd_to_bulk = loop;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        bnd.edges.push_back({loop[k], loop[(k + 1) % loop.size()]});
    }
    return {std::move(mesh), std::move(bnd)};
}

std::pair<BulkMesh, BoundaryMesh> parse_mesh(const std::string& text,
                                             std::vector<std::string>* warnings) {
    std::istringstream lines(text);
    std::ostringstream stripped;
    std::string line;
    while (std::getline(lines, line)) {
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        stripped << line << '\n';
    }
    std::istringstream in(stripped.str());

    long nv = 0, nt = 0, ne = 0;
    if (!(in >> nv >> nt >> ne) || nv < 3 || nt < 1 || ne < 0) {
        throw MeshError("mesh parse error: bad header (expected 'nv nt ne')");
    }
    BulkMesh mesh;
    mesh.vertices.resize(static_cast<std::size_t>(nv));
    for (auto& v : mesh.vertices) {
        if (!(in >> v.x >> v.y) || !std::isfinite(v.x) || !std::isfinite(v.y)) {
            throw MeshError("mesh parse error: bad vertex record");
        }
    }
    mesh.triangles.resize(static_cast<std::size_t>(nt));
    std::vector<bool> used(mesh.vertices.size(), false);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        auto& tri = mesh.triangles[t];
        if (!(in >> tri[0] >> tri[1] >> tri[2])) {
            throw MeshError("mesh parse error: bad triangle record " + std::to_string(t));
        }
        for (int v : tri) {
            if (v < 0 || v >= nv) {
                throw MeshError("mesh parse error: triangle " + std::to_string(t) +
                                " references vertex " + std::to_string(v) + " out of range");
            }
            used[v] = true;
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw MeshError("triangle " + std::to_string(t) + " repeats a vertex");
        }
        const double area = triangle_signed_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                                 mesh.vertices[tri[2]]);
        if (area == 0.0) throw MeshError("triangle " + std::to_string(t) + " is degenerate");
        if (area < 0.0) {
            std::swap(tri[1], tri[2]);
            if (warnings) {
                warnings->push_back("triangle " + std::to_string(t) +
                                    " was clockwise and has been reoriented");
            }
        }
    }
    std::vector<std::array<int, 2>> listed(static_cast<std::size_t>(ne));
    for (auto& e : listed) {
        if (!(in >> e[0] >> e[1]) || e[0] < 0 || e[1] < 0 || e[0] >= nv || e[1] >= nv) {
            throw MeshError("mesh parse error: bad boundary edge record");
        }
    }
    std::string trailing;
    if (in >> trailing) throw MeshError("mesh parse error: trailing data '" + trailing + "'");

    for (std::size_t v = 0; v < used.size(); ++v) {
        if (!used[v]) throw MeshError("vertex " + std::to_string(v) + " belongs to no triangle");
    }

    const auto edges = collect_edges(mesh);
    std::vector<std::array<int, 2>> directed;
    for (const auto& [key, use] : edges) {
        if (use.count > 2) {
            throw MeshError("non-conforming mesh: edge (" + std::to_string(key.first) + "," +
                            std::to_string(key.second) + ") shared by more than two triangles");
        }
        if (use.count == 2 && !use.opposite_seen) {
            throw MeshError("non-conforming mesh: inconsistent orientation across edge (" +
                            std::to_string(key.first) + "," + std::to_string(key.second) + ")");
        }
        if (use.count == 1) directed.push_back({use.from, use.to});
    }

    if (!listed.empty()) {
        std::map<int, int> degree;
        for (const auto& e : listed) {
            ++degree[e[0]];
            ++degree[e[1]];
        }
        for (const auto& [v, d] : degree) {
            if (d != 2) throw MeshError("open boundary loop at vertex " + std::to_string(v));
        }
        std::vector<EdgeKey> a, b;
        for (const auto& e : listed) a.push_back(make_key(e[0], e[1]));
        for (const auto& e : directed) b.push_back(make_key(e[0], e[1]));
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) {
            throw MeshError("listed boundary edges differ from the edges owned by exactly one triangle");
        }
    }

    mesh.h = longest_edge(mesh);
    BoundaryMesh bnd = order_loops(directed);
    return {std::move(mesh), std::move(bnd)};
}

std::pair<BulkMesh, BoundaryMesh> load_mesh(const std::filesystem::path& path,
                                            std::vector<std::string>* warnings) {
    std::ifstream file(path);
    if (!file) throw MeshError("cannot open mesh file " + path.string());
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_mesh(buffer.str(), warnings);
}

std::string format_mesh(const BulkMesh& mesh, const BoundaryMesh& bnd) {
    std::ostringstream out;
    out.precision(17);
    out << "# nv nt ne\n"
        << mesh.vertices.size() << ' ' << mesh.triangles.size() << ' ' << bnd.edges.size() << '\n';
    for (const auto& v : mesh.vertices) out << v.x << ' ' << v.y << '\n';
    for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& e : bnd.edges) out << e[0] << ' ' << e[1] << '\n';
    return out.str();
}

ValidationReport validate(const BulkMesh& mesh, const BoundaryMesh& bnd,
                          double quasiuniformity_bound) {
    ValidationReport report;
    auto violation = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };
    const int nv = static_cast<int>(mesh.vertices.size());

    std::vector<bool> used(mesh.vertices.size(), false);
    double max_diam = 0.0;
    double min_incircle = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        bool in_range = true;
        for (int v : tri) {
            if (v < 0 || v >= nv) in_range = false;
            else used[v] = true;
        }
        if (!in_range) {
            violation("triangle " + std::to_string(t) + " references a vertex out of range");
            continue;
        }
        const auto& a = mesh.vertices[tri[0]];
        const auto& b = mesh.vertices[tri[1]];
        const auto& c = mesh.vertices[tri[2]];
        const double area = triangle_signed_area(a, b, c);
        if (!(area > 0.0)) {
            violation("triangle " + std::to_string(t) + " has non-positive signed area");
            continue;
        }
        const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
        max_diam = std::max({max_diam, la, lb, lc});
        min_incircle = std::min(min_incircle, 4.0 * area / (la + lb + lc));
    }
    if (!report.ok()) return report;

    for (std::size_t v = 0; v < used.size(); ++v) {
        if (!used[v]) violation("vertex " + std::to_string(v) + " belongs to no triangle");
    }

    if (std::abs(mesh.h - max_diam) > 1e-12 * max_diam) {
        violation("stored h differs from the longest triangle edge");
    }
    report.quasiuniformity = max_diam / min_incircle;
    if (report.quasiuniformity > quasiuniformity_bound) {
        report.warnings.push_back("quasiuniformity ratio " + std::to_string(report.quasiuniformity) +
                                  " exceeds bound " + std::to_string(quasiuniformity_bound));
    }

    const auto edges = collect_edges(mesh);
    std::vector<EdgeKey> single;
    for (const auto& [key, use] : edges) {
        if (use.count > 2) violation("edge shared by more than two triangles");
        if (use.count == 2 && !use.opposite_seen) violation("inconsistent orientation across an edge");
        if (use.count == 1) single.push_back(key);
    }

    // S2: every boundary edge is the trace of exactly one triangle and the
    // boundary partition covers all such edges.
    std::vector<EdgeKey> listed;
    for (const auto& e : bnd.edges) {
        const auto key = make_key(e[0], e[1]);
        auto it = edges.find(key);
        if (it == edges.end() || it->second.count != 1) {
            violation("boundary edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                      ") is not the face of exactly one triangle");
        }
        listed.push_back(key);
    }
    std::sort(listed.begin(), listed.end());
    if (std::adjacent_find(listed.begin(), listed.end()) != listed.end()) {
        violation("boundary edge listed twice");
    }
    for (const auto& key : single) {
        if (!std::binary_search(listed.begin(), listed.end(), key)) {
            violation("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                      ") owned by one triangle is missing from the boundary partition");
        }
    }

    // Loop closure: edges head-to-tail, each loop returning to its start.
    if (!bnd.edges.empty()) {
        int loop_start = bnd.edges.front()[0];
        for (std::size_t k = 0; k < bnd.edges.size(); ++k) {
            const int head = bnd.edges[k][1];
            const bool last = k + 1 == bnd.edges.size();
            if (head == loop_start) {
                if (!last) loop_start = bnd.edges[k + 1][0];
            } else if (last || bnd.edges[k + 1][0] != head) {
                violation("boundary loop is not closed after edge " + std::to_string(k));
                break;
            }
        }
    }

    std::vector<int> from_edges;
    for (const auto& e : bnd.edges) from_edges.push_back(e[0]);
    std::vector<int> sorted_map = bnd.bnd_to_bulk;
    std::sort(sorted_map.begin(), sorted_map.end());
    std::sort(from_edges.begin(), from_edges.end());
    if (std::adjacent_find(sorted_map.begin(), sorted_map.end()) != sorted_map.end()) {
        violation("boundary-to-bulk map is not injective");
    }
    if (sorted_map != from_edges) {
        violation("boundary-to-bulk map does not match the boundary edge vertices");
    }

    // Hanging nodes show up as boundary vertices inside another boundary edge.
    for (const auto& key : single) {
        const auto& p = mesh.vertices[key.first];
        const auto& q = mesh.vertices[key.second];
        const double len = distance(p, q);
        for (int v : from_edges) {
            if (v == key.first || v == key.second) continue;
            const auto& x = mesh.vertices[v];
            const double cross = std::abs(triangle_signed_area(p, q, x)) * 2.0 / len;
            const double along = ((x.x - p.x) * (q.x - p.x) + (x.y - p.y) * (q.y - p.y)) / (len * len);
            if (cross < 1e-12 * len && along > 0.0 && along < 1.0) {
                violation("non-conforming mesh: hanging vertex " + std::to_string(v));
            }
        }
    }
    return report;
}

double domain_area(const BulkMesh& mesh) {
    double area = 0.0;
    for (const auto& t : mesh.triangles) {
        area += triangle_signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    }
    return area;
}

double boundary_length(const BulkMesh& mesh, const BoundaryMesh& bnd) {
    double len = 0.0;
    for (const auto& e : bnd.edges) len += distance(mesh.vertices[e[0]], mesh.vertices[e[1]]);
    return len;
}

double evaluate_unit_square_p1(int level, const std::vector<double>& nodal, const Point2& p) {
    const int n = 1 << level;
    const auto expected = static_cast<std::size_t>(n + 1) * (n + 1);
    if (nodal.size() != expected) {
        throw std::invalid_argument("nodal vector does not match unit square level " +
                                    std::to_string(level));
    }
    const double x = std::clamp(p.x, 0.0, 1.0) * n;
    const double y = std::clamp(p.y, 0.0, 1.0) * n;
    const int i = std::min(static_cast<int>(x), n - 1);
    const int j = std::min(static_cast<int>(y), n - 1);
    const double u = x - i;
    const double v = y - j;
    auto at = [&](int ii, int jj) { return nodal[static_cast<std::size_t>(jj) * (n + 1) + ii]; };
    const double ll = at(i, j), lr = at(i + 1, j), ur = at(i + 1, j + 1), ul = at(i, j + 1);
    if (v <= u) return ll + u * (lr - ll) + v * (ur - lr);
    return ll + u * (ur - ul) + v * (ul - ll);
}

}  // namespace chsav

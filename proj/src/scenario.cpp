#include "chsav/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <cstdint>

namespace chsav {

Scenario scenario_separation() {
    Scenario s;
    s.name = "separation";
    s.phi0 = [](const Point2& p) {
        return std::max(0.1 * std::sin(std::numbers::pi * p.x), 0.1 * std::sin(std::numbers::pi * p.y));
    };
    s.shift_bulk = 0.01;
    s.shift_bnd = 0.01;
    s.defaults = Params{.m = 0.01, .m_gamma = 0.02, .epsilon = 0.02, .sigma = 2.0, .delta = 0.02,
                        .beta = 1.0, .xi = 0.0, .tau = 2e-5, .t_end = 1.0};
    return s;
}

double droplet_profile(const Point2& p, double epsilon, const Droplet& d) {
    const double u = (p.x - d.cx) / d.semi_x;
    const double v = (p.y - d.cy) / d.semi_y;
    // Algebraic level set scaled to length units by the smaller semi-axis.
    const double level = (std::sqrt(u * u + v * v) - 1.0) * std::min(d.semi_x, d.semi_y);
    return -std::tanh(level / (std::numbers::sqrt2 * epsilon));
}

Scenario scenario_adsorption(double epsilon) {
    Scenario s;
    s.name = "adsorption";
    s.phi0 = [epsilon](const Point2& p) { return droplet_profile(p, epsilon); };
    s.shift_bulk = 0.001;
    s.shift_bnd = 0.001;
    s.defaults = Params{.m = 0.01, .m_gamma = 0.02, .epsilon = epsilon, .sigma = 2.0, .delta = 0.01,
                        .beta = 4.0, .xi = 1.0, .tau = 3e-5, .t_end = 2.5};
    return s;
}

std::function<double(const Point2&)> parse_initial_condition(const std::string& text, double epsilon) {
    std::istringstream in(text);
    std::string kind;
    in >> kind;
    if (kind == "zero") return [](const Point2&) { return 0.0; };
    if (kind == "one") return [](const Point2&) { return 1.0; };
    if (kind == "constant") {
        double c = 0.0;
        if (!(in >> c)) throw std::invalid_argument("initial 'constant' needs a value");
        return [c](const Point2&) { return c; };
    }
    if (kind == "random") {
        double amplitude = 0.0;
        unsigned long seed = 0;
        if (!(in >> amplitude >> seed)) throw std::invalid_argument("initial 'random' needs amplitude and seed");
        // Values are keyed by vertex position so the field does not depend on
        // the order in which vertices are visited.
        return [amplitude, seed](const Point2& p) {
            const auto hx = std::hash<double>{}(p.x);
            const auto hy = std::hash<double>{}(p.y);
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(hx),
                              static_cast<std::uint32_t>(hx >> 32), static_cast<std::uint32_t>(hy),
                              static_cast<std::uint32_t>(hy >> 32)};
            std::mt19937_64 rng(seq);
            std::uniform_real_distribution<double> dist(-amplitude, amplitude);
            return dist(rng);
        };
    }
    if (kind == "separation") return scenario_separation().phi0;
    if (kind == "droplet") return [epsilon](const Point2& p) { return droplet_profile(p, epsilon); };
    throw std::invalid_argument("unknown initial condition '" + text + "'");
}

std::vector<double> interpolate(const BulkMesh& mesh, const std::function<double(const Point2&)>& f) {
    std::vector<double> out;
    out.reserve(mesh.num_vertices());
    for (const auto& v : mesh.vertices) {
        const double value = f(v);
        if (!std::isfinite(value)) throw std::invalid_argument("initial condition is not finite at a node");
        out.push_back(value);
    }
    return out;
}

}  // namespace chsav

/// @file scenario.hpp
/// @brief Initial data, potential shifts and default parameters of the
/// benchmark configurations.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chsav/mesh.hpp"
#include "chsav/stepper.hpp"

namespace chsav {

struct Scenario {
    std::string name;
    std::function<double(const Point2&)> phi0;
    // Integrated shifts: the bulk potential is shifted by shift_bulk / |Omega|,
    // the boundary potential by shift_bnd / |Gamma|.
    double shift_bulk = 0.01;
    double shift_bnd = 0.01;
    Params defaults;
};

/// Spinodal-type separation from phi0 = max(0.1 sin(pi x), 0.1 sin(pi y)) on
/// the unit square, xi = 0.
Scenario scenario_separation();

/// Half-elliptic droplet attached to the left wall, barycentre (0.1, 0.5),
/// horizontal/vertical extent 0.6814/0.367, tanh interface of width ~epsilon.
Scenario scenario_adsorption(double epsilon = 0.01);

/// Droplet geometry of scenario_adsorption.
struct Droplet {
    double cx = 0.1;
    double cy = 0.5;
    double semi_x = 0.6814 / 2.0;
    double semi_y = 0.367 / 2.0;
};
double droplet_profile(const Point2& p, double epsilon, const Droplet& d = {});

/// Custom initial data: "zero", "one", "constant <c>", "random <amplitude> <seed>"
/// (uniform in [-amplitude, amplitude]), "separation" or "droplet".
std::function<double(const Point2&)> parse_initial_condition(const std::string& text, double epsilon);

/// Nodal interpolation of @p f.
std::vector<double> interpolate(const BulkMesh& mesh, const std::function<double(const Point2&)>& f);

}  // namespace chsav

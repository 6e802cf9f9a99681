/// @file config.hpp
/// @brief Line-oriented `key = value` configuration with [sections].
///
///   [scenario]  name = separation | adsorption | custom, initial = <custom initial data>
///   [params]    m, m_gamma, epsilon, sigma, delta, beta, xi (number or "inf"), tau, t_end
///   [potential] shift_bulk, shift_bnd   (integrated shifts: c0 = shift_bulk / |Omega|)
///   [mesh]      level = <int>  or  path = <mesh file>
///   [output]    dir, every (diagnostics cadence, steps), snapshot_every (VTK cadence, 0 = off), svg
///   [solver]    kind = bordered_lu | full_lu | gmres
///   [eoc]       axis, levels, reference_level, level, taus, reference_tau, xis, sample_step
///
/// Values not given fall back to the scenario defaults.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chsav/eoc.hpp"
#include "chsav/scenario.hpp"
#include "chsav/stepper.hpp"

namespace chsav {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string scenario = "separation";
    std::string initial;  // custom scenarios only
    Params params = scenario_separation().defaults;
    double shift_bulk = 0.01;
    double shift_bnd = 0.01;
    int mesh_level = 7;
    std::string mesh_path;
    std::string output_dir = "output";
    long every = 1;
    long snapshot_every = 0;
    bool svg = true;
    SolverKind solver = SolverKind::bordered_lu;

    EocAxis eoc_axis = EocAxis::h;
    std::vector<int> eoc_levels{4, 5};
    int eoc_reference_level = 6;
    int eoc_level = 5;
    std::vector<double> eoc_taus{2e-5, 4e-5};
    double eoc_reference_tau = 1e-5;
    std::vector<double> eoc_xis{1e-4, 2e-4, 4e-4};
    double eoc_sample_step = 2e-4;

    bool operator==(const Config&) const = default;

    /// Scenario object with initial data and shifts taken from this config.
    [[nodiscard]] Scenario make_scenario() const;
    /// Throws ConfigError if values are out of range or the mesh file is missing.
    void validate() const;
};

Config default_config(const std::string& scenario);
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
std::string serialize_config(const Config& config);

/// Parses a number or "inf".
double parse_xi(const std::string& text);
std::string format_xi(double xi);

}  // namespace chsav

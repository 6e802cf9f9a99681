/// @file cli.hpp
/// @brief Command-line front end: run, eoc, validate, paper-tables.
#pragma once

#include <iosfwd>
#include <vector>

#include "chsav/config.hpp"

namespace chsav {

/// Entry point of the `chsav` tool. Returns the process exit code.
int cli(int argc, char** argv);

/// One line of the invariant suite.
struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Runs the invariant suite behind `chsav validate`: energy identity,
/// monotone modified energy and mass conservation for each xi in @p xis,
/// the xi = inf constraint, and the constant fixed points 0 and 1.
std::vector<CheckResult> run_invariant_suite(const Config& config, const std::vector<double>& xis,
                                             long steps);

/// Recomputes the EOC columns of reference_tables(); one result per entry,
/// passing if within @p tolerance of the printed value.
std::vector<CheckResult> check_reference_tables(std::ostream& out, double tolerance = 0.01);

}  // namespace chsav

#pragma once

#include <iosfwd>

#include "copreg/config.hpp"
#include "copreg/csvio.hpp"

namespace copreg {

/// Exit codes shared by the CLI.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_data = 3;
inline constexpr int exit_numerical = 4;

/// Rectangle-probability comparison grid (engine x d x a x rho), CSV output.
Table run_rectprob(const Config& cfg);

/// Limiting estimates and standard errors over a (d, rho) grid.
Table run_asymlimit(const Config& cfg);

/// Simulation study (bias/variance/MSE scaled by n) or, in jitter mode,
/// the jitter-set variability experiment on one fixed dataset.
Table run_simstudy(const Config& cfg);

/// Model fit for a longitudinal CSV read from `in`.
Table run_fit(const Config& cfg, std::istream& in);

/// Dispatch a subcommand, write the table (CSV to the `out` config path or
/// stdout, aligned text to `log`), and map exceptions onto exit codes.
int run_command(const std::string& name, const Config& cfg, std::ostream& log);

} // namespace copreg

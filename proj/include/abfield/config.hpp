#pragma once

// Run configuration: flat "[section]" / "key = value" text with "#"
// comments.  Every field has a key; serialisation writes all of them, so a
// serialised config reproduces the run on its own.

#include "abfield/analysis.hpp"
#include "abfield/eikonal.hpp"
#include "abfield/gauge.hpp"
#include "abfield/kg_evolve.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace abfield {

struct RunConfig {
  SimulationConfig sim;
  GaugeOptions gauge;  // coupling mirrors sim.coupling

  /// Closed loop for the eikonal subcommand; empty: a circle around the solenoid.
  PathSpec loop;
  /// Slit paths; empty: straight source -> slit -> screen paths.
  PathSpec upper_path;
  PathSpec lower_path;
  RefractiveModel refractive;  // p0 = 0: use |k0|

  std::vector<double> fluxes;
  double kappa_guess = 0.0;    // 0: two-slit estimate

  int dressed_interval = 1;
  int dressed_intervals = 10;

  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool emit_images = false;
  /// Per-site CSV dumps of snapshot and dressed fields (large at desk scale).
  bool field_dumps = false;
};

/// The documented defaults: desk-scale two-slit geometry with a solenoid
/// behind the barrier's central wall, flux sweep 0, pi/4, ..., 2pi.
RunConfig default_run_config();

/// Parses and validates.  Keys absent from the text keep their defaults.
/// Throws ConfigError with "line N:" prefixes.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& filename);

/// Every key, fixed order, doubles as %.17g.
std::string serialize_config(const RunConfig& config);

/// Eager checks shared by parse_config and the CLI.
void validate_run_config(const RunConfig& config);

/// "%.17g".
std::string format_double(double value);

}  // namespace abfield

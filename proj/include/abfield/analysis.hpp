#pragma once

// Fringe fitting on the detection screen, flux sweeps, and the linear
// regression of fringe shift against flux.

#include "abfield/eikonal.hpp"
#include "abfield/kg_evolve.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace abfield {

/// Model I(y) = background + E(y) cos(kappa y + theta) with the Gaussian
/// envelope E(y) = amplitude exp(u (envelope_slope - envelope_rate u)),
/// u = y - reference.  The reference is the middle of the screen window.
struct FringeParams {
  double background = 0.0;
  double amplitude = 0.0;
  double envelope_slope = 0.0;
  double envelope_rate = 0.0;
  double reference = 0.0;
  double kappa = 0.0;
  double theta = 0.0;

  double envelope(double y) const;
  double model(double y) const;
  /// Peak of the envelope; infinite for a flat or growing envelope.
  double envelope_center() const;
};

struct InterferenceResult {
  std::vector<double> positions;
  std::vector<double> intensity;
  FringeParams params;
  double theta = 0.0;            // in (-pi, pi]
  double theta_unwrapped = 0.0;  // equals theta unless a sweep supplied continuity
  double sigma_theta = 0.0;
  double residual = 0.0;         // RMS residual / RMS of (I - mean I)
  int iterations = 0;
};

struct FitOptions {
  double tolerance = 1e-10;  // on max |step_i| / (|p_i| + 1)
  int max_iterations = 500;
  int scan_points = 401;     // kappa scan over [0.5, 1.5] * guess
};

/// Levenberg-Marquardt fit of the Gaussian-envelope fringe model.  The start
/// point comes from a linear least-squares scan over kappa.  Throws
/// NumericalError("no fringes") on a flat record and NumericalError carrying
/// the final residual when the iteration cap is hit.
InterferenceResult fit_fringes(const std::vector<double>& positions, const std::vector<double>& intensity,
                               double kappa_guess, const FitOptions& options = {});

InterferenceResult fit_fringes(const ScreenRecord& screen, double kappa_guess,
                               const FitOptions& options = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  bool weighted = false;
};

/// Weighted least squares with 1/sigma^2 weights and absolute-sigma
/// errors; ordinary least squares with residual-based errors when any sigma
/// is zero or non-finite.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& sigma);

/// Continuous branch through consecutive values, assuming |step| < pi.
std::vector<double> unwrap_phases(const std::vector<double>& wrapped);

struct SweepPoint {
  double flux = 0.0;
  double theta = 0.0;            // unwrapped
  double theta_wrapped = 0.0;
  double sigma_theta = 0.0;
  double residual = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  LinearFit regression;
};

/// Throws ConfigError unless there are >= 3 fluxes, strictly increasing, with
/// spacing < pi / |e|.
void check_sweep_plan(const std::vector<double>& fluxes, double coupling);

/// Fringe wavenumber expected from the slit separation, barrier-to-screen
/// distance and k0 (small-angle two-slit estimate).
double expected_fringe_wavenumber(const SimulationConfig& config);

/// Straight slit paths packet center -> slit center -> screen point (y = 0).
std::pair<PathSpec, PathSpec> slit_paths(const SimulationConfig& config);

/// Default screen column: 8 cells in front of the right sponge.
int effective_screen_column(const SimulationConfig& config);

struct SweepOptions {
  double kappa_guess = 0.0;  // 0: expected_fringe_wavenumber
  FitOptions fit;
  /// Called after each member completes, in flux order.
  std::function<void(const SweepPoint&, const RunResult&, const InterferenceResult&)> on_member;
};

/// One PDE run per flux (the base potential's gauge stack is kept), fringe
/// fit, unwrap, regression.  A failing member aborts with NumericalError;
/// members already reported through on_member are the persisted partial
/// result.
SweepResult flux_sweep(const SimulationConfig& base, const std::vector<double>& fluxes,
                       const SweepOptions& options = {});

/// Same sweep with the fringe shift taken from the slit-path phase
/// difference instead of a PDE run.
SweepResult eikonal_sweep(const SimulationConfig& base, const std::vector<double>& fluxes);

}  // namespace abfield

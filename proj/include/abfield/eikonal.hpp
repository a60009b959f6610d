#pragma once

// Analytic phase model: path-ordered phase integrals, the eikonal-condition
// residual of the dressed pair, and the refractive-index account of the
// fringe shift.

#include "abfield/field_config.hpp"
#include "abfield/gauge.hpp"

#include <vector>

namespace abfield {

struct EikonalResult {
  double phase = 0.0;                 // -e * int A . dl
  std::vector<double> segments;       // per-segment contributions, sum == phase
  double error_estimate = 0.0;
  bool closed = false;
  double phase_mod_2pi = 0.0;         // folded into (-pi, pi]
};

/// Phase of exp(-i e int A . dl) along the path.  A CCW loop enclosing the
/// solenoid once gives -e * flux.
EikonalResult path_phase(const VectorPotentialSpec& spec, const PathSpec& path, double coupling);

/// Fringe shift predicted by two slit-to-screen paths: phase(upper) -
/// phase(lower).  With the upper path passing clockwise over the solenoid
/// this is +e * flux.
double fringe_shift(const VectorPotentialSpec& spec, const PathSpec& upper, const PathSpec& lower,
                    double coupling);

/// Pointwise e^2 (Abar_t^2 - |Abar|^2) - m^2, signature (+,-,-,-).  Abar_t is
/// taken as 0 when the pair carries no time component; NaN where Abar is
/// undefined.
RealArray eikonal_residual(const RealDressedPair& pair, double coupling, double mass);

struct RefractiveModel {
  double p0 = 1.0;        // momentum at A = 0 (= k0 with hbar = 1)
  double a1 = 0.0;        // potential component along propagation, region 1
  double a2 = 0.0;        // region 2
  double thickness = 0.0; // length over which the potentials differ
};

struct RefractiveShift {
  double delta_n = 0.0;
  double delta_theta = 0.0;
};

/// delta_n = (p0 - e A1)/p0 - (p0 - e A2)/p0 = e (A2 - A1) / p0 and
/// delta_theta = (2 pi / lambda0) t delta_n with lambda0 = 2 pi / p0.
RefractiveShift refractive_shift(const RefractiveModel& model, double coupling);

/// The same shift from two straight parallel paths of length t through the
/// uniform potentials A1 and A2: path_phase(1) - path_phase(2).
double refractive_shift_from_paths(const RefractiveModel& model, double coupling);

}  // namespace abfield

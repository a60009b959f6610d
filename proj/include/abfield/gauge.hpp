#pragma once

// Schrodinger-gauge transform between the complex representation (psi, A)
// and the real dressed representation (phi, Abar):
//
//   phi  = |psi|
//   Abar = A - (1/e) grad arg(psi)        (time part: -(1/e) d/dt arg psi)
//
// Sign conventions used across the library: covariant derivative
// D = grad - i e A, gauge transformation A -> A + grad chi,
// psi -> exp(i e chi) psi.  Abar is invariant under that transformation.

#include "abfield/field_config.hpp"

#include <Eigen/Dense>

#include <complex>

namespace abfield {

using Complex = std::complex<double>;
using ComplexArray = Eigen::ArrayXXcd;
using RealArray = Eigen::ArrayXXd;
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// One time level of the complex matter field, indexed (i, j).
struct ComplexField2D {
  Grid grid;
  ComplexArray values;
  double t = 0.0;
  double dt = 0.0;

  static ComplexField2D zeros(const Grid& grid);
  /// Throws NumericalError if any value is NaN or infinite.
  void check_finite() const;
};

/// Real field plus dressed potential.  Abar is NaN wherever `defined` is
/// false; phi is defined everywhere.
struct RealDressedPair {
  Grid grid;
  RealArray phi;
  RealArray abar_x;
  RealArray abar_y;
  RealArray abar_t;
  MaskArray defined;
  bool has_time_component = false;

  double masked_fraction() const;
};

struct GaugeOptions {
  double coupling = 1.0;
  /// Sites with |psi| below node_threshold * max|psi| are masked.
  double node_threshold = 1e-12;
};

/// Single time level; Abar_t is left at zero and has_time_component false.
/// Throws NumericalError("field has no support") for an all-zero field.
RealDressedPair to_schrodinger_gauge(const ComplexField2D& psi, const VectorPotentialSpec& A,
                                     const GaugeOptions& options = {});

/// Two time levels; Abar_t = -(1/e) (arg psi_now - arg psi_prev) / dt with
/// static A_0 = 0, and the spatial part taken from `now`.
RealDressedPair to_schrodinger_gauge(const ComplexField2D& prev, const ComplexField2D& now,
                                     const VectorPotentialSpec& A, const GaugeOptions& options = {});

struct SiteAnchor {
  int i = 0;
  int j = 0;
  double phase = 0.0;
};

/// Rebuilds psi = phi exp(i theta) by integrating e (A - Abar) over a
/// breadth-first spanning tree of the defined sites, starting at the anchor.
/// Masked sites get psi = phi.  Throws GeometryError listing the components
/// for a disconnected region, and NumericalError("non-integrable phase") if
/// any non-tree edge disagrees with the tree by more than pi/2 (a phase
/// vortex).
ComplexField2D from_schrodinger_gauge(const RealDressedPair& pair, const VectorPotentialSpec& A,
                                      const SiteAnchor& anchor, const GaugeOptions& options = {});

/// j_mu = -2 e^2 Abar_mu phi^2; NaN where Abar is undefined.
struct DressedCurrent {
  RealArray t;
  RealArray x;
  RealArray y;
};
DressedCurrent dressed_current(const RealDressedPair& pair, double coupling);

/// Relative L2 distance between a and b after removing the best global phase.
double relative_l2_up_to_phase(const ComplexArray& a, const ComplexArray& b);

/// Fundamental-cycle holonomy check: the largest |mismatch| found while
/// reconstructing the phase, i.e. how far the field is from being
/// vortex-free.  Exposed for diagnostics.
double max_holonomy_mismatch(const RealDressedPair& pair, const VectorPotentialSpec& A,
                             const GaugeOptions& options = {});

}  // namespace abfield

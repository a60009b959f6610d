#pragma once

// Leapfrog evolution of the minimally coupled Klein-Gordon field
// (D_mu D^mu + m^2) psi = 0 with D = grad - i e A and a static, purely
// spatial A, discretised with gauge links (Peierls phases), plus the real
// dressed-field evolution used to cross-check it.

#include "abfield/field_config.hpp"
#include "abfield/gauge.hpp"

#include <functional>
#include <vector>

namespace abfield {

struct WavepacketParams {
  Vec2 center = Vec2(26.0, 0.0);
  double sigma = 6.0;
  Vec2 k0 = Vec2(2.0, 0.0);
  bool operator==(const WavepacketParams&) const = default;
};

struct SimulationConfig {
  GeometryMask geometry;
  double dt = 0.05;
  double coupling = 1.0;
  double mass = 1.0;
  WavepacketParams packet;
  VectorPotentialSpec potential = VectorPotentialSpec::zero();
  int steps = 6000;
  int output_cadence = 500;
  int screen_column = -1;
  /// Multiply the initial packet by exp(i e Lambda), grad Lambda = A, so its
  /// kinetic momentum is k0 whatever the flux.  The branch cut of Lambda runs
  /// from the solenoid along +x, away from the incident packet.
  bool dress_incident = true;
  int threads = 0;  // 0: OpenMP default

  const Grid& grid() const { return geometry.grid; }
  /// Checks every invariant eagerly; throws ConfigError naming the offending
  /// quantities.
  void validate() const;
};

/// Lattice dispersion: 4/dt^2 sin^2(w dt/2) = sum_i 4/h^2 sin^2(k_i h/2) + m^2.
double lattice_frequency(const Vec2& k, double mass, double h, double dt);
/// d(lattice_frequency)/dk.
Vec2 lattice_group_velocity(const Vec2& k, double mass, double h, double dt);

/// Scalar Lambda with grad Lambda = A away from the solenoid disk and the
/// cut along +x from its center (includes any stacked gauge functions).
double incident_gauge_phase(const VectorPotentialSpec& spec, const Vec2& x);

struct Diagnostic {
  long step = 0;
  double t = 0.0;
  double charge = 0.0;
  double norm = 0.0;
  double energy = 0.0;
  double max_amplitude = 0.0;
};

/// Two time levels (prev at t - dt, curr at t).
struct EvolutionState {
  ComplexField2D prev;
  ComplexField2D curr;
  long step = 0;
  std::vector<Diagnostic> diagnostics;
};

/// Gaussian packet exp(-|x-x0|^2 / 4 sigma^2) exp(i k0.x), L2-normalised,
/// with the previous level shifted back along the lattice group velocity and
/// rotated by the lattice frequency.  Validates the config first.
EvolutionState init_wavepacket(const SimulationConfig& config);

/// Gauge links U_x(i,j) = exp(-i e int A.dl) on the edge (i,j)->(i+1,j) and
/// U_y likewise; 0 on edges touching a blocked site.  Gauge-function parts
/// are added as exact endpoint differences.
struct LatticeLinks {
  ComplexArray ux;
  ComplexArray uy;
};
LatticeLinks build_links(const SimulationConfig& config);

struct PlaquetteStats {
  double max_b_outside = 0.0;  // max |B| over plaquettes with all corners active
  double total_flux = 0.0;     // flux enclosed by a live loop around the exclusion disk (NaN if none)
};
/// Lattice magnetic field from link holonomies, B = -arg(U U U* U*) / (e h^2).
PlaquetteStats plaquette_stats(const SimulationConfig& config, const LatticeLinks& links);

/// Precomputed stencil coefficients for the complex leapfrog.
class ComplexEvolution {
 public:
  explicit ComplexEvolution(const SimulationConfig& config, bool sponge = true);

  /// One step: prev <- next, then swap.  Also returns sum |next|^2 h^2.
  double step(EvolutionState& state) const;
  /// (D^2 - m^2) psi on the lattice, zero on blocked sites.
  ComplexArray apply_operator(const ComplexArray& psi) const;
  Diagnostic diagnose(const EvolutionState& state) const;

  const LatticeLinks& links() const { return links_; }
  const SimulationConfig& config() const { return config_; }

 private:
  SimulationConfig config_;
  LatticeLinks links_;
  RealArray inv_one_plus_;  // 1 / (1 + sigma dt), 0 on blocked sites
  RealArray one_minus_;     // 1 - sigma dt
};

void step_complex(EvolutionState& state, const ComplexEvolution& evolution);

/// Swap the two time levels so that further steps run backwards (dt -> -dt).
void reverse_time(EvolutionState& state);

/// Conserved charge (h^2/dt) sum Im(psi_prev conj(psi_curr)); positive for a
/// positive-frequency packet.
double total_charge(const EvolutionState& state);

// ---------------------------------------------------------------------------
// Dressed (real-field) mode

struct DressedState {
  RealArray phi_prev;
  RealArray phi_curr;
  double t = 0.0;
  long step = 0;
};

/// Leapfrog for phi under the lattice form of (box + m^2) phi = e^2 Abar.Abar phi:
///
///   c_t (phi+ + phi-) - 2 phi = dt^2 [ sum_nb (c_link phi_nb - phi)/h^2 - m^2 phi ]
///
/// with c = cos(e * Abar * length) on every edge, signature (+,-,-,-).  Abar
/// is held fixed between calls to redress().  Sites that are masked or below
/// 1e-3 of the peak amplitude evolve with Abar = 0.
class DressedEvolution {
 public:
  DressedEvolution(const SimulationConfig& config, const RealDressedPair& pair, bool sponge = true);

  void redress(const RealDressedPair& pair);
  void step(DressedState& state) const;
  const RealDressedPair& pair() const { return pair_; }
  /// Sites whose time link cos(e Abar_t dt) was not positive at the last
  /// redress; they evolve without the time dressing.
  long undressed_sites() const { return undressed_; }

 private:
  SimulationConfig config_;
  RealDressedPair pair_;
  MaskArray geometry_active_;
  RealArray sigma_dt_;
  RealArray cx_, cy_;
  RealArray inv_diag_;   // 1 / ((1 + sigma dt) c_t), 0 on blocked sites
  RealArray prev_coef_;  // (1 - sigma dt) c_t
  long undressed_ = 0;
};

void step_dressed(DressedState& state, const DressedEvolution& evolution);

struct DressedComparison {
  long step = 0;
  double relative_l2 = 0.0;
  double masked_fraction = 0.0;
};

/// Evolves the complex field and the dressed field side by side, re-dressing
/// Abar from the complex run every `interval` steps.  phi keeps its own
/// evolution; only Abar is refreshed.  Throws NumericalError when the masked
/// region grows by more than 10% of the domain.
std::vector<DressedComparison> dressed_cross_check(const SimulationConfig& config, int interval,
                                                   int intervals, const GaugeOptions& options);

// ---------------------------------------------------------------------------
// Full runs

struct ScreenRecord {
  int column = -1;
  std::vector<double> positions;
  std::vector<double> intensity;  // time-integrated |psi|^2
};

struct ConfinementStats {
  double integrated_total = 0.0;      // sum_t sum_x |psi|^2 h^2 dt
  double integrated_in_solenoid = 0.0;  // same, restricted to |x - c| <= R
  double max_b_outside = 0.0;
  double lattice_flux = 0.0;
};

struct RunResult {
  EvolutionState state;
  ScreenRecord screen;
  ConfinementStats confinement;
};

using SnapshotCallback = std::function<void(const EvolutionState&)>;

/// Steps to completion, accumulating the screen record.  Checks finiteness
/// and the overflow guard at every output cadence; throws NumericalError
/// carrying the step index and the max-amplitude history.
RunResult run(const SimulationConfig& config, const SnapshotCallback& on_output = {});

/// Deterministic fixed-order pairwise summation.
double pairwise_sum(const double* values, std::size_t n);

}  // namespace abfield

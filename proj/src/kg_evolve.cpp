#include "abfield/kg_evolve.hpp"

#include "abfield/error.hpp"

#include <omp.h>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>

namespace abfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kOverflowGuard = 1e100;
constexpr double kMaxOverlap = 1e-8;
constexpr double kDressFloor = 1e-3;  // relative to max phi

int thread_count(const SimulationConfig& c) { return c.threads > 0 ? c.threads : omp_get_max_threads(); }

double gaussian_envelope(const Vec2& x, const Vec2& center, double sigma) {
  return std::exp(-(x - center).squaredNorm() / (4.0 * sigma * sigma));
}

// Blocked by the barrier or the exclusion disk (not the outer ring).
bool obstacle(const GeometryMask& m, int i, int j) {
  if (m.barrier_column >= 0 && i >= m.barrier_column && i < m.barrier_column + m.barrier_thickness) {
    const bool open = std::any_of(m.slits.begin(), m.slits.end(),
                                  [j](const Slit& s) { return j >= s.lo && j < s.hi; });
    if (!open) return true;
  }
  return m.exclusion.radius > 0.0 && m.exclusion.contains(m.grid.position(i, j));
}

std::string format_history(const std::vector<Diagnostic>& diags) {
  std::ostringstream msg;
  msg << "max-amplitude history:";
  for (const Diagnostic& d : diags) msg << " [" << d.step << "] " << d.max_amplitude;
  return msg.str();
}

}  // namespace

double pairwise_sum(const double* values, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += values[k];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

// ---------------------------------------------------------------------------
// Config

void SimulationConfig::validate() const {
  const Grid& g = geometry.grid;
  std::ostringstream problems;
  auto fail = [&](const std::string& what) { throw ConfigError(what); };

  if (g.nx < 3 || g.ny < 3) fail("grid needs nx, ny >= 3");
  if (!(g.h > 0.0)) fail("h must be > 0");
  try {
    geometry.validate(potential);
  } catch (const GeometryError& e) {
    fail(e.what());
  }
  const double cfl = g.h / std::sqrt(2.0);
  if (!(dt > 0.0) || !(dt < cfl)) {
    problems << "dt = " << dt << " violates the CFL bound dt < h/sqrt(2) = " << cfl << " (h = " << g.h
             << ")";
    fail(problems.str());
  }
  if (!(mass >= 0.0) || !std::isfinite(mass)) fail("mass m must be finite and >= 0");
  if (0.5 * dt * std::sqrt(8.0 / (g.h * g.h) + mass * mass) >= 1.0) {
    problems << "dt = " << dt << " is unstable with m = " << mass << " and h = " << g.h
             << " (need dt sqrt(8/h^2 + m^2) < 2)";
    fail(problems.str());
  }
  if (!std::isfinite(coupling)) fail("coupling e must be finite");
  if (steps < 0) fail("steps must be >= 0");
  if (output_cadence < 1) fail("output_cadence must be >= 1");
  if (!(packet.sigma >= 2.0 * g.h)) {
    problems << "packet sigma = " << packet.sigma << " is not resolved by h = " << g.h
             << " (need sigma >= 2h)";
    fail(problems.str());
  }
  const double nyquist_margin = 0.5 * std::numbers::pi / g.h;
  if (std::abs(packet.k0.x()) > nyquist_margin || std::abs(packet.k0.y()) > nyquist_margin) {
    problems << "packet momentum k0 = (" << packet.k0.x() << ", " << packet.k0.y()
             << ") exceeds pi/(2h) = " << nyquist_margin;
    fail(problems.str());
  }
  if (screen_column >= g.nx) fail("screen_column outside the grid");
  if (screen_column >= 0 && geometry.barrier_column >= 0 &&
      screen_column < geometry.barrier_column + geometry.barrier_thickness)
    fail("screen_column must lie beyond the barrier");

  // Initial overlap of |psi|^2 with the barrier and the exclusion disk.
  double total = 0.0, overlap = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double w = std::pow(gaussian_envelope(g.position(i, j), packet.center, packet.sigma), 2);
      total += w;
      if (obstacle(geometry, i, j)) overlap += w;
    }
  if (!(total > 0.0)) fail("wavepacket has no support on the grid");
  if (overlap / total >= kMaxOverlap) {
    problems << "wavepacket overlaps the barrier/solenoid region: fraction " << overlap / total
             << " >= " << kMaxOverlap;
    fail(problems.str());
  }
}

// ---------------------------------------------------------------------------
// Dispersion and initial state

double lattice_frequency(const Vec2& k, double mass, double h, double dt) {
  const double sx = std::sin(0.5 * k.x() * h), sy = std::sin(0.5 * k.y() * h);
  const double rhs = 4.0 / (h * h) * (sx * sx + sy * sy) + mass * mass;
  const double arg = 0.5 * dt * std::sqrt(rhs);
  if (arg > 1.0) throw ConfigError("time step too large for the lattice dispersion relation");
  return 2.0 / dt * std::asin(arg);
}

Vec2 lattice_group_velocity(const Vec2& k, double mass, double h, double dt) {
  const double w = lattice_frequency(k, mass, h, dt);
  const double s = std::sin(w * dt);
  if (s == 0.0) return Vec2::Zero();
  return dt / (h * s) * Vec2(std::sin(k.x() * h), std::sin(k.y() * h));
}

double incident_gauge_phase(const VectorPotentialSpec& spec, const Vec2& x) {
  const VectorPotentialSpec& root = spec.root();
  double lambda = 0.0;
  switch (root.kind()) {
    case VectorPotentialSpec::Kind::IdealSolenoid: {
      const Vec2 d = x - root.center();
      double ang = std::atan2(d.y(), d.x());
      if (ang < 0.0) ang += kTwoPi;
      lambda = root.flux() * ang / kTwoPi;
      break;
    }
    case VectorPotentialSpec::Kind::UniformVector:
      lambda = root.uniform_value().dot(x);
      break;
    case VectorPotentialSpec::Kind::GaugeShifted:
      break;
  }
  return lambda + spec.gauge_value(x);
}

EvolutionState init_wavepacket(const SimulationConfig& config) {
  config.validate();
  const Grid& g = config.grid();
  const WavepacketParams& p = config.packet;
  const double omega = lattice_frequency(p.k0, config.mass, g.h, config.dt);
  const Vec2 vg = lattice_group_velocity(p.k0, config.mass, g.h, config.dt);
  const MaskArray active = config.geometry.active_sites();

  EvolutionState s;
  s.curr = ComplexField2D::zeros(g);
  s.prev = ComplexField2D::zeros(g);
  s.curr.t = 0.0;
  s.prev.t = -config.dt;
  s.curr.dt = s.prev.dt = config.dt;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (!active(i, j)) continue;
      const Vec2 x = g.position(i, j);
      double phase = p.k0.dot(x);
      if (config.dress_incident) phase += config.coupling * incident_gauge_phase(config.potential, x);
      s.curr.values(i, j) = std::polar(gaussian_envelope(x, p.center, p.sigma), phase);
      s.prev.values(i, j) =
          std::polar(gaussian_envelope(x + config.dt * vg, p.center, p.sigma), phase + omega * config.dt);
    }
  }
  const double norm = std::sqrt(s.curr.values.abs2().sum() * g.h * g.h);
  s.curr.values /= norm;
  s.prev.values /= norm;
  return s;
}

// ---------------------------------------------------------------------------
// Links

LatticeLinks build_links(const SimulationConfig& config) {
  const Grid& g = config.grid();
  const MaskArray active = config.geometry.active_sites();
  const VectorPotentialSpec& root = config.potential.root();
  LatticeLinks links{ComplexArray::Zero(g.nx, g.ny), ComplexArray::Zero(g.nx, g.ny)};
  const double e = config.coupling;

#pragma omp parallel for schedule(dynamic, 4) num_threads(thread_count(config))
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (!active(i, j)) continue;
      const Vec2 a = g.position(i, j);
      const int ip = (i + 1) % g.nx, jp = (j + 1) % g.ny;
      if (active(ip, j) && (g.periodic || i + 1 < g.nx)) {
        const Vec2 b = a + Vec2(g.h, 0.0);
        const double integral = segment_integral(root, a, b).value +
                                config.potential.gauge_value(b) - config.potential.gauge_value(a);
        links.ux(i, j) = std::polar(1.0, -e * integral);
      }
      if (active(i, jp) && (g.periodic || j + 1 < g.ny)) {
        const Vec2 b = a + Vec2(0.0, g.h);
        const double integral = segment_integral(root, a, b).value +
                                config.potential.gauge_value(b) - config.potential.gauge_value(a);
        links.uy(i, j) = std::polar(1.0, -e * integral);
      }
    }
  }
  return links;
}

namespace {

// Flux through the smallest index rectangle around the exclusion disk whose
// boundary links are all live, from summed link angles (not folded mod 2 pi).
double enclosed_lattice_flux(const SimulationConfig& config, const LatticeLinks& links) {
  const Grid& g = config.grid();
  const Disk& disk = config.geometry.exclusion;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!(disk.radius > 0.0)) return nan;
  const double e = config.coupling != 0.0 ? config.coupling : 1.0;
  const int ci = int(std::lround((disk.center.x() - g.origin.x()) / g.h));
  const int cj = int(std::lround((disk.center.y() - g.origin.y()) / g.h));
  for (int half = int(std::ceil(disk.radius / g.h)) + 1; half < std::max(g.nx, g.ny); ++half) {
    const int i0 = ci - half, i1 = ci + half, j0 = cj - half, j1 = cj + half;
    if (i0 < 0 || j0 < 0 || i1 >= g.nx || j1 >= g.ny) break;
    double angle = 0.0;
    bool live = true;
    for (int i = i0; i < i1 && live; ++i) {
      live = links.ux(i, j0) != 0.0 && links.ux(i, j1) != 0.0;
      angle += std::arg(links.ux(i, j0)) - std::arg(links.ux(i, j1));
    }
    for (int j = j0; j < j1 && live; ++j) {
      live = links.uy(i1, j) != 0.0 && links.uy(i0, j) != 0.0;
      angle += std::arg(links.uy(i1, j)) - std::arg(links.uy(i0, j));
    }
    if (live) return -angle / e;
  }
  return nan;
}

}  // namespace

PlaquetteStats plaquette_stats(const SimulationConfig& config, const LatticeLinks& links) {
  const Grid& g = config.grid();
  const double e = config.coupling != 0.0 ? config.coupling : 1.0;
  PlaquetteStats out;
  std::vector<double> row_max(g.ny, 0.0);
  for (int j = 0; j + 1 < g.ny; ++j) {
    double worst = 0.0;
    for (int i = 0; i + 1 < g.nx; ++i) {
      const Complex a = links.ux(i, j), b = links.uy(i + 1, j), c = links.ux(i, j + 1), d = links.uy(i, j);
      if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) continue;
      const double b_field = -std::arg(a * b * std::conj(c) * std::conj(d)) / (e * g.h * g.h);
      worst = std::max(worst, std::abs(b_field));
    }
    row_max[j] = worst;
  }
  out.total_flux = enclosed_lattice_flux(config, links);
  out.max_b_outside = *std::max_element(row_max.begin(), row_max.end());
  return out;
}

// ---------------------------------------------------------------------------
// Complex evolution

ComplexEvolution::ComplexEvolution(const SimulationConfig& config, bool sponge)
    : config_(config), links_(build_links(config)) {
  const Grid& g = config.grid();
  const MaskArray active = config.geometry.active_sites();
  inv_one_plus_ = RealArray::Zero(g.nx, g.ny);
  one_minus_ = RealArray::Ones(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double sd = sponge ? config.geometry.sponge_rate(i, j) * config.dt : 0.0;
      inv_one_plus_(i, j) = active(i, j) ? 1.0 / (1.0 + sd) : 0.0;
      one_minus_(i, j) = 1.0 - sd;
    }
}

double ComplexEvolution::step(EvolutionState& state) const {
  const Grid& g = config_.grid();
  const int nx = g.nx, ny = g.ny;
  const double r = config_.dt * config_.dt / (g.h * g.h);
  const double mdt2 = config_.dt * config_.dt * config_.mass * config_.mass;
  Complex* prev = state.prev.values.data();
  const Complex* curr = state.curr.values.data();
  const Complex* ux = links_.ux.data();
  const Complex* uy = links_.uy.data();
  const double* inv = inv_one_plus_.data();
  const double* om = one_minus_.data();
  std::vector<double> row_sum(ny, 0.0);

#pragma omp parallel for schedule(static) num_threads(thread_count(config_))
  for (int j = 0; j < ny; ++j) {
    const long row = long(j) * nx;
    const long dn = long(j == 0 ? ny - 1 : j - 1) * nx;
    const long up = long(j == ny - 1 ? 0 : j + 1) * nx;
    double sum = 0.0;
    auto site = [&](int i, int im, int ip) {
      const long k = row + i;
      const Complex c = curr[k];
      const Complex lap = ux[k] * curr[row + ip] + std::conj(ux[row + im]) * curr[row + im] +
                          uy[k] * curr[up + i] + std::conj(uy[dn + i]) * curr[dn + i] - 4.0 * c;
      const Complex next = inv[k] * (2.0 * c - om[k] * prev[k] + r * lap - mdt2 * c);
      prev[k] = next;
      sum += std::norm(next);
    };
    site(0, nx - 1, 1);
    for (int i = 1; i < nx - 1; ++i) site(i, i - 1, i + 1);
    site(nx - 1, nx - 2, 0);
    row_sum[j] = sum;
  }

  const double dt_state = state.curr.t - state.prev.t;
  std::swap(state.prev, state.curr);
  state.curr.t = state.prev.t + dt_state;
  ++state.step;
  return pairwise_sum(row_sum.data(), row_sum.size()) * g.h * g.h;
}

ComplexArray ComplexEvolution::apply_operator(const ComplexArray& psi) const {
  const Grid& g = config_.grid();
  ComplexArray out = ComplexArray::Zero(g.nx, g.ny);
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double m2 = config_.mass * config_.mass;
#pragma omp parallel for schedule(static) num_threads(thread_count(config_))
  for (int j = 0; j < g.ny; ++j) {
    const int jm = j == 0 ? g.ny - 1 : j - 1, jp = j == g.ny - 1 ? 0 : j + 1;
    for (int i = 0; i < g.nx; ++i) {
      if (inv_one_plus_(i, j) == 0.0) continue;
      const int im = i == 0 ? g.nx - 1 : i - 1, ip = i == g.nx - 1 ? 0 : i + 1;
      const Complex c = psi(i, j);
      const Complex lap = links_.ux(i, j) * psi(ip, j) + std::conj(links_.ux(im, j)) * psi(im, j) +
                          links_.uy(i, j) * psi(i, jp) + std::conj(links_.uy(i, jm)) * psi(i, jm) -
                          4.0 * c;
      out(i, j) = inv_h2 * lap - m2 * c;
    }
  }
  return out;
}

double total_charge(const EvolutionState& state) {
  const Grid& g = state.curr.grid;
  const double dt = state.curr.t - state.prev.t;
  const ComplexArray prod = state.prev.values * state.curr.values.conjugate();
  std::vector<double> rows(g.ny);
  for (int j = 0; j < g.ny; ++j) rows[j] = prod.col(j).imag().sum();
  return pairwise_sum(rows.data(), rows.size()) * g.h * g.h / dt;
}

Diagnostic ComplexEvolution::diagnose(const EvolutionState& state) const {
  const Grid& g = config_.grid();
  const double dt = state.curr.t - state.prev.t;
  Diagnostic d;
  d.step = state.step;
  d.t = state.curr.t;
  d.charge = total_charge(state);
  const ComplexArray lp = apply_operator(state.prev.values);
  std::vector<double> norm_rows(g.ny), energy_rows(g.ny);
  for (int j = 0; j < g.ny; ++j) {
    norm_rows[j] = state.curr.values.col(j).abs2().sum();
    const auto diff = (state.curr.values.col(j) - state.prev.values.col(j)) / dt;
    energy_rows[j] = diff.abs2().sum() - (state.curr.values.col(j).conjugate() * lp.col(j)).real().sum();
  }
  d.norm = pairwise_sum(norm_rows.data(), norm_rows.size()) * g.h * g.h;
  d.energy = pairwise_sum(energy_rows.data(), energy_rows.size()) * g.h * g.h;
  d.max_amplitude = state.curr.values.abs().maxCoeff();
  return d;
}

void step_complex(EvolutionState& state, const ComplexEvolution& evolution) { evolution.step(state); }

void reverse_time(EvolutionState& state) {
  std::swap(state.prev, state.curr);
  state.curr.dt = state.prev.dt = -state.curr.dt;
}

// ---------------------------------------------------------------------------
// Dressed evolution

DressedEvolution::DressedEvolution(const SimulationConfig& config, const RealDressedPair& pair,
                                   bool sponge)
    : config_(config), geometry_active_(config.geometry.active_sites()) {
  const Grid& g = config.grid();
  sigma_dt_ = RealArray::Zero(g.nx, g.ny);
  if (sponge)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) sigma_dt_(i, j) = config.geometry.sponge_rate(i, j) * config.dt;
  redress(pair);
}

void DressedEvolution::redress(const RealDressedPair& pair) {
  const Grid& g = config_.grid();
  if (!(pair.grid == g)) throw GeometryError("dressed pair grid does not match the configuration");
  pair_ = pair;
  undressed_ = 0;
  const double e = config_.coupling;
  cx_ = RealArray::Zero(g.nx, g.ny);
  cy_ = RealArray::Zero(g.nx, g.ny);
  inv_diag_ = RealArray::Zero(g.nx, g.ny);
  prev_coef_ = RealArray::Zero(g.nx, g.ny);
  // Masked and far-tail sites stay live with Abar taken as zero.  Their
  // phase is noise, and a frozen noisy Abar_t makes the leapfrog unstable.
  const double floor = kDressFloor * pair.phi.maxCoeff();
  auto active = [&](int i, int j) { return bool(geometry_active_(i, j)); };
  auto dressed = [&](int i, int j) { return pair.defined(i, j) && pair.phi(i, j) >= floor; };
  auto link_angle = [&](const RealArray& abar, int i, int j, int i2, int j2) {
    const bool a = dressed(i, j), b = dressed(i2, j2);
    if (a && b) return e * g.h * 0.5 * (abar(i, j) + abar(i2, j2));
    if (a) return e * g.h * abar(i, j);
    if (b) return e * g.h * abar(i2, j2);
    return 0.0;
  };
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (!active(i, j)) continue;
      const int ip = (i + 1) % g.nx, jp = (j + 1) % g.ny;
      if ((g.periodic || i + 1 < g.nx) && active(ip, j)) cx_(i, j) = std::cos(link_angle(pair.abar_x, i, j, ip, j));
      if ((g.periodic || j + 1 < g.ny) && active(i, jp)) cy_(i, j) = std::cos(link_angle(pair.abar_y, i, j, i, jp));
      double ct = pair.has_time_component && dressed(i, j) ? std::cos(e * config_.dt * pair.abar_t(i, j)) : 1.0;
      // Far-tail sites can carry a phase step beyond pi/2 per dt.
      if (!(ct > 0.0)) {
        ct = 1.0;
        ++undressed_;
      }
      inv_diag_(i, j) = 1.0 / ((1.0 + sigma_dt_(i, j)) * ct);
      prev_coef_(i, j) = (1.0 - sigma_dt_(i, j)) * ct;
    }
  }
}

void DressedEvolution::step(DressedState& state) const {
  const Grid& g = config_.grid();
  const int nx = g.nx, ny = g.ny;
  const double r = config_.dt * config_.dt / (g.h * g.h);
  const double mdt2 = config_.dt * config_.dt * config_.mass * config_.mass;
  double* prev = state.phi_prev.data();
  const double* curr = state.phi_curr.data();
  const double* cx = cx_.data();
  const double* cy = cy_.data();
  const double* inv = inv_diag_.data();
  const double* pc = prev_coef_.data();

#pragma omp parallel for schedule(static) num_threads(thread_count(config_))
  for (int j = 0; j < ny; ++j) {
    const long row = long(j) * nx;
    const long dn = long(j == 0 ? ny - 1 : j - 1) * nx;
    const long up = long(j == ny - 1 ? 0 : j + 1) * nx;
    auto site = [&](int i, int im, int ip) {
      const long k = row + i;
      const double c = curr[k];
      const double lap = cx[k] * curr[row + ip] + cx[row + im] * curr[row + im] + cy[k] * curr[up + i] +
                         cy[dn + i] * curr[dn + i] - 4.0 * c;
      prev[k] = inv[k] * (2.0 * c - pc[k] * prev[k] + r * lap - mdt2 * c);
    };
    site(0, nx - 1, 1);
    for (int i = 1; i < nx - 1; ++i) site(i, i - 1, i + 1);
    site(nx - 1, nx - 2, 0);
  }
  state.phi_prev.swap(state.phi_curr);
  state.t += config_.dt;
  ++state.step;
}

void step_dressed(DressedState& state, const DressedEvolution& evolution) { evolution.step(state); }

std::vector<DressedComparison> dressed_cross_check(const SimulationConfig& config, int interval,
                                                   int intervals, const GaugeOptions& options) {
  if (interval < 1 || intervals < 1) throw ConfigError("re-dressing interval and count must be >= 1");
  GaugeOptions opt = options;
  opt.coupling = config.coupling;
  EvolutionState complex_state = init_wavepacket(config);
  const ComplexEvolution complex_evo(config);
  RealDressedPair pair = to_schrodinger_gauge(complex_state.prev, complex_state.curr, config.potential, opt);
  DressedEvolution dressed_evo(config, pair);
  DressedState dressed{complex_state.prev.values.abs(), complex_state.curr.values.abs(), 0.0, 0};
  const double initial_masked = pair.masked_fraction();

  std::vector<DressedComparison> out;
  for (int n = 0; n < intervals; ++n) {
    for (int s = 0; s < interval; ++s) {
      complex_evo.step(complex_state);
      dressed_evo.step(dressed);
    }
    const RealArray amp = complex_state.curr.values.abs();
    DressedComparison cmp;
    cmp.step = complex_state.step;
    cmp.relative_l2 = std::sqrt((dressed.phi_curr - amp).square().sum() / amp.square().sum());
    pair = to_schrodinger_gauge(complex_state.prev, complex_state.curr, config.potential, opt);
    cmp.masked_fraction = pair.masked_fraction();
    out.push_back(cmp);
    if (cmp.masked_fraction - initial_masked > 0.10) {
      std::ostringstream msg;
      msg << "dressed mode unreliable near nodes: masked fraction grew from " << initial_masked << " to "
          << cmp.masked_fraction << " at step " << cmp.step;
      throw NumericalError(msg.str());
    }
    dressed_evo.redress(pair);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full runs

RunResult run(const SimulationConfig& config, const SnapshotCallback& on_output) {
  RunResult result;
  EvolutionState& state = result.state;
  state = init_wavepacket(config);
  const ComplexEvolution evo(config);
  const Grid& g = config.grid();

  ScreenRecord& screen = result.screen;
  screen.column = config.screen_column;
  std::vector<int> screen_rows;
  if (screen.column >= 0) {
    for (int j = 0; j < g.ny; ++j) {
      if (config.geometry.in_sponge(screen.column, j) || config.geometry.blocked(screen.column, j)) continue;
      screen_rows.push_back(j);
      screen.positions.push_back(g.position(screen.column, j).y());
    }
    screen.intensity.assign(screen_rows.size(), 0.0);
  }

  std::vector<std::pair<int, int>> solenoid_sites;
  const VectorPotentialSpec& root = config.potential.root();
  if (root.kind() == VectorPotentialSpec::Kind::IdealSolenoid) {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if ((g.position(i, j) - root.center()).norm() <= root.radius()) solenoid_sites.emplace_back(i, j);
  }

  auto record = [&]() {
    Diagnostic d = evo.diagnose(state);
    state.diagnostics.push_back(d);
    if (!std::isfinite(d.max_amplitude) || !std::isfinite(d.charge) || d.max_amplitude > kOverflowGuard) {
      std::ostringstream msg;
      msg << "non-finite or overflowing field at step " << state.step << "; "
          << format_history(state.diagnostics);
      throw NumericalError(msg.str());
    }
    if (on_output) on_output(state);
  };

  record();
  const double dt = config.dt;
  std::vector<double> totals;
  totals.reserve(config.steps);
  double in_solenoid = 0.0;
  for (int n = 1; n <= config.steps; ++n) {
    totals.push_back(evo.step(state) * dt);
    for (std::size_t r = 0; r < screen_rows.size(); ++r)
      screen.intensity[r] += std::norm(state.curr.values(screen.column, screen_rows[r])) * dt;
    for (const auto& [i, j] : solenoid_sites) in_solenoid += std::norm(state.curr.values(i, j)) * g.h * g.h * dt;
    if (n % config.output_cadence == 0 || n == config.steps) record();
  }

  result.confinement.integrated_total = pairwise_sum(totals.data(), totals.size());
  result.confinement.integrated_in_solenoid = in_solenoid;
  const PlaquetteStats ps = plaquette_stats(config, evo.links());
  result.confinement.max_b_outside = ps.max_b_outside;
  result.confinement.lattice_flux = ps.total_flux;
  return result;
}

}  // namespace abfield

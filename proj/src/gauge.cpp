#include "abfield/gauge.hpp"

#include "abfield/error.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

namespace abfield {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kHolonomyTolerance = 0.5 * std::numbers::pi;

int wrap_index(int k, int n, bool periodic) {
  if (k >= 0 && k < n) return k;
  if (!periodic) return -1;
  return (k + n) % n;
}

// arg(b) - arg(a) folded into (-pi, pi].
double phase_step(Complex a, Complex b) { return std::arg(b * std::conj(a)); }

MaskArray support_mask(const ComplexField2D& psi, double node_threshold) {
  const RealArray amp = psi.values.abs();
  const double peak = amp.maxCoeff();
  if (!(peak > 0.0)) throw NumericalError("field has no support");
  return amp >= node_threshold * peak;
}

void fill_spatial(const ComplexField2D& psi, const VectorPotentialSpec& A, const GaugeOptions& opt,
                  RealDressedPair& pair) {
  const Grid& g = psi.grid;
  const MaskArray support = support_mask(psi, opt.node_threshold);
  pair.grid = g;
  pair.phi = psi.values.abs();
  pair.abar_x = RealArray::Constant(g.nx, g.ny, kNaN);
  pair.abar_y = RealArray::Constant(g.nx, g.ny, kNaN);
  pair.abar_t = RealArray::Zero(g.nx, g.ny);
  pair.defined = MaskArray::Constant(g.nx, g.ny, false);

  // d(arg psi) along one axis: centered where both neighbours are on the
  // support, one-sided where only one is.
  auto gradient = [&](int i, int j, int di, int dj, double& out) {
    const int ip = wrap_index(i + di, g.nx, g.periodic), jp = wrap_index(j + dj, g.ny, g.periodic);
    const int im = wrap_index(i - di, g.nx, g.periodic), jm = wrap_index(j - dj, g.ny, g.periodic);
    const bool fwd = ip >= 0 && jp >= 0 && support(ip, jp);
    const bool bwd = im >= 0 && jm >= 0 && support(im, jm);
    const Complex c = psi.values(i, j);
    if (fwd && bwd) {
      out = (phase_step(c, psi.values(ip, jp)) + phase_step(psi.values(im, jm), c)) / (2 * g.h);
    } else if (fwd) {
      out = phase_step(c, psi.values(ip, jp)) / g.h;
    } else if (bwd) {
      out = phase_step(psi.values(im, jm), c) / g.h;
    } else {
      return false;
    }
    return true;
  };

  const double inv_e = 1.0 / opt.coupling;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (!support(i, j)) continue;
      double gx = 0, gy = 0;
      if (!gradient(i, j, 1, 0, gx) || !gradient(i, j, 0, 1, gy)) continue;
      const Vec2 a = eval_potential(A, g.position(i, j));
      pair.abar_x(i, j) = a.x() - inv_e * gx;
      pair.abar_y(i, j) = a.y() - inv_e * gy;
      pair.defined(i, j) = true;
    }
  }
}

struct Reconstruction {
  RealArray theta;
  double max_mismatch = 0.0;
};

// Phase increment along the lattice edge (i,j) -> (i+di, j+dj).
double edge_increment(const RealDressedPair& pair, const RealArray& ax, const RealArray& ay, int i,
                      int j, int i2, int j2, bool along_x, double coupling) {
  const RealArray& comp = along_x ? ax : ay;
  const RealArray& abar = along_x ? pair.abar_x : pair.abar_y;
  return coupling * pair.grid.h * 0.5 *
         ((comp(i, j) - abar(i, j)) + (comp(i2, j2) - abar(i2, j2)));
}

std::vector<std::vector<std::pair<int, int>>> components(const RealDressedPair& pair) {
  const Grid& g = pair.grid;
  Eigen::ArrayXXi label = Eigen::ArrayXXi::Constant(g.nx, g.ny, -1);
  std::vector<std::vector<std::pair<int, int>>> comps;
  for (int j0 = 0; j0 < g.ny; ++j0) {
    for (int i0 = 0; i0 < g.nx; ++i0) {
      if (!pair.defined(i0, j0) || label(i0, j0) >= 0) continue;
      const int id = int(comps.size());
      comps.emplace_back();
      std::deque<std::pair<int, int>> queue{{i0, j0}};
      label(i0, j0) = id;
      while (!queue.empty()) {
        const auto [i, j] = queue.front();
        queue.pop_front();
        comps[id].emplace_back(i, j);
        const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
        for (const auto& n : nb) {
          const int a = wrap_index(n[0], g.nx, g.periodic), b = wrap_index(n[1], g.ny, g.periodic);
          if (a < 0 || b < 0 || !pair.defined(a, b) || label(a, b) >= 0) continue;
          label(a, b) = id;
          queue.emplace_back(a, b);
        }
      }
    }
  }
  return comps;
}

Reconstruction reconstruct(const RealDressedPair& pair, const VectorPotentialSpec& A, int i0, int j0,
                           double phase0, double coupling) {
  const Grid& g = pair.grid;
  RealArray ax(g.nx, g.ny), ay(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 a = eval_potential(A, g.position(i, j));
      ax(i, j) = a.x();
      ay(i, j) = a.y();
    }

  Reconstruction out;
  out.theta = RealArray::Constant(g.nx, g.ny, kNaN);
  MaskArray seen = MaskArray::Constant(g.nx, g.ny, false);
  std::deque<std::pair<int, int>> queue{{i0, j0}};
  seen(i0, j0) = true;
  out.theta(i0, j0) = phase0;
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    for (int dir = 0; dir < 4; ++dir) {
      const bool along_x = dir < 2;
      const int step = (dir % 2 == 0) ? 1 : -1;
      const int a = wrap_index(i + (along_x ? step : 0), g.nx, g.periodic);
      const int b = wrap_index(j + (along_x ? 0 : step), g.ny, g.periodic);
      if (a < 0 || b < 0 || !pair.defined(a, b)) continue;
      const double inc = step * edge_increment(pair, ax, ay, i, j, a, b, along_x, coupling);
      if (!seen(a, b)) {
        seen(a, b) = true;
        out.theta(a, b) = out.theta(i, j) + inc;
        queue.emplace_back(a, b);
      } else {
        const double mismatch = std::abs(out.theta(a, b) - out.theta(i, j) - inc);
        out.max_mismatch = std::max(out.max_mismatch, mismatch);
      }
    }
  }
  return out;
}

}  // namespace

ComplexField2D ComplexField2D::zeros(const Grid& grid) {
  ComplexField2D f;
  f.grid = grid;
  f.values = ComplexArray::Zero(grid.nx, grid.ny);
  return f;
}

void ComplexField2D::check_finite() const {
  if (!values.real().allFinite() || !values.imag().allFinite())
    throw NumericalError("complex field contains non-finite values");
}

double RealDressedPair::masked_fraction() const {
  return 1.0 - double(defined.count()) / double(defined.size());
}

RealDressedPair to_schrodinger_gauge(const ComplexField2D& psi, const VectorPotentialSpec& A,
                                     const GaugeOptions& options) {
  psi.check_finite();
  RealDressedPair pair;
  fill_spatial(psi, A, options, pair);
  return pair;
}

RealDressedPair to_schrodinger_gauge(const ComplexField2D& prev, const ComplexField2D& now,
                                     const VectorPotentialSpec& A, const GaugeOptions& options) {
  if (!(prev.grid == now.grid)) throw GeometryError("time levels live on different grids");
  const double dt = now.t - prev.t;
  if (!(dt != 0.0)) throw NumericalError("time levels must differ in t");
  prev.check_finite();
  now.check_finite();
  RealDressedPair pair;
  fill_spatial(now, A, options, pair);
  const double inv_e = 1.0 / options.coupling;
  const RealArray prev_amp = prev.values.abs();
  const double peak = prev_amp.maxCoeff();
  for (int j = 0; j < now.grid.ny; ++j) {
    for (int i = 0; i < now.grid.nx; ++i) {
      if (!pair.defined(i, j)) {
        pair.abar_t(i, j) = kNaN;
        continue;
      }
      if (prev_amp(i, j) < options.node_threshold * peak) {
        pair.defined(i, j) = false;
        pair.abar_x(i, j) = pair.abar_y(i, j) = pair.abar_t(i, j) = kNaN;
        continue;
      }
      pair.abar_t(i, j) = -inv_e * phase_step(prev.values(i, j), now.values(i, j)) / dt;
    }
  }
  pair.has_time_component = true;
  return pair;
}

ComplexField2D from_schrodinger_gauge(const RealDressedPair& pair, const VectorPotentialSpec& A,
                                      const SiteAnchor& anchor, const GaugeOptions& options) {
  const Grid& g = pair.grid;
  if (anchor.i < 0 || anchor.i >= g.nx || anchor.j < 0 || anchor.j >= g.ny ||
      !pair.defined(anchor.i, anchor.j))
    throw GeometryError("anchor site is outside the defined region");

  const auto comps = components(pair);
  if (comps.size() > 1) {
    std::ostringstream msg;
    msg << "defined region is disconnected: " << comps.size() << " components";
    for (std::size_t c = 0; c < comps.size(); ++c)
      msg << (c ? "; " : ": ") << "#" << c << " size " << comps[c].size() << " at ("
          << comps[c].front().first << "," << comps[c].front().second << ")";
    throw GeometryError(msg.str());
  }

  const Reconstruction rec = reconstruct(pair, A, anchor.i, anchor.j, anchor.phase, options.coupling);
  if (rec.max_mismatch > kHolonomyTolerance) {
    std::ostringstream msg;
    msg << "non-integrable phase: loop holonomy mismatch " << rec.max_mismatch
        << " rad (phase vortex in the defined region)";
    throw NumericalError(msg.str());
  }

  ComplexField2D psi = ComplexField2D::zeros(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      psi.values(i, j) = pair.defined(i, j) ? std::polar(pair.phi(i, j), rec.theta(i, j))
                                            : Complex(pair.phi(i, j), 0.0);
  return psi;
}

double max_holonomy_mismatch(const RealDressedPair& pair, const VectorPotentialSpec& A,
                             const GaugeOptions& options) {
  double worst = 0.0;
  for (const auto& comp : components(pair)) {
    const auto [i0, j0] = comp.front();
    worst = std::max(worst, reconstruct(pair, A, i0, j0, 0.0, options.coupling).max_mismatch);
  }
  return worst;
}

DressedCurrent dressed_current(const RealDressedPair& pair, double coupling) {
  const RealArray w = -2.0 * coupling * coupling * pair.phi.square();
  DressedCurrent j;
  j.x = w * pair.abar_x;
  j.y = w * pair.abar_y;
  j.t = w * pair.abar_t;
  // phi = 0 carries no current even where Abar is undefined.
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (w(k) == 0.0) j.x(k) = j.y(k) = j.t(k) = 0.0;
    else if (!pair.defined(k)) j.x(k) = j.y(k) = j.t(k) = kNaN;
  }
  return j;
}

double relative_l2_up_to_phase(const ComplexArray& a, const ComplexArray& b) {
  const Complex overlap = (a.conjugate() * b).sum();
  const Complex rot = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : Complex(1.0, 0.0);
  const double denom = std::sqrt(b.abs2().sum());
  return std::sqrt((a * rot - b).abs2().sum()) / (denom > 0 ? denom : 1.0);
}

}  // namespace abfield

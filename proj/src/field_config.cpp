#include "abfield/field_config.hpp"

#include "abfield/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <numbers>
#include <sstream>

namespace abfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSegmentTolerance = 1e-10;
constexpr long kMaxSubintervals = 1L << 20;
constexpr double kWindingTolerance = 1e-6;

}  // namespace

Grid Grid::centered(int nx, int ny, double h, bool periodic) {
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.h = h;
  g.origin = Vec2(0.0, -0.5 * (ny - 1) * h);
  g.periodic = periodic;
  return g;
}

// ---------------------------------------------------------------------------
// Gauge functions

GaugeFunction GaugeFunction::linear(const Vec2& gradient) {
  GaugeFunction f;
  f.kind = Kind::Linear;
  f.wavevector = gradient;
  return f;
}

GaugeFunction GaugeFunction::sinusoid(double amplitude, const Vec2& k, double phase) {
  GaugeFunction f;
  f.kind = Kind::Sinusoid;
  f.amplitude = amplitude;
  f.wavevector = k;
  f.phase = phase;
  return f;
}

GaugeFunction GaugeFunction::gaussian(double amplitude, const Vec2& center, double width) {
  if (!(width > 0.0)) throw GeometryError("gaussian gauge function needs width > 0");
  GaugeFunction f;
  f.kind = Kind::Gaussian;
  f.amplitude = amplitude;
  f.center = center;
  f.width = width;
  return f;
}

double GaugeFunction::value(const Vec2& x) const {
  switch (kind) {
    case Kind::Linear:
      return wavevector.dot(x);
    case Kind::Sinusoid:
      return amplitude * std::sin(wavevector.dot(x) + phase);
    case Kind::Gaussian:
      return amplitude * std::exp(-(x - center).squaredNorm() / (width * width));
  }
  return 0.0;
}

Vec2 GaugeFunction::gradient(const Vec2& x) const {
  switch (kind) {
    case Kind::Linear:
      return wavevector;
    case Kind::Sinusoid:
      return amplitude * std::cos(wavevector.dot(x) + phase) * wavevector;
    case Kind::Gaussian: {
      const Vec2 d = x - center;
      return -2.0 / (width * width) * value(x) * d;
    }
  }
  return Vec2::Zero();
}

// ---------------------------------------------------------------------------
// Potentials

VectorPotentialSpec VectorPotentialSpec::ideal_solenoid(const Vec2& center, double radius,
                                                        double flux) {
  if (!(radius > 0.0)) throw GeometryError("ideal solenoid needs radius R > 0");
  if (!std::isfinite(flux)) throw GeometryError("solenoid flux must be finite");
  VectorPotentialSpec s;
  s.kind_ = Kind::IdealSolenoid;
  s.center_ = center;
  s.radius_ = radius;
  s.flux_ = flux;
  return s;
}

VectorPotentialSpec VectorPotentialSpec::uniform(const Vec2& value) {
  VectorPotentialSpec s;
  s.kind_ = Kind::UniformVector;
  s.uniform_ = value;
  return s;
}

VectorPotentialSpec VectorPotentialSpec::gauge_shifted(const VectorPotentialSpec& base,
                                                       const GaugeFunction& chi) {
  VectorPotentialSpec s;
  s.kind_ = Kind::GaugeShifted;
  s.base_ = std::make_shared<const VectorPotentialSpec>(base);
  s.chi_ = chi;
  return s;
}

double VectorPotentialSpec::flux() const {
  switch (kind_) {
    case Kind::IdealSolenoid:
      return flux_;
    case Kind::UniformVector:
      return 0.0;
    case Kind::GaugeShifted:
      return base_->flux();
  }
  return 0.0;
}

const VectorPotentialSpec& VectorPotentialSpec::root() const {
  const VectorPotentialSpec* s = this;
  while (s->kind_ == Kind::GaugeShifted) s = s->base_.get();
  return *s;
}

double VectorPotentialSpec::gauge_value(const Vec2& x) const {
  double total = 0.0;
  for (const VectorPotentialSpec* s = this; s->kind_ == Kind::GaugeShifted; s = s->base_.get())
    total += s->chi_.value(x);
  return total;
}

std::vector<GaugeFunction> VectorPotentialSpec::gauge_stack() const {
  std::vector<GaugeFunction> stack;
  for (const VectorPotentialSpec* s = this; s->kind_ == Kind::GaugeShifted; s = s->base_.get())
    stack.push_back(s->chi_);
  return {stack.rbegin(), stack.rend()};
}

VectorPotentialSpec VectorPotentialSpec::with_flux(double flux) const {
  const VectorPotentialSpec& r = root();
  if (r.kind_ != Kind::IdealSolenoid) throw GeometryError("flux can only be set on a solenoid potential");
  VectorPotentialSpec out = ideal_solenoid(r.center_, r.radius_, flux);
  for (const GaugeFunction& chi : gauge_stack()) out = gauge_shifted(out, chi);
  return out;
}

Vec2 eval_potential(const VectorPotentialSpec& spec, const Vec2& x) {
  switch (spec.kind()) {
    case VectorPotentialSpec::Kind::IdealSolenoid: {
      const Vec2 d = x - spec.center();
      const double r2 = d.squaredNorm();
      if (r2 == 0.0) return Vec2::Zero();
      const double R = spec.radius();
      // A = a(r) * (-dy, dx): a = flux / (2 pi r^2) outside, flux / (2 pi R^2) inside.
      const double coeff = spec.flux() / (kTwoPi * std::max(r2, R * R));
      return coeff * Vec2(-d.y(), d.x());
    }
    case VectorPotentialSpec::Kind::UniformVector:
      return spec.uniform_value();
    case VectorPotentialSpec::Kind::GaugeShifted:
      return eval_potential(spec.base(), x) + spec.gauge().gradient(x);
  }
  return Vec2::Zero();
}

double fd_curl(const VectorPotentialSpec& spec, const Vec2& x, double h) {
  const Vec2 ex(h, 0.0);
  const Vec2 ey(0.0, h);
  const double dAy_dx = (eval_potential(spec, x + ex).y() - eval_potential(spec, x - ex).y()) / (2 * h);
  const double dAx_dy = (eval_potential(spec, x + ey).x() - eval_potential(spec, x - ey).x()) / (2 * h);
  return dAy_dx - dAx_dy;
}

// ---------------------------------------------------------------------------
// Quadrature

const QuadratureRule& gauss_legendre(int order) {
  if (order < 1) throw GeometryError("quadrature order must be >= 1");
  static std::mutex mutex;
  static std::vector<std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  if (cache.size() <= std::size_t(order)) cache.resize(order + 1);
  auto& slot = cache[order];
  if (!slot) {
    // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
      const double beta = k / std::sqrt(4.0 * k * k - 1.0);
      jacobi(k, k - 1) = beta;
      jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    auto rule = std::make_unique<QuadratureRule>();
    rule->nodes = solver.eigenvalues();
    rule->weights = 2.0 * solver.eigenvectors().row(0).transpose().array().square();
    slot = std::move(rule);
  }
  return *slot;
}

namespace {

double composite_gauss(const VectorPotentialSpec& spec, const Vec2& a, const Vec2& b,
                       const QuadratureRule& rule, long n) {
  const Vec2 d = b - a;
  const double half = 0.5 / double(n);
  double sum = 0.0;
  for (long s = 0; s < n; ++s) {
    const double mid = (s + 0.5) / double(n);
    double piece = 0.0;
    for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
      const Vec2 x = a + (mid + half * rule.nodes[q]) * d;
      piece += rule.weights[q] * eval_potential(spec, x).dot(d);
    }
    sum += half * piece;
  }
  return sum;
}

// Parameters t in (0, 1) where a + t (b - a) crosses the solenoid boundary.
std::vector<double> kink_parameters(const VectorPotentialSpec& spec, const Vec2& a, const Vec2& b) {
  std::vector<double> ts;
  const VectorPotentialSpec& root = spec.root();
  if (root.kind() != VectorPotentialSpec::Kind::IdealSolenoid) return ts;
  const Vec2 d = b - a;
  const Vec2 f = a - root.center();
  const double qa = d.squaredNorm();
  const double qb = 2.0 * f.dot(d);
  const double qc = f.squaredNorm() - root.radius() * root.radius();
  const double disc = qb * qb - 4 * qa * qc;
  if (qa == 0.0 || disc <= 0.0) return ts;
  const double sq = std::sqrt(disc);
  for (double t : {(-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)})
    if (t > 0.0 && t < 1.0) ts.push_back(t);
  return ts;
}

}  // namespace

SegmentIntegral segment_integral(const VectorPotentialSpec& spec, const Vec2& a, const Vec2& b,
                                 int order) {
  const QuadratureRule& rule = gauss_legendre(order);
  std::vector<double> cuts{0.0};
  for (double t : kink_parameters(spec, a, b)) cuts.push_back(t);
  cuts.push_back(1.0);

  SegmentIntegral out;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const Vec2 pa = a + cuts[p] * (b - a);
    const Vec2 pb = a + cuts[p + 1] * (b - a);
    long n = 1;
    double coarse = composite_gauss(spec, pa, pb, rule, n);
    double fine = coarse;
    double err = 0.0;
    while (true) {
      n *= 2;
      fine = composite_gauss(spec, pa, pb, rule, n);
      err = std::abs(fine - coarse);
      if (err < kSegmentTolerance || n >= kMaxSubintervals) break;
      coarse = fine;
    }
    out.value += fine;
    out.error_estimate += err;
    out.subintervals += n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Paths

std::size_t PathSpec::segment_count() const {
  if (vertices.size() < 2) return 0;
  return closed ? vertices.size() : vertices.size() - 1;
}

std::pair<Vec2, Vec2> PathSpec::segment(std::size_t k) const {
  return {vertices[k], vertices[(k + 1) % vertices.size()]};
}

PathSpec PathSpec::polygon_circle(const Vec2& center, double radius, int n, double turns,
                                  double start_angle) {
  PathSpec p;
  p.closed = true;
  const int total = int(std::lround(n * std::abs(turns)));
  const double dir = turns < 0 ? -1.0 : 1.0;
  for (int k = 0; k < total; ++k) {
    const double ang = start_angle + dir * kTwoPi * k / n;
    p.vertices.push_back(center + radius * Vec2(std::cos(ang), std::sin(ang)));
  }
  return p;
}

LineIntegralDetail line_integral_detail(const VectorPotentialSpec& spec, const PathSpec& path,
                                        int order) {
  if (path.vertices.size() < 2) throw GeometryError("degenerate path");
  if (order < 1) throw GeometryError("quadrature order must be >= 1");
  LineIntegralDetail out;
  out.segments.reserve(path.segment_count());
  for (std::size_t k = 0; k < path.segment_count(); ++k) {
    const auto [a, b] = path.segment(k);
    const SegmentIntegral s = segment_integral(spec, a, b, order);
    out.segments.push_back(s.value);
    out.error_estimate += s.error_estimate;
  }
  // Fixed-order summation keeps the total reproducible.
  for (double v : out.segments) out.total += v;
  return out;
}

double line_integral(const VectorPotentialSpec& spec, const PathSpec& path, int order) {
  return line_integral_detail(spec, path, order).total;
}

int winding_number(const PathSpec& loop, const Vec2& center) {
  if (!loop.closed) throw GeometryError("winding number needs a closed path");
  if (loop.vertices.size() < 2) throw GeometryError("degenerate path");
  double total = 0.0;
  for (std::size_t k = 0; k < loop.segment_count(); ++k) {
    const auto [a, b] = loop.segment(k);
    const Vec2 u = a - center;
    const Vec2 v = b - center;
    if (u.squaredNorm() == 0.0 || v.squaredNorm() == 0.0)
      throw GeometryError("loop passes through the winding center");
    const double cross = u.x() * v.y() - u.y() * v.x();
    total += std::atan2(cross, u.dot(v));
  }
  const double w = total / kTwoPi;
  const double rounded = std::round(w);
  if (std::abs(w - rounded) > kWindingTolerance) {
    std::ostringstream msg;
    msg << "winding number " << w << " is not an integer (loop crosses the center?)";
    throw GeometryError(msg.str());
  }
  return int(rounded);
}

double enclosed_flux(const VectorPotentialSpec& spec, const PathSpec& loop) {
  if (!loop.closed) throw GeometryError("enclosed flux needs a closed path");
  const VectorPotentialSpec& root = spec.root();
  if (root.kind() != VectorPotentialSpec::Kind::IdealSolenoid) {
    if (loop.vertices.size() < 2) throw GeometryError("degenerate path");
    return 0.0;
  }
  for (std::size_t k = 0; k < loop.segment_count(); ++k) {
    const auto [a, b] = loop.segment(k);
    // Closest approach of the segment to the solenoid axis.
    const Vec2 d = b - a;
    const double t = d.squaredNorm() > 0
                         ? std::clamp((root.center() - a).dot(d) / d.squaredNorm(), 0.0, 1.0)
                         : 0.0;
    if ((a + t * d - root.center()).norm() <= root.radius())
      throw GeometryError("loop passes through the solenoid disk");
  }
  return winding_number(loop, root.center()) * root.flux();
}

void check_path_outside(const PathSpec& path, const Disk& disk) {
  for (std::size_t k = 0; k < path.vertices.size(); ++k) {
    if (disk.radius > 0 && disk.contains(path.vertices[k])) {
      std::ostringstream msg;
      msg << "path vertex " << k << " lies inside the solenoid exclusion disk";
      throw GeometryError(msg.str());
    }
  }
}

PathSpec read_path(std::istream& in) {
  PathSpec p;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      std::istringstream directive(line.substr(first));
      std::string word;
      directive >> word;
      if (word == "#closed") p.closed = true;
      continue;
    }
    std::istringstream ss(line);
    double x = 0, y = 0;
    std::string extra;
    if (!(ss >> x >> y) || (ss >> extra)) {
      throw GeometryError("path line " + std::to_string(lineno) + ": expected \"x y\"");
    }
    p.vertices.emplace_back(x, y);
  }
  if (p.vertices.size() < 2) throw GeometryError("degenerate path");
  return p;
}

PathSpec read_path_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw GeometryError("cannot open path file " + filename);
  return read_path(in);
}

void write_path(std::ostream& out, const PathSpec& path) {
  if (path.closed) out << "#closed\n";
  out << std::setprecision(17);
  for (const Vec2& v : path.vertices) out << v.x() << ' ' << v.y() << '\n';
}

// ---------------------------------------------------------------------------
// Geometry mask

bool GeometryMask::blocked(int i, int j) const {
  if (!grid.periodic && (i <= 0 || j <= 0 || i >= grid.nx - 1 || j >= grid.ny - 1)) return true;
  if (barrier_column >= 0 && i >= barrier_column && i < barrier_column + barrier_thickness) {
    const bool open = std::any_of(slits.begin(), slits.end(),
                                  [j](const Slit& s) { return j >= s.lo && j < s.hi; });
    if (!open) return true;
  }
  if (exclusion.radius > 0.0 && exclusion.contains(grid.position(i, j))) return true;
  return false;
}

bool GeometryMask::in_sponge(int i, int j) const {
  if (grid.periodic || sponge_width <= 0) return false;
  const int depth = std::min({i, grid.nx - 1 - i, j, grid.ny - 1 - j});
  return depth < sponge_width;
}

double GeometryMask::sponge_rate(int i, int j) const {
  if (!in_sponge(i, j)) return 0.0;
  const int depth = std::min({i, grid.nx - 1 - i, j, grid.ny - 1 - j});
  const double s = double(sponge_width - depth) / sponge_width;
  return sponge_strength * s * s * s * s;
}

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> GeometryMask::active_sites() const {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> act(grid.nx, grid.ny);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) act(i, j) = !blocked(i, j);
  return act;
}

void GeometryMask::validate(const VectorPotentialSpec& potential) const {
  if (grid.nx < 3 || grid.ny < 3) throw GeometryError("grid needs at least 3x3 sites");
  if (!(grid.h > 0.0)) throw GeometryError("grid spacing h must be > 0");
  if (barrier_column >= 0) {
    if (barrier_thickness < 1 || barrier_column + barrier_thickness > grid.nx)
      throw GeometryError("barrier does not fit in the grid");
    std::vector<Slit> sorted = slits;
    std::sort(sorted.begin(), sorted.end(), [](const Slit& a, const Slit& b) { return a.lo < b.lo; });
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (sorted[k].lo < 0 || sorted[k].hi > grid.ny || sorted[k].lo >= sorted[k].hi)
        throw GeometryError("slit aperture outside the barrier line");
      if (k > 0 && sorted[k].lo < sorted[k - 1].hi) throw GeometryError("slit apertures overlap");
    }
  } else if (!slits.empty()) {
    throw GeometryError("slits given without a barrier");
  }
  const VectorPotentialSpec& root = potential.root();
  if (root.kind() == VectorPotentialSpec::Kind::IdealSolenoid) {
    // An active lattice edge stays at least sqrt(r^2 - h^2/4) from the disk center.
    const double clearance =
        std::sqrt(std::max(0.0, exclusion.radius * exclusion.radius - 0.25 * grid.h * grid.h));
    const double reach = (root.center() - exclusion.center).norm() + root.radius();
    if (!(clearance > reach)) {
      std::ostringstream msg;
      msg << "exclusion disk (radius " << exclusion.radius
          << ") does not strictly contain the solenoid of radius " << root.radius()
          << " with lattice clearance (need sqrt(r^2 - h^2/4) > offset + R)";
      throw GeometryError(msg.str());
    }
  }
  if (sponge_width < 0 || sponge_strength < 0.0) throw GeometryError("sponge parameters must be >= 0");
}

}  // namespace abfield

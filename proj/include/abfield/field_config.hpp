#pragma once

// Static external vector potentials, lattice geometry, integration paths,
// and the line-integral / enclosed-flux pair used to validate each other.
//
// Units: hbar = c = 1, lengths in units of the inverse Compton wavelength.
// Flux is quoted so that the Aharonov-Bohm phase of a unit-winding loop is
// e * flux.

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace abfield {

using Vec2 = Eigen::Vector2d;

/// Uniform 2D lattice.  Site (i, j) sits at origin + h * (i, j); i runs along
/// x (the propagation axis), j along y.
struct Grid {
  int nx = 0;
  int ny = 0;
  double h = 1.0;
  Vec2 origin = Vec2::Zero();
  bool periodic = false;

  /// Grid with x starting at 0 and y symmetric about 0, so that mirroring
  /// j -> ny-1-j maps y -> -y exactly.
  static Grid centered(int nx, int ny, double h, bool periodic = false);

  Vec2 position(int i, int j) const { return origin + h * Vec2(i, j); }
  Eigen::Index size() const { return Eigen::Index(nx) * ny; }
  bool operator==(const Grid&) const = default;
};

/// Smooth single-valued gauge function chi used by GaugeShifted potentials.
struct GaugeFunction {
  enum class Kind { Linear, Sinusoid, Gaussian };

  Kind kind = Kind::Linear;
  double amplitude = 0.0;     // Sinusoid, Gaussian
  Vec2 wavevector = Vec2::Zero();  // Linear: gradient c; Sinusoid: (kx, ky)
  double phase = 0.0;         // Sinusoid
  Vec2 center = Vec2::Zero();  // Gaussian
  double width = 1.0;         // Gaussian

  static GaugeFunction linear(const Vec2& gradient);
  static GaugeFunction sinusoid(double amplitude, const Vec2& k, double phase);
  static GaugeFunction gaussian(double amplitude, const Vec2& center, double width);

  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  bool operator==(const GaugeFunction&) const = default;
};

/// Analytic static vector potential.  Immutable once built; GaugeShifted
/// shares its base.
class VectorPotentialSpec {
 public:
  enum class Kind { IdealSolenoid, UniformVector, GaugeShifted };

  static VectorPotentialSpec ideal_solenoid(const Vec2& center, double radius, double flux);
  static VectorPotentialSpec uniform(const Vec2& value);
  static VectorPotentialSpec zero() { return uniform(Vec2::Zero()); }
  static VectorPotentialSpec gauge_shifted(const VectorPotentialSpec& base, const GaugeFunction& chi);

  Kind kind() const { return kind_; }
  const Vec2& center() const { return center_; }
  double radius() const { return radius_; }
  /// Flux of the solenoid itself; 0 for a uniform potential.
  double flux() const;
  const Vec2& uniform_value() const { return uniform_; }
  const VectorPotentialSpec& base() const { return *base_; }
  const GaugeFunction& gauge() const { return chi_; }

  /// The innermost non-shifted potential.
  const VectorPotentialSpec& root() const;
  /// Sum of all gauge functions stacked on top of root().
  double gauge_value(const Vec2& x) const;
  /// Stacked gauge functions, innermost first.
  std::vector<GaugeFunction> gauge_stack() const;
  /// Same potential and gauge stack with the solenoid flux replaced.  Throws
  /// GeometryError unless root() is an ideal solenoid.
  VectorPotentialSpec with_flux(double flux) const;

 private:
  Kind kind_ = Kind::UniformVector;
  Vec2 center_ = Vec2::Zero();
  double radius_ = 0.0;
  double flux_ = 0.0;
  Vec2 uniform_ = Vec2::Zero();
  std::shared_ptr<const VectorPotentialSpec> base_;
  GaugeFunction chi_;
};

/// Polyline in the plane; a closed path has an implicit last->first segment.
struct PathSpec {
  std::vector<Vec2> vertices;
  bool closed = false;

  std::size_t segment_count() const;
  std::pair<Vec2, Vec2> segment(std::size_t k) const;

  static PathSpec polygon_circle(const Vec2& center, double radius, int n, double turns = 1.0,
                                 double start_angle = 0.0);
};

struct Disk {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  bool contains(const Vec2& x) const { return (x - center).norm() <= radius; }
  bool operator==(const Disk&) const = default;
};

/// Half-open range [lo, hi) of row indices j.
struct Slit {
  int lo = 0;
  int hi = 0;
  bool operator==(const Slit&) const = default;
};

/// Sites where the matter field is forced to zero, plus the absorbing layer.
struct GeometryMask {
  Grid grid;
  int barrier_column = -1;  // < 0: no barrier
  int barrier_thickness = 1;
  std::vector<Slit> slits;
  Disk exclusion;           // radius 0: no exclusion disk
  int sponge_width = 32;
  double sponge_strength = 1.5;

  /// Dirichlet site: barrier wall, exclusion disk, or outer ring of a
  /// non-periodic grid.
  bool blocked(int i, int j) const;
  /// Damping rate at a site; grows with depth^4 into the layer.
  double sponge_rate(int i, int j) const;
  /// True inside the absorbing layer.
  bool in_sponge(int i, int j) const;

  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> active_sites() const;

  /// Throws GeometryError if slits overlap or leave the barrier line, or if
  /// the exclusion disk does not strictly contain the solenoid of `potential`
  /// (with room for every active lattice edge to stay outside it).
  void validate(const VectorPotentialSpec& potential) const;
  bool operator==(const GeometryMask&) const = default;
};

/// A(x).  Exactly at the solenoid axis the zero vector is returned.
Vec2 eval_potential(const VectorPotentialSpec& spec, const Vec2& x);

/// Finite-difference curl dAy/dx - dAx/dy at x with step h.
double fd_curl(const VectorPotentialSpec& spec, const Vec2& x, double h);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
const QuadratureRule& gauss_legendre(int order);

struct SegmentIntegral {
  double value = 0.0;
  double error_estimate = 0.0;
  long subintervals = 0;
};

struct LineIntegralDetail {
  double total = 0.0;
  std::vector<double> segments;
  double error_estimate = 0.0;
};

/// Composite Gauss-Legendre integral of A along the straight segment a->b.
/// The segment is split at kinks of the potential (solenoid boundary); each
/// piece doubles its subinterval count until successive estimates agree to
/// 1e-10 or 2^20 subintervals are reached.
SegmentIntegral segment_integral(const VectorPotentialSpec& spec, const Vec2& a, const Vec2& b,
                                 int order = 4);

LineIntegralDetail line_integral_detail(const VectorPotentialSpec& spec, const PathSpec& path,
                                        int order = 4);

/// Integral of A . dl along the path.  Throws GeometryError("degenerate path")
/// for fewer than two vertices.
double line_integral(const VectorPotentialSpec& spec, const PathSpec& path, int order = 4);

/// Signed number of turns of a closed path around `center`, from summed
/// angle increments.  Throws if the result is not within 1e-6 of an integer.
int winding_number(const PathSpec& loop, const Vec2& center);

/// winding(loop, solenoid center) * flux, computed geometrically.  Never
/// touches A.
double enclosed_flux(const VectorPotentialSpec& spec, const PathSpec& loop);

/// Throws GeometryError if any vertex lies inside the disk.
void check_path_outside(const PathSpec& path, const Disk& disk);

/// Plain-text vertex list: one "x y" pair per line, "#closed" marks a loop,
/// other lines starting with '#' are comments.
PathSpec read_path(std::istream& in);
PathSpec read_path_file(const std::string& filename);
void write_path(std::ostream& out, const PathSpec& path);

}  // namespace abfield

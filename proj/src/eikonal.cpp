#include "abfield/eikonal.hpp"

#include "abfield/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace abfield {

namespace {

double fold(double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(angle, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

}  // namespace

EikonalResult path_phase(const VectorPotentialSpec& spec, const PathSpec& path, double coupling) {
  const LineIntegralDetail li = line_integral_detail(spec, path);
  EikonalResult out;
  out.closed = path.closed;
  out.segments.reserve(li.segments.size());
  for (double s : li.segments) out.segments.push_back(-coupling * s);
  for (double s : out.segments) out.phase += s;
  out.error_estimate = std::abs(coupling) * li.error_estimate;
  out.phase_mod_2pi = fold(out.phase);
  return out;
}

double fringe_shift(const VectorPotentialSpec& spec, const PathSpec& upper, const PathSpec& lower,
                    double coupling) {
  if (upper.closed || lower.closed) throw GeometryError("fringe shift needs two open paths");
  if ((upper.vertices.front() - lower.vertices.front()).norm() > 1e-12 ||
      (upper.vertices.back() - lower.vertices.back()).norm() > 1e-12)
    throw GeometryError("slit paths must share their endpoints");
  return path_phase(spec, upper, coupling).phase - path_phase(spec, lower, coupling).phase;
}

RealArray eikonal_residual(const RealDressedPair& pair, double coupling, double mass) {
  const double e2 = coupling * coupling;
  RealArray out(pair.phi.rows(), pair.phi.cols());
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    if (!pair.defined(k)) {
      out(k) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double at = pair.has_time_component ? pair.abar_t(k) : 0.0;
    const double spatial = pair.abar_x(k) * pair.abar_x(k) + pair.abar_y(k) * pair.abar_y(k);
    out(k) = e2 * (at * at - spatial) - mass * mass;
  }
  return out;
}

RefractiveShift refractive_shift(const RefractiveModel& model, double coupling) {
  if (model.p0 == 0.0) throw GeometryError("eikonal model undefined at zero momentum");
  if (!(model.p0 > 0.0) || !(model.thickness >= 0.0))
    throw GeometryError("refractive model needs p0 > 0 and t >= 0");
  const double n1 = (model.p0 - coupling * model.a1) / model.p0;
  const double n2 = (model.p0 - coupling * model.a2) / model.p0;
  const double lambda0 = 2.0 * std::numbers::pi / model.p0;
  RefractiveShift out;
  out.delta_n = n1 - n2;
  out.delta_theta = 2.0 * std::numbers::pi / lambda0 * model.thickness * out.delta_n;
  return out;
}

double refractive_shift_from_paths(const RefractiveModel& model, double coupling) {
  if (!(model.p0 > 0.0) || !(model.thickness >= 0.0))
    throw GeometryError("refractive model needs p0 > 0 and t >= 0");
  PathSpec through1{{Vec2(0.0, 1.0), Vec2(model.thickness, 1.0)}, false};
  PathSpec through2{{Vec2(0.0, -1.0), Vec2(model.thickness, -1.0)}, false};
  const auto region1 = VectorPotentialSpec::uniform(Vec2(model.a1, 0.0));
  const auto region2 = VectorPotentialSpec::uniform(Vec2(model.a2, 0.0));
  return path_phase(region1, through1, coupling).phase - path_phase(region2, through2, coupling).phase;
}

}  // namespace abfield

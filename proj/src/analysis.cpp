#include "abfield/analysis.hpp"

#include "abfield/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace abfield {

namespace {

constexpr int kParams = 6;
using ParamVector = Eigen::Matrix<double, kParams, 1>;

double wrap_pi(double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(angle, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

// Internal parameters: background, amplitude at the reference position,
// log-envelope slope and curvature, kappa, theta.
FringeParams unpack(const ParamVector& p, double reference) {
  return {p(0), p(1), p(2), p(3), reference, p(4), p(5)};
}

// Residuals r = model - data and the Jacobian of the model.
void evaluate(const ParamVector& p, double reference, const Eigen::VectorXd& y, const Eigen::VectorXd& data,
              Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
  const Eigen::Index n = y.size();
  r.resize(n);
  if (jac) jac->resize(n, kParams);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double u = y(k) - reference;
    const double env = std::exp(u * (p(2) - p(3) * u));
    const double arg = p(4) * y(k) + p(5);
    const double c = std::cos(arg), s = std::sin(arg);
    r(k) = p(0) + p(1) * env * c - data(k);
    if (jac) {
      (*jac)(k, 0) = 1.0;
      (*jac)(k, 1) = env * c;
      (*jac)(k, 2) = p(1) * u * env * c;
      (*jac)(k, 3) = -p(1) * u * u * env * c;
      (*jac)(k, 4) = -p(1) * env * s * y(k);
      (*jac)(k, 5) = -p(1) * env * s;
    }
  }
}

ParamVector initial_guess(const Eigen::VectorXd& y, const Eigen::VectorXd& data, double reference,
                          double kappa_guess, int scan_points) {
  const double mean = data.mean();
  const Eigen::VectorXd dev = data.array() - mean;
  const Eigen::ArrayXd w = dev.array().square();
  const double wsum = w.sum();
  const double center = (w * y.array()).sum() / wsum;
  const double spread2 = (w * (y.array() - center).square()).sum() / wsum;
  const double rate = spread2 > 0 ? 1.0 / (4.0 * spread2) : 0.0;
  const Eigen::ArrayXd env = (-rate * (y.array() - center).square()).exp();

  double best_rss = std::numeric_limits<double>::infinity();
  ParamVector best;
  for (int q = 0; q < scan_points; ++q) {
    const double kappa = kappa_guess * (0.5 + double(q) / double(std::max(scan_points - 1, 1)));
    Eigen::MatrixXd basis(y.size(), 3);
    basis.col(0).setOnes();
    basis.col(1) = (env * (kappa * y.array()).cos()).matrix();
    basis.col(2) = (env * (kappa * y.array()).sin()).matrix();
    const Eigen::Vector3d coef = basis.colPivHouseholderQr().solve(data);
    const double rss = (basis * coef - data).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      // a cos(ky + theta) = a cos(theta) cos(ky) - a sin(theta) sin(ky)
      const double offset = reference - center;
      best << coef(0), std::hypot(coef(1), coef(2)) * std::exp(-rate * offset * offset), -2.0 * rate * offset, rate,
          kappa, std::atan2(-coef(2), coef(1));
    }
  }
  return best;
}

}  // namespace

double FringeParams::envelope(double y) const {
  const double u = y - reference;
  return amplitude * std::exp(u * (envelope_slope - envelope_rate * u));
}

double FringeParams::model(double y) const { return background + envelope(y) * std::cos(kappa * y + theta); }

double FringeParams::envelope_center() const {
  if (!(envelope_rate > 0.0)) return std::copysign(std::numeric_limits<double>::infinity(), envelope_slope);
  return reference + envelope_slope / (2.0 * envelope_rate);
}

InterferenceResult fit_fringes(const std::vector<double>& positions, const std::vector<double>& intensity,
                               double kappa_guess, const FitOptions& options) {
  if (positions.size() != intensity.size()) throw ConfigError("positions and intensities differ in length");
  if (positions.size() < std::size_t(kParams + 2)) throw NumericalError("no fringes: record too short");
  if (!(kappa_guess > 0.0)) throw ConfigError("kappa guess must be positive");

  const Eigen::Index n = Eigen::Index(positions.size());
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(positions.data(), n);
  const Eigen::VectorXd data = Eigen::Map<const Eigen::VectorXd>(intensity.data(), n);
  if (!y.allFinite() || !data.allFinite()) throw NumericalError("screen record contains non-finite values");

  const double mean = data.mean();
  const double spread = std::sqrt((data.array() - mean).square().mean());
  if (!(spread > 1e-12 * std::max(std::abs(mean), std::numeric_limits<double>::min())))
    throw NumericalError("no fringes: flat intensity record");

  const double reference = 0.5 * (y.minCoeff() + y.maxCoeff());
  ParamVector p = initial_guess(y, data, reference, kappa_guess, options.scan_points);

  Eigen::VectorXd r, r_new;
  Eigen::MatrixXd jac;
  evaluate(p, reference, y, data, r, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations && !converged; ++iter) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const ParamVector grad = jac.transpose() * r;
    const ParamVector diag = jtj.diagonal().cwiseMax(1e-300);
    for (;;) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += lambda * diag;
      const ParamVector delta = -lhs.ldlt().solve(grad);
      const double rel = (delta.array().abs() / (p.array().abs() + 1.0)).maxCoeff();
      const ParamVector trial = p + delta;
      evaluate(trial, reference, y, data, r_new, nullptr);
      const double trial_cost = r_new.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        p = trial;
        cost = trial_cost;
        evaluate(p, reference, y, data, r, &jac);
        lambda = std::max(lambda / 3.0, 1e-15);
        converged = !(rel > options.tolerance);
        break;
      }
      if (!(rel > options.tolerance)) {
        converged = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e20) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "fringe fit did not converge after " << iter << " iterations; final residual "
        << std::sqrt(cost / double(n)) / spread;
    throw NumericalError(msg.str());
  }

  // Canonical signs: amplitude > 0, kappa > 0.
  if (p(1) < 0) {
    p(1) = -p(1);
    p(5) += std::numbers::pi;
  }
  if (p(4) < 0) {
    p(4) = -p(4);
    p(5) = -p(5);
  }
  p(5) = wrap_pi(p(5));
  evaluate(p, reference, y, data, r, &jac);

  InterferenceResult out;
  out.positions = positions;
  out.intensity = intensity;
  out.params = unpack(p, reference);
  out.theta = p(5);
  out.theta_unwrapped = p(5);
  out.iterations = iter;
  out.residual = std::sqrt(r.squaredNorm() / double(n)) / spread;
  const double s2 = r.squaredNorm() / double(std::max<Eigen::Index>(n - kParams, 1));
  const Eigen::MatrixXd cov =
      s2 * Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(jac.transpose() * jac).pseudoInverse();
  out.sigma_theta = std::sqrt(std::max(cov(5, 5), 0.0));
  return out;
}

InterferenceResult fit_fringes(const ScreenRecord& screen, double kappa_guess, const FitOptions& options) {
  return fit_fringes(screen.positions, screen.intensity, kappa_guess, options);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& sigma) {
  const std::size_t n = x.size();
  if (y.size() != n || sigma.size() != n) throw ConfigError("regression inputs differ in length");
  if (n < 3) throw ConfigError("regression needs at least 3 points");
  const bool weighted =
      std::all_of(sigma.begin(), sigma.end(), [](double s) { return std::isfinite(s) && s > 0.0; });
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = weighted ? 1.0 / (sigma[k] * sigma[k]) : 1.0;
    s += w;
    sx += w * x[k];
    sy += w * y[k];
    sxx += w * x[k] * x[k];
    sxy += w * x[k] * y[k];
  }
  const double det = s * sxx - sx * sx;
  if (!(det > 0.0)) throw NumericalError("regression abscissae are degenerate");
  LinearFit fit;
  fit.weighted = weighted;
  fit.slope = (s * sxy - sx * sy) / det;
  fit.intercept = (sxx * sy - sx * sxy) / det;
  double scale = 1.0;
  if (!weighted) {
    double rss = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = y[k] - fit.slope * x[k] - fit.intercept;
      rss += d * d;
    }
    scale = rss / double(n - 2);
  }
  fit.slope_se = std::sqrt(scale * s / det);
  fit.intercept_se = std::sqrt(scale * sxx / det);
  return fit;
}

std::vector<double> unwrap_phases(const std::vector<double>& wrapped) {
  std::vector<double> out(wrapped.size());
  for (std::size_t k = 0; k < wrapped.size(); ++k)
    out[k] = k == 0 ? wrapped[0] : out[k - 1] + wrap_pi(wrapped[k] - wrapped[k - 1]);
  return out;
}

void check_sweep_plan(const std::vector<double>& fluxes, double coupling) {
  if (fluxes.size() < 3) {
    std::ostringstream msg;
    msg << "sweep needs at least 3 fluxes (got " << fluxes.size() << ")";
    throw ConfigError(msg.str());
  }
  const double max_step = std::numbers::pi / std::abs(coupling);
  for (std::size_t k = 1; k < fluxes.size(); ++k) {
    if (!(fluxes[k] > fluxes[k - 1])) throw ConfigError("sweep fluxes must be strictly increasing");
    if (!(fluxes[k] - fluxes[k - 1] < max_step)) {
      std::ostringstream msg;
      msg << "sweep flux spacing " << fluxes[k] - fluxes[k - 1] << " must be < pi/e = " << max_step;
      throw ConfigError(msg.str());
    }
  }
}

int effective_screen_column(const SimulationConfig& config) {
  if (config.screen_column >= 0) return config.screen_column;
  const Grid& g = config.grid();
  return std::max(g.nx - config.geometry.sponge_width - 8, 0);
}

namespace {

struct SlitCenters {
  double barrier_x;
  double upper_y;
  double lower_y;
};

SlitCenters slit_centers(const SimulationConfig& config) {
  const GeometryMask& geo = config.geometry;
  if (geo.barrier_column < 0 || geo.slits.size() != 2)
    throw GeometryError("two-slit geometry required (barrier with exactly two slits)");
  const Grid& g = geo.grid;
  auto center_y = [&](const Slit& s) { return g.origin.y() + g.h * 0.5 * double(s.lo + s.hi - 1); };
  double a = center_y(geo.slits[0]), b = center_y(geo.slits[1]);
  if (a < b) std::swap(a, b);
  const double bx = g.origin.x() + g.h * (geo.barrier_column + 0.5 * (geo.barrier_thickness - 1));
  return {bx, a, b};
}

}  // namespace

double expected_fringe_wavenumber(const SimulationConfig& config) {
  const SlitCenters sc = slit_centers(config);
  const Grid& g = config.grid();
  const double screen_x = g.origin.x() + g.h * effective_screen_column(config);
  const double distance = screen_x - sc.barrier_x;
  if (!(distance > 0)) throw GeometryError("screen must lie beyond the barrier");
  return config.packet.k0.norm() * (sc.upper_y - sc.lower_y) / distance;
}

std::pair<PathSpec, PathSpec> slit_paths(const SimulationConfig& config) {
  const SlitCenters sc = slit_centers(config);
  const Grid& g = config.grid();
  const Vec2 source = config.packet.center;
  const Vec2 screen(g.origin.x() + g.h * effective_screen_column(config), 0.0);
  PathSpec upper{{source, Vec2(sc.barrier_x, sc.upper_y), screen}, false};
  PathSpec lower{{source, Vec2(sc.barrier_x, sc.lower_y), screen}, false};
  if (config.geometry.exclusion.radius > 0) {
    check_path_outside(upper, config.geometry.exclusion);
    check_path_outside(lower, config.geometry.exclusion);
  }
  return {upper, lower};
}

namespace {

SweepResult finish(std::vector<SweepPoint> points) {
  std::vector<double> wrapped, x, sigma;
  for (const auto& pt : points) {
    wrapped.push_back(pt.theta_wrapped);
    x.push_back(pt.flux);
    sigma.push_back(pt.sigma_theta);
  }
  const std::vector<double> unwrapped = unwrap_phases(wrapped);
  for (std::size_t k = 0; k < points.size(); ++k) points[k].theta = unwrapped[k];
  SweepResult out;
  out.regression = fit_line(x, unwrapped, sigma);
  out.points = std::move(points);
  return out;
}

}  // namespace

SweepResult flux_sweep(const SimulationConfig& base, const std::vector<double>& fluxes,
                       const SweepOptions& options) {
  check_sweep_plan(fluxes, base.coupling);
  SimulationConfig member = base;
  member.screen_column = effective_screen_column(base);
  const double kappa = options.kappa_guess > 0 ? options.kappa_guess : expected_fringe_wavenumber(member);

  std::vector<SweepPoint> points;
  for (double flux : fluxes) {
    member.potential = base.potential.with_flux(flux);
    try {
      const RunResult result = run(member);
      const InterferenceResult fit = fit_fringes(result.screen, kappa, options.fit);
      SweepPoint pt{flux, fit.theta, fit.theta, fit.sigma_theta, fit.residual};
      points.push_back(pt);
      if (options.on_member) options.on_member(pt, result, fit);
    } catch (const Error& err) {
      std::ostringstream msg;
      msg << "sweep member flux=" << flux << " failed after " << points.size()
          << " completed members: " << err.what();
      throw NumericalError(msg.str());
    }
  }
  return finish(std::move(points));
}

SweepResult eikonal_sweep(const SimulationConfig& base, const std::vector<double>& fluxes) {
  check_sweep_plan(fluxes, base.coupling);
  const auto [upper, lower] = slit_paths(base);
  std::vector<SweepPoint> points;
  for (double flux : fluxes) {
    const VectorPotentialSpec spec = base.potential.with_flux(flux);
    const double shift = fringe_shift(spec, upper, lower, base.coupling);
    points.push_back({flux, shift, wrap_pi(shift), 0.0, 0.0});
  }
  return finish(std::move(points));
}

}  // namespace abfield

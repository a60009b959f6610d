#include "abfield/io.hpp"

#include "abfield/error.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef ABFIELD_VERSION
#define ABFIELD_VERSION "unknown"
#endif

namespace abfield {

namespace {

std::ofstream open_for_write(const std::string& filename, bool binary = false) {
  const std::filesystem::path path(filename);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(filename, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ConfigError("cannot write '" + filename + "'");
  return out;
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != header_.size()) throw ConfigError("csv row width does not match header");
  rows_.push_back(row);
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t k = 0; k < header_.size(); ++k) out += (k ? "," : "") + header_[k];
  out += "\n";
  for (const auto& row : rows_) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + format_double(row[k]);
    out += "\n";
  }
  return out;
}

void CsvTable::write(const std::string& filename) const {
  auto out = open_for_write(filename);
  out << str();
}

CsvTable screen_table(const ScreenRecord& screen, const InterferenceResult* fit) {
  CsvTable table(fit ? std::vector<std::string>{"y", "intensity", "model"}
                     : std::vector<std::string>{"y", "intensity"});
  for (std::size_t k = 0; k < screen.positions.size(); ++k) {
    const double y = screen.positions[k];
    if (fit) {
      table.add_row({y, screen.intensity[k], fit->params.model(y)});
    } else {
      table.add_row({y, screen.intensity[k]});
    }
  }
  return table;
}

CsvTable fit_table(const InterferenceResult& fit) {
  CsvTable table({"background", "amplitude", "envelope_slope", "envelope_rate", "reference", "kappa", "theta",
                  "theta_unwrapped", "sigma_theta", "residual", "iterations"});
  const FringeParams& p = fit.params;
  table.add_row({p.background, p.amplitude, p.envelope_slope, p.envelope_rate, p.reference, p.kappa, fit.theta,
                 fit.theta_unwrapped, fit.sigma_theta, fit.residual, double(fit.iterations)});
  return table;
}

CsvTable sweep_table(const SweepResult& sweep) {
  CsvTable table({"flux", "theta", "theta_wrapped", "sigma_theta", "residual"});
  for (const auto& pt : sweep.points)
    table.add_row({pt.flux, pt.theta, pt.theta_wrapped, pt.sigma_theta, pt.residual});
  return table;
}

CsvTable diagnostics_table(const std::vector<Diagnostic>& diagnostics) {
  CsvTable table({"step", "t", "charge", "norm", "energy", "max_amplitude"});
  for (const auto& d : diagnostics)
    table.add_row({double(d.step), d.t, d.charge, d.norm, d.energy, d.max_amplitude});
  return table;
}

CsvTable field_table(const Grid& grid, const Eigen::ArrayXXd& values) {
  CsvTable table({"i", "j", "x", "y", "value"});
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 x = grid.position(i, j);
      table.add_row({double(i), double(j), x.x(), x.y(), values(i, j)});
    }
  return table;
}

std::string sweep_summary(const SweepResult& sweep, double coupling) {
  std::ostringstream out;
  out << std::setw(14) << "flux" << std::setw(14) << "theta" << std::setw(14) << "e*flux" << std::setw(14)
      << "sigma" << std::setw(12) << "residual" << "\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& pt : sweep.points)
    out << std::setw(14) << pt.flux << std::setw(14) << pt.theta << std::setw(14) << coupling * pt.flux
        << std::setw(14) << pt.sigma_theta << std::setw(12) << pt.residual << "\n";
  const LinearFit& r = sweep.regression;
  out << "slope     = " << r.slope << " +/- " << r.slope_se << "  (expected " << coupling << ")\n";
  out << "intercept = " << r.intercept << " +/- " << r.intercept_se << "\n";
  out << "weights   = " << (r.weighted ? "1/sigma^2" : "uniform") << "\n";
  return out.str();
}

void write_pgm(const std::string& filename, const Eigen::ArrayXXd& values) {
  const Eigen::Index nx = values.rows(), ny = values.cols();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (std::isfinite(values(k))) {
      lo = std::min(lo, values(k));
      hi = std::max(hi, values(k));
    }
  const double span = hi > lo ? hi - lo : 1.0;
  auto out = open_for_write(filename, true);
  out << "P5\n" << nx << " " << ny << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(nx));
  for (Eigen::Index j = ny - 1; j >= 0; --j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double v = values(i, j);
      row[std::size_t(i)] = std::isfinite(v) ? static_cast<unsigned char>(std::lround(255.0 * (v - lo) / span)) : 0;
    }
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
}

void write_fringe_plot(const std::string& filename, const InterferenceResult& fit, int width, int height) {
  const std::size_t n = fit.positions.size();
  if (n < 2 || width < 16 || height < 16) throw ConfigError("fringe plot needs at least 2 points and 16x16 pixels");
  const double y0 = fit.positions.front(), y1 = fit.positions.back();
  std::vector<double> model(static_cast<std::size_t>(width));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int c = 0; c < width; ++c) {
    model[std::size_t(c)] = fit.params.model(y0 + (y1 - y0) * c / (width - 1));
    lo = std::min(lo, model[std::size_t(c)]);
    hi = std::max(hi, model[std::size_t(c)]);
  }
  for (double v : fit.intensity) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double pad = 0.05 * (hi > lo ? hi - lo : 1.0);
  lo -= pad;
  hi += pad;
  auto row_of = [&](double v) {
    return std::clamp(int(std::lround((hi - v) / (hi - lo) * (height - 1))), 0, height - 1);
  };
  std::vector<unsigned char> img(std::size_t(width) * std::size_t(height), 255);
  auto put = [&](int c, int r, unsigned char shade) {
    unsigned char& px = img[std::size_t(r) * std::size_t(width) + std::size_t(c)];
    px = std::min(px, shade);
  };
  for (int c = 0; c < width; ++c) {
    const int r = row_of(model[std::size_t(c)]);
    const int prev = c > 0 ? row_of(model[std::size_t(c - 1)]) : r;
    for (int k = std::min(r, prev); k <= std::max(r, prev); ++k) put(c, k, 128);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const int c = int(std::lround((fit.positions[k] - y0) / (y1 - y0) * (width - 1)));
    const int r = row_of(fit.intensity[k]);
    for (int dc = -1; dc <= 1; ++dc)
      for (int dr = -1; dr <= 1; ++dr)
        if (c + dc >= 0 && c + dc < width && r + dr >= 0 && r + dr < height) put(c + dc, r + dr, 0);
  }
  auto out = open_for_write(filename, true);
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), std::streamsize(img.size()));
}

std::string content_hash(const std::string& text) {
  const std::string header = "blob " + std::to_string(text.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, text.data(), text.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalError("sha1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return hex.str();
}

std::string library_version() {
  std::ostringstream v;
  v << "abfield " << ABFIELD_VERSION << "; eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "."
    << EIGEN_MINOR_VERSION;
#ifdef __VERSION__
  v << "; compiler " << __VERSION__;
#endif
  return v.str();
}

void Manifest::write(const std::string& directory) const {
  std::filesystem::create_directories(directory);
  {
    auto cfg = open_for_write((std::filesystem::path(directory) / "config.ini").string());
    cfg << config_text;
  }
  auto out = open_for_write((std::filesystem::path(directory) / "manifest.txt").string());
  out << "subcommand = " << subcommand << "\n";
  out << "version = " << library_version() << "\n";
  out << "input_hash = " << input_hash << "\n";
  out << "threads = " << threads << "\n";
  out << "wall_seconds = " << format_double(wall_seconds) << "\n";
  out << "config_file = config.ini\n";
  for (const auto& [k, v] : extra) out << k << " = " << v << "\n";
  for (const auto& o : outputs) out << "output = " << o << "\n";
  out << "\n# config echo\n";
  std::istringstream lines(config_text);
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << "\n";
}

}  // namespace abfield

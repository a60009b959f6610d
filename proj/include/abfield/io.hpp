#pragma once

// Output artifacts: CSV tables, PGM heatmaps, run manifests.

#include "abfield/analysis.hpp"
#include "abfield/config.hpp"

#include <map>
#include <string>
#include <vector>

namespace abfield {

/// Comma-separated table with a header row; doubles as %.17g.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<double>& row);
  void write(const std::string& filename) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

CsvTable screen_table(const ScreenRecord& screen, const InterferenceResult* fit = nullptr);
CsvTable fit_table(const InterferenceResult& fit);
CsvTable sweep_table(const SweepResult& sweep);
CsvTable diagnostics_table(const std::vector<Diagnostic>& diagnostics);
/// One row per site: i, j, x, y, value.
CsvTable field_table(const Grid& grid, const Eigen::ArrayXXd& values);

/// Aligned plain-text summary of a sweep and its regression.
std::string sweep_summary(const SweepResult& sweep, double coupling);

/// 8-bit binary PGM of a 2D array, linearly scaled to [min, max]; NaN maps to
/// 0.  Rows are written top (max y) to bottom.
void write_pgm(const std::string& filename, const Eigen::ArrayXXd& values);

/// Screen intensity (black dots) and fitted model (gray curve) against
/// position, as a PGM raster.
void write_fringe_plot(const std::string& filename, const InterferenceResult& fit, int width = 640,
                       int height = 320);

/// Git-style blob hash (SHA-1 of "blob <len>\0" + text), hex.
std::string content_hash(const std::string& text);

struct Manifest {
  std::string subcommand;
  std::string config_text;     // serialized config
  std::string input_hash;
  double wall_seconds = 0.0;
  int threads = 0;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> extra;

  void write(const std::string& directory) const;
};

std::string library_version();

}  // namespace abfield

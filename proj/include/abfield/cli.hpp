#pragma once

// Command-line front end.

#include "abfield/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace abfield {

struct CliOptions {
  std::string out_dir;   // overrides the config when non-empty
  int threads = 0;       // 0: ABFIELD_THREADS, then the config
  bool emit_images = false;
  std::string config_text;  // raw text as read, hashed into the manifest
};

const std::vector<std::string>& subcommands();

/// Runs one pipeline and writes its artifacts.  Returns the exit status;
/// failures are reported on `err` as a single "error kind=... message=..."
/// record.
int dispatch(const std::string& subcommand, RunConfig config, const CliOptions& options, std::ostream& out,
             std::ostream& err);

/// Full argv handling (subcommand, --config, --out, --threads, --emit-images).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace abfield

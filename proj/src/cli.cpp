#include "abfield/cli.hpp"

#include "abfield/error.hpp"
#include "abfield/io.hpp"

#include <CLI11.hpp>

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace abfield {

namespace {

namespace fs = std::filesystem;

struct Context {
  RunConfig config;
  std::string dir;
  bool images = false;
  std::ostream& out;
  Manifest manifest;

  std::string path(const std::string& name) {
    manifest.outputs.push_back(name);
    return (fs::path(dir) / name).string();
  }
};

std::string quote(const std::string& s) {
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') q += '\\';
    q += ch == '\n' ? ' ' : ch;
  }
  return q + "\"";
}

void emit_field_images(Context& ctx, const ComplexArray& psi, const std::string& stem) {
  if (!ctx.images) return;
  write_pgm(ctx.path(stem + "_density.pgm"), psi.abs2());
  write_pgm(ctx.path(stem + "_phase.pgm"), psi.arg());
}

void pde_run(Context& ctx) {
  SimulationConfig sim = ctx.config.sim;
  sim.screen_column = effective_screen_column(sim);
  long snapshot = 0;
  const RunResult result = run(sim, [&](const EvolutionState& state) {
    if (state.step == 0) return;
    const std::string stem = "snapshot_" + std::to_string(snapshot++);
    emit_field_images(ctx, state.curr.values, stem);
    if (ctx.config.field_dumps) field_table(sim.grid(), state.curr.values.abs2()).write(ctx.path(stem + "_density.csv"));
  });
  diagnostics_table(result.state.diagnostics).write(ctx.path("diagnostics.csv"));
  emit_field_images(ctx, result.state.curr.values, "final");

  const ConfinementStats& c = result.confinement;
  const double inside = c.integrated_total > 0 ? c.integrated_in_solenoid / c.integrated_total : 0.0;
  ctx.manifest.extra["confinement_fraction_in_solenoid"] = format_double(inside);
  ctx.manifest.extra["max_b_outside"] = format_double(c.max_b_outside);
  ctx.manifest.extra["lattice_flux"] = format_double(c.lattice_flux);

  ctx.out << "steps " << result.state.step << ", final t = " << result.state.curr.t << "\n";
  ctx.out << "charge drift " << result.state.diagnostics.back().charge - result.state.diagnostics.front().charge
          << "\n";
  ctx.out << "|psi|^2 inside solenoid / total = " << inside << ", max |B| outside = " << c.max_b_outside << "\n";

  const bool two_slit = sim.geometry.barrier_column >= 0 && sim.geometry.slits.size() == 2;
  if (!two_slit) {
    screen_table(result.screen).write(ctx.path("screen.csv"));
    return;
  }
  const double kappa = ctx.config.kappa_guess > 0 ? ctx.config.kappa_guess : expected_fringe_wavenumber(sim);
  const InterferenceResult fit = fit_fringes(result.screen, kappa);
  screen_table(result.screen, &fit).write(ctx.path("screen.csv"));
  fit_table(fit).write(ctx.path("fit.csv"));
  if (ctx.images) write_fringe_plot(ctx.path("fringe_plot.pgm"), fit);
  ctx.out << "fringe shift theta = " << fit.theta << " +/- " << fit.sigma_theta << " (e*flux = "
          << sim.coupling * sim.potential.flux() << "), kappa = " << fit.params.kappa << ", residual "
          << fit.residual << "\n";
}

void dressed_run(Context& ctx) {
  const auto rows = dressed_cross_check(ctx.config.sim, ctx.config.dressed_interval,
                                        ctx.config.dressed_intervals, ctx.config.gauge);
  CsvTable table({"step", "relative_l2", "masked_fraction"});
  double worst = 0;
  for (const auto& r : rows) {
    table.add_row({double(r.step), r.relative_l2, r.masked_fraction});
    worst = std::max(worst, r.relative_l2);
  }
  table.write(ctx.path("dressed.csv"));
  ctx.manifest.extra["max_relative_l2"] = format_double(worst);
  ctx.out << "complex vs dressed evolution over " << rows.size() << " intervals: max relative L2 " << worst
          << "\n";
}

PathSpec default_loop(const SimulationConfig& sim) {
  const VectorPotentialSpec& root = sim.potential.root();
  const Vec2 c = root.kind() == VectorPotentialSpec::Kind::IdealSolenoid ? root.center() : Vec2::Zero();
  const double r = std::max({2.0 * root.radius(), 2.0 * sim.geometry.exclusion.radius, 1.0});
  return PathSpec::polygon_circle(c, r, 64);
}

void eikonal(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const SimulationConfig& sim = cfg.sim;
  const double e = sim.coupling;
  const PathSpec loop = cfg.loop.vertices.empty() ? default_loop(sim) : cfg.loop;

  std::pair<PathSpec, PathSpec> slits;
  bool have_slits = !cfg.upper_path.vertices.empty();
  if (have_slits) {
    slits = {cfg.upper_path, cfg.lower_path};
  } else if (sim.geometry.barrier_column >= 0 && sim.geometry.slits.size() == 2) {
    slits = slit_paths(sim);
    have_slits = true;
  }

  std::vector<double> fluxes = cfg.fluxes;
  if (fluxes.empty()) fluxes.push_back(sim.potential.flux());
  const bool solenoid = sim.potential.root().kind() == VectorPotentialSpec::Kind::IdealSolenoid;
  CsvTable table({"flux", "loop_phase", "loop_phase_mod_2pi", "winding", "expected_loop_phase", "slit_shift"});
  ctx.out << std::setw(14) << "flux" << std::setw(16) << "loop phase" << std::setw(16) << "-e*w*flux"
          << std::setw(16) << "slit shift" << "\n";
  for (double flux : fluxes) {
    const VectorPotentialSpec spec = solenoid ? sim.potential.with_flux(flux) : sim.potential;
    const EikonalResult lp = path_phase(spec, loop, e);
    const int w = solenoid ? winding_number(loop, spec.root().center()) : 0;
    const double shift = have_slits ? fringe_shift(spec, slits.first, slits.second, e)
                                    : std::numeric_limits<double>::quiet_NaN();
    table.add_row({flux, lp.phase, lp.phase_mod_2pi, double(w), -e * w * spec.flux(), shift});
    ctx.out << std::setw(14) << flux << std::setw(16) << lp.phase << std::setw(16) << -e * w * spec.flux()
            << std::setw(16) << shift << "\n";
  }
  table.write(ctx.path("eikonal.csv"));

  RefractiveModel model = cfg.refractive;
  if (model.p0 == 0.0) model.p0 = sim.packet.k0.norm();
  if (model.p0 > 0.0) {
    const RefractiveShift rs = refractive_shift(model, e);
    const double via_paths = refractive_shift_from_paths(model, e);
    CsvTable rt({"p0", "a1", "a2", "thickness", "delta_n", "delta_theta", "delta_theta_paths"});
    rt.add_row({model.p0, model.a1, model.a2, model.thickness, rs.delta_n, rs.delta_theta, via_paths});
    rt.write(ctx.path("refractive.csv"));
    ctx.out << "refractive model: delta_n = " << rs.delta_n << ", delta_theta = " << rs.delta_theta
            << " (paths: " << via_paths << ")\n";
    ctx.out << "delta_n,delta_theta,loop_phase\n"
            << format_double(rs.delta_n) << "," << format_double(rs.delta_theta) << ","
            << format_double(path_phase(sim.potential, loop, e).phase) << "\n";
  }

  if (have_slits && cfg.fluxes.size() >= 3 && solenoid) {
    const SweepResult sweep = eikonal_sweep(sim, cfg.fluxes);
    sweep_table(sweep).write(ctx.path("eikonal_sweep.csv"));
    ctx.out << sweep_summary(sweep, e);
  }
}

void gauge_check(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const EvolutionState state = init_wavepacket(cfg.sim);
  const RealDressedPair pair = to_schrodinger_gauge(state.prev, state.curr, cfg.sim.potential, cfg.gauge);

  Eigen::Index bi = 0, bj = 0;
  const RealArray masked_phi = pair.defined.select(pair.phi, RealArray::Zero(pair.phi.rows(), pair.phi.cols()));
  masked_phi.maxCoeff(&bi, &bj);
  const int ai = int(bi), aj = int(bj);
  const ComplexField2D back =
      from_schrodinger_gauge(pair, cfg.sim.potential, {ai, aj, std::arg(state.curr.values(ai, aj))}, cfg.gauge);
  const double round_trip = relative_l2_up_to_phase(back.values, state.curr.values);
  const double holonomy = max_holonomy_mismatch(pair, cfg.sim.potential, cfg.gauge);

  const RealArray residual = eikonal_residual(pair, cfg.sim.coupling, cfg.sim.mass);
  double weighted = 0, weight = 0;
  for (Eigen::Index k = 0; k < residual.size(); ++k)
    if (pair.defined(k)) {
      const double w = pair.phi(k) * pair.phi(k);
      weighted += w * std::abs(residual(k));
      weight += w;
    }
  const double mean_residual = weight > 0 ? weighted / weight : 0.0;

  CsvTable table({"round_trip_relative_l2", "max_holonomy_mismatch", "masked_fraction",
                  "density_weighted_eikonal_residual"});
  table.add_row({round_trip, holonomy, pair.masked_fraction(), mean_residual});
  table.write(ctx.path("gauge.csv"));
  const RealArray abar_norm = (pair.abar_x.square() + pair.abar_y.square()).sqrt();
  if (ctx.images) {
    write_pgm(ctx.path("phi.pgm"), pair.phi);
    write_pgm(ctx.path("abar_norm.pgm"), abar_norm);
    write_pgm(ctx.path("abar_x.pgm"), pair.abar_x);
    write_pgm(ctx.path("abar_y.pgm"), pair.abar_y);
    write_pgm(ctx.path("eikonal_residual.pgm"), residual);
  }
  if (cfg.field_dumps) {
    field_table(pair.grid, pair.phi).write(ctx.path("phi.csv"));
    field_table(pair.grid, abar_norm).write(ctx.path("abar_norm.csv"));
  }
  ctx.out << "round trip relative L2 " << round_trip << ", holonomy mismatch " << holonomy
          << ", masked fraction " << pair.masked_fraction() << ", |psi|^2-weighted eikonal residual "
          << mean_residual << "\n";
}

void sweep(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  check_sweep_plan(cfg.fluxes, cfg.sim.coupling);
  SweepOptions opts;
  opts.kappa_guess = cfg.kappa_guess;
  std::vector<SweepPoint> done;
  const std::string partial = ctx.path("sweep_partial.csv");
  opts.on_member = [&](const SweepPoint& pt, const RunResult& result, const InterferenceResult& fit) {
    done.push_back(pt);
    SweepResult part;
    part.points = done;
    sweep_table(part).write(partial);
    const std::string stem = "member_" + std::to_string(done.size() - 1);
    screen_table(result.screen, &fit).write(ctx.path(stem + "_screen.csv"));
    if (ctx.images) {
      write_pgm(ctx.path(stem + "_final_density.pgm"), result.state.curr.values.abs2());
      write_fringe_plot(ctx.path(stem + "_fringe_plot.pgm"), fit);
    }
    const ConfinementStats& c = result.confinement;
    ctx.manifest.extra[stem + "_confinement_fraction"] =
        format_double(c.integrated_total > 0 ? c.integrated_in_solenoid / c.integrated_total : 0.0);
    ctx.manifest.extra[stem + "_max_b_outside"] = format_double(c.max_b_outside);
    ctx.out << "flux " << pt.flux << ": theta " << pt.theta_wrapped << " +/- " << pt.sigma_theta << "\n";
    ctx.out.flush();
  };
  const SweepResult result = flux_sweep(cfg.sim, cfg.fluxes, opts);
  sweep_table(result).write(ctx.path("sweep.csv"));
  const std::string summary = sweep_summary(result, cfg.sim.coupling);
  {
    std::ofstream f(ctx.path("sweep_summary.txt"));
    f << summary;
  }
  ctx.manifest.extra["slope"] = format_double(result.regression.slope);
  ctx.manifest.extra["intercept"] = format_double(result.regression.intercept);
  ctx.out << summary;
}

void oracle_check(Context& ctx, bool& all_ok) {
  const SimulationConfig& sim = ctx.config.sim;
  const VectorPotentialSpec& base = sim.potential;
  const bool solenoid = base.root().kind() == VectorPotentialSpec::Kind::IdealSolenoid;
  const Vec2 c = solenoid ? base.root().center() : Vec2::Zero();
  const double r0 = solenoid ? base.root().radius() : 1.0;

  struct Case {
    std::string name;
    PathSpec loop;
  };
  std::vector<Case> cases = {
      {"circle r=2R", PathSpec::polygon_circle(c, 2 * r0, 48)},
      {"circle r=5R", PathSpec::polygon_circle(c, 5 * r0, 96)},
      {"circle r=3R cw", PathSpec::polygon_circle(c, 3 * r0, 48, -1.0)},
      {"circle r=3R x2", PathSpec::polygon_circle(c, 3 * r0, 96, 2.0)},
      {"square", PathSpec{{c + Vec2(-4, -4) * r0, c + Vec2(4, -4) * r0, c + Vec2(4, 4) * r0, c + Vec2(-4, 4) * r0},
                          true}},
      {"off-center triangle",
       PathSpec{{c + Vec2(-1.5, -2) * r0, c + Vec2(6, 0.5) * r0, c + Vec2(-2, 3) * r0}, true}},
      {"not enclosing", PathSpec::polygon_circle(c + Vec2(10, 0) * r0, 2 * r0, 48)},
  };
  std::vector<double> fluxes{base.flux()};
  if (solenoid && base.flux() != 1.0) fluxes.push_back(1.0);
  if (solenoid) fluxes.push_back(2.0 * std::numbers::pi);

  constexpr double kTolerance = 1e-6;
  CsvTable table({"case", "flux", "winding", "line_integral", "enclosed_flux", "abs_difference", "pass"});
  ctx.out << std::left << std::setw(22) << "loop" << std::right << std::setw(12) << "flux" << std::setw(9)
          << "winding" << std::setw(22) << "line integral" << std::setw(22) << "enclosed flux" << std::setw(12)
          << "|diff|" << "  ok\n";
  for (double flux : fluxes) {
    const VectorPotentialSpec spec = solenoid ? base.with_flux(flux) : base;
    for (std::size_t k = 0; k < cases.size(); ++k) {
      const double li = line_integral(spec, cases[k].loop);
      const double ef = enclosed_flux(spec, cases[k].loop);
      const int w = solenoid ? winding_number(cases[k].loop, c) : 0;
      const double diff = std::abs(li - ef);
      const bool ok = diff < kTolerance;
      all_ok = all_ok && ok;
      table.add_row({double(k), flux, double(w), li, ef, diff, ok ? 1.0 : 0.0});
      ctx.out << std::left << std::setw(22) << cases[k].name << std::right << std::setw(12) << flux
              << std::setw(9) << w << std::setw(22) << std::setprecision(15) << li << std::setw(22) << ef
              << std::setw(12) << std::setprecision(3) << diff << "  " << (ok ? "yes" : "NO") << "\n"
              << std::setprecision(6);
    }
  }
  table.write(ctx.path("oracle.csv"));
}

int exit_code(const Error& e) {
  if (e.kind() == "config") return 2;
  if (e.kind() == "geometry") return 3;
  if (e.kind() == "numerical") return 4;
  return 1;
}

void error_record(std::ostream& err, const std::string& subcommand, const std::string& kind,
                  const std::string& message) {
  err << "error kind=" << kind << " subcommand=" << subcommand << " message=" << quote(message) << "\n";
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"pde-run", "dressed-run", "eikonal",
                                                 "gauge-check", "sweep", "oracle-check"};
  return names;
}

int dispatch(const std::string& subcommand, RunConfig config, const CliOptions& options, std::ostream& out,
             std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
      throw ConfigError("unknown subcommand '" + subcommand + "'");
    if (!options.out_dir.empty()) config.out_dir = options.out_dir;
    if (options.threads > 0) {
      config.sim.threads = options.threads;
    } else if (const char* env = std::getenv("ABFIELD_THREADS")) {
      try {
        config.sim.threads = std::stoi(env);
      } catch (const std::exception&) {
        throw ConfigError(std::string("ABFIELD_THREADS is not an integer: '") + env + "'");
      }
      if (config.sim.threads < 0) throw ConfigError("ABFIELD_THREADS must be >= 0");
    }
    config.emit_images = config.emit_images || options.emit_images;
    validate_run_config(config);
    if (subcommand == "sweep") check_sweep_plan(config.fluxes, config.sim.coupling);

    Context ctx{config, config.out_dir, config.emit_images, out, {}};
    ctx.manifest.subcommand = subcommand;
    ctx.manifest.config_text = serialize_config(config);
    ctx.manifest.input_hash = content_hash(options.config_text.empty() ? ctx.manifest.config_text
                                                                       : options.config_text);
    ctx.manifest.threads = config.sim.threads > 0 ? config.sim.threads : omp_get_max_threads();
    ctx.manifest.extra["config_hash"] = content_hash(ctx.manifest.config_text);
    fs::create_directories(ctx.dir);

    bool ok = true;
    try {
      if (subcommand == "pde-run") pde_run(ctx);
      else if (subcommand == "dressed-run") dressed_run(ctx);
      else if (subcommand == "eikonal") eikonal(ctx);
      else if (subcommand == "gauge-check") gauge_check(ctx);
      else if (subcommand == "sweep") sweep(ctx);
      else oracle_check(ctx, ok);
    } catch (const Error& e) {
      ctx.manifest.extra["error"] = quote(std::string(e.kind()) + ": " + e.what());
      ctx.manifest.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ctx.manifest.write(ctx.dir);
      throw;
    }
    ctx.manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ctx.manifest.write(ctx.dir);
    if (!ok) {
      error_record(err, subcommand, "numerical", "oracle mismatch beyond tolerance");
      return 4;
    }
    return 0;
  } catch (const Error& e) {
    error_record(err, subcommand, e.kind(), e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    error_record(err, subcommand, "internal", e.what());
    return 1;
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aharonov-Bohm fringe-shift simulator (gauge-link Klein-Gordon lattice)"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 0;
  bool images = false;
  app.add_option("--config", config_path, "run config file (defaults when omitted)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "OpenMP threads (fallback: ABFIELD_THREADS)")->check(CLI::NonNegativeNumber);
  app.add_flag("--emit-images", images, "write PGM heatmaps");
  const std::map<std::string, std::string> descriptions = {
      {"pde-run", "one complex-field run: screen record, fringe fit, diagnostics"},
      {"dressed-run", "complex vs dressed real-field evolution cross-check"},
      {"eikonal", "analytic loop phases, slit-path fringe shifts, refractive shift"},
      {"gauge-check", "Schrodinger-gauge transform of the initial packet and round trip"},
      {"sweep", "PDE flux sweep with fringe-shift regression"},
      {"oracle-check", "loop phases against closed-form fluxes"},
  };
  for (const auto& name : subcommands()) app.add_subcommand(name, descriptions.at(name))->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    error_record(err, "", "usage", e.what());
    return 64;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  CliOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  options.emit_images = images;
  RunConfig config;
  try {
    if (config_path.empty()) {
      config = default_run_config();
    } else {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
      std::ostringstream text;
      text << in.rdbuf();
      options.config_text = text.str();
      config = parse_config(options.config_text);
    }
  } catch (const Error& e) {
    error_record(err, subcommand, e.kind(), e.what());
    return exit_code(e);
  }
  return dispatch(subcommand, config, options, out, err);
}

}  // namespace abfield

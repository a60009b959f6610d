#include "doctest.h"
#include "test_support.hpp"

#include "abfield/analysis.hpp"
#include "abfield/cli.hpp"
#include "abfield/config.hpp"
#include "abfield/error.hpp"
#include "abfield/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace abfield;
using abfield::testing::kPi;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("abfield_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

RunConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  RunConfig c = default_run_config();
  SimulationConfig& s = c.sim;
  const int nx = 40 + int(80 * u(rng)), ny = 30 + int(60 * u(rng));
  const double h = 0.1 + 0.4 * u(rng);
  s.geometry.grid = Grid::centered(nx, ny, h, coin(rng) == 1);
  s.geometry.grid.origin += Vec2(u(rng), u(rng) - 0.5) * h;
  s.geometry.sponge_width = int(8 * u(rng));
  s.geometry.sponge_strength = 3 * u(rng);
  s.geometry.barrier_column = nx - 8;
  s.geometry.barrier_thickness = 1 + int(3 * u(rng));
  s.geometry.slits = {Slit{2, 2 + ny / 4}, Slit{ny / 2, ny / 2 + 3}};
  const Vec2 axis = s.geometry.grid.position(nx - 4, ny / 2) + Vec2(0.1 * h * u(rng), 0.0);
  const double R = 0.2 * h + h * u(rng);
  s.geometry.exclusion = Disk{axis, R + h + 0.5 * h * u(rng)};
  auto pot = VectorPotentialSpec::ideal_solenoid(axis, R, 10 * (u(rng) - 0.5));
  if (coin(rng)) pot = VectorPotentialSpec::gauge_shifted(pot, GaugeFunction::sinusoid(u(rng), Vec2(u(rng), -u(rng)), u(rng)));
  if (coin(rng)) pot = VectorPotentialSpec::gauge_shifted(pot, GaugeFunction::gaussian(u(rng), Vec2(u(rng), u(rng)), 0.5 + u(rng)));
  if (coin(rng)) pot = VectorPotentialSpec::gauge_shifted(pot, GaugeFunction::linear(Vec2(u(rng), u(rng))));
  s.potential = pot;
  s.dt = h / std::sqrt(2.0) * (0.1 + 0.6 * u(rng));
  s.mass = 2 * u(rng);
  s.coupling = 0.5 + u(rng);
  s.steps = int(10000 * u(rng));
  s.output_cadence = 1 + int(1000 * u(rng));
  s.screen_column = coin(rng) ? -1 : nx - 2;
  s.dress_incident = coin(rng) == 1;
  s.threads = int(4 * u(rng));
  s.packet.sigma = 2 * h + h * u(rng);
  s.packet.center = s.geometry.grid.position(nx / 4, ny / 2) + Vec2(u(rng), u(rng)) * h;
  s.packet.k0 = Vec2(u(rng), u(rng) - 0.5) * (1.5 / h);
  c.gauge.node_threshold = 1e-12 * (1 + 100 * u(rng));
  c.fluxes.clear();
  if (coin(rng)) {
    double f = u(rng) - 0.5;
    for (int k = 0; k < 3 + int(6 * u(rng)); ++k) c.fluxes.push_back(f += 0.1 + 2.5 * u(rng) / s.coupling);
  }
  c.kappa_guess = coin(rng) ? 0.0 : u(rng);
  c.loop = coin(rng) ? PathSpec{} : PathSpec::polygon_circle(axis, 3 * R + u(rng), 5 + int(10 * u(rng)));
  if (coin(rng)) {
    c.upper_path = PathSpec{{Vec2(u(rng), 1.0), Vec2(2, 3 + u(rng)), Vec2(5, 0)}, false};
    c.lower_path = PathSpec{{Vec2(u(rng), 1.0), Vec2(2, -3 - u(rng)), Vec2(5, 0)}, false};
  }
  c.refractive = RefractiveModel{10 * u(rng), u(rng), -u(rng), 5 * u(rng)};
  c.dressed_interval = 1 + int(50 * u(rng));
  c.dressed_intervals = 1 + int(20 * u(rng));
  c.out_dir = "runs/r" + std::to_string(rng() % 1000);
  c.seed = rng();
  c.emit_images = coin(rng) == 1;
  c.field_dumps = coin(rng) == 1;
  c.gauge.coupling = s.coupling;
  return c;
}

}  // namespace

TEST_CASE("empty config gives the documented defaults") {
  const RunConfig d = default_run_config();
  const RunConfig p = parse_config("# nothing but a comment\n\n");
  CHECK(serialize_config(p) == serialize_config(d));
  CHECK(p.sim.geometry.grid.nx == 768);
  CHECK(p.sim.geometry.grid.ny == 512);
  CHECK(p.sim.geometry.grid.h == 0.25);
  CHECK(p.sim.dt == 0.05);
  CHECK(p.sim.steps == 6000);
  CHECK(p.sim.coupling == 1.0);
  CHECK(p.fluxes.size() == 9);
  CHECK(p.fluxes.back() == doctest::Approx(2 * kPi));
  CHECK(p.sim.potential.kind() == VectorPotentialSpec::Kind::IdealSolenoid);
}

TEST_CASE("config errors are line-numbered") {
  CHECK_THROWS_WITH_AS(parse_config("[grid]\nnx = 100\nbogus = 3\n"), doctest::Contains("line 3"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[grid]\nnx = 100\nbogus = 3\n"), doctest::Contains("bogus"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[gird]\nnx = 1\n"), doctest::Contains("line 1"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[grid]\n\nnx = abc\n"), doctest::Contains("line 3"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("nx = 5\n"), doctest::Contains("before any"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[run]\nemit_images = yes\n"), doctest::Contains("true or false"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[time]\ndt = 0.1\ndt = 0.2\n"), doctest::Contains("duplicate"), ConfigError);
  try {
    parse_config("# header\n[time]\ndt = 0.3\n");
    FAIL("CFL violation accepted");
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    CHECK(w.find("line 3") != std::string::npos);
    CHECK(w.find("dt") != std::string::npos);
    CHECK(w.find("h =") != std::string::npos);
    CHECK(w.find("0.17677") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(parse_config("[analysis]\nfluxes = 0, 1\n"), doctest::Contains("at least 3 fluxes"),
                       ConfigError);
}

TEST_CASE("values parse") {
  const RunConfig c = parse_config(
      "[field]\ncoupling = 0.5   # trailing comment\n"
      "[potential]\nflux = 1.25\ngauge = linear(1, 2); sinusoid(0.5, 1, 0, 0.25)\n"
      "[eikonal]\nloop = 80 -5; 80 5; 70 5; 70 -5; closed\n"
      "[analysis]\nfluxes = 0, 1, 2, 3\n");
  CHECK(c.sim.coupling == 0.5);
  CHECK(c.gauge.coupling == 0.5);
  CHECK(c.sim.potential.flux() == 1.25);
  CHECK(c.sim.potential.gauge_stack().size() == 2);
  CHECK(c.sim.potential.gauge_stack()[0].kind == GaugeFunction::Kind::Linear);
  CHECK(c.loop.closed);
  CHECK(c.loop.vertices.size() == 4);
  CHECK(c.fluxes == std::vector<double>{0, 1, 2, 3});
}

TEST_CASE("path values can come from files") {
  const auto dir = scratch("pathfile");
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "loop.txt");
    f << "#closed\n85 -6\n85 6\n70 6\n70 -6\n";
  }
  const RunConfig c = parse_config("[eikonal]\nloop = @" + (dir / "loop.txt").string() + "\n");
  CHECK(c.loop.closed);
  CHECK(c.loop.vertices.size() == 4);
  CHECK_THROWS_AS(parse_config("[eikonal]\nloop = @/nonexistent/file\n"), ConfigError);
}

TEST_CASE("serialization round trip over random configs") {
  std::mt19937_64 rng(42);
  int checked = 0;
  for (int k = 0; k < 1000; ++k) {
    const RunConfig c = random_config(rng);
    try {
      validate_run_config(c);
    } catch (const Error&) {
      continue;
    }
    const std::string once = serialize_config(c);
    const RunConfig back = parse_config(once);
    const std::string twice = serialize_config(back);
    CHECK(once == twice);
    ++checked;
    if (once != twice) break;
  }
  CHECK(checked >= 900);
}

TEST_CASE("csv and hashes") {
  CsvTable t({"a", "b"});
  t.add_row({0.1, 1.0 / 3.0});
  CHECK(t.str() == "a,b\n0.10000000000000001,0.33333333333333331\n");
  CHECK_THROWS_AS(t.add_row({1.0}), ConfigError);
  // git hash-object of an empty blob and of "hello\n".
  CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("pgm heatmap") {
  const auto dir = scratch("pgm");
  Eigen::ArrayXXd a(3, 2);
  a << 0, 1, 2, 3, 4, std::numeric_limits<double>::quiet_NaN();
  write_pgm((dir / "a.pgm").string(), a);
  const std::string bytes = slurp(dir / "a.pgm");
  CHECK(bytes.substr(0, 11) == "P5\n3 2\n255\n");
  CHECK(bytes.size() == 11 + 6);

  std::vector<double> y, I;
  for (int k = 0; k < 200; ++k) {
    y.push_back(-10 + 0.1 * k);
    I.push_back(1 + std::cos(1.3 * y.back() + 0.4));
  }
  write_fringe_plot((dir / "plot.pgm").string(), fit_fringes(y, I, 1.2), 100, 50);
  const std::string plot = slurp(dir / "plot.pgm");
  CHECK(plot.substr(0, 14) == "P5\n100 50\n255\n");
  CHECK(plot.size() == 14 + 5000);
  CHECK(plot.find(char(0), 14) != std::string::npos);
}

TEST_CASE("field dump table") {
  const Grid g = Grid::centered(3, 2, 0.5);
  Eigen::ArrayXXd v(3, 2);
  v << 1, 2, 3, 4, 5, 6;
  const std::string csv = field_table(g, v).str();
  CHECK(csv.rfind("i,j,x,y,value\n0,0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("cli: oracle-check, sweep precondition, determinism") {
  const auto dir = scratch("cli");
  RunConfig c = default_run_config();
  CliOptions opt;
  opt.out_dir = (dir / "oracle").string();
  std::ostringstream out, err;
  CHECK(dispatch("oracle-check", c, opt, out, err) == 0);
  CHECK(out.str().find("NO") == std::string::npos);
  CHECK(std::filesystem::exists(dir / "oracle" / "oracle.csv"));
  CHECK(std::filesystem::exists(dir / "oracle" / "manifest.txt"));
  CHECK(std::filesystem::exists(dir / "oracle" / "config.ini"));
  // The echoed config reproduces the run.
  RunConfig echoed = c;
  echoed.out_dir = opt.out_dir;
  CHECK(serialize_config(load_config((dir / "oracle" / "config.ini").string())) == serialize_config(echoed));

  RunConfig two = c;
  two.fluxes = {0.0, 1.0};
  std::ostringstream out2, err2;
  opt.out_dir = (dir / "sweep").string();
  CHECK(dispatch("sweep", two, opt, out2, err2) != 0);
  CHECK(err2.str().find("kind=config") != std::string::npos);
  CHECK(err2.str().find("at least 3 fluxes") != std::string::npos);

  std::ostringstream out3, err3;
  CHECK(dispatch("no-such-thing", c, opt, out3, err3) != 0);
  CHECK(err3.str().find("error kind=config") == 0);

  // Small pde-run twice: byte-identical CSVs.
  RunConfig small = c;
  small.sim = abfield::testing::small_ab_config(0.8);
  small.fluxes.clear();
  for (const char* name : {"a", "b"}) {
    CliOptions o;
    o.out_dir = (dir / name).string();
    o.threads = 1;
    std::ostringstream so, se;
    const int status = dispatch("pde-run", small, o, so, se);
    INFO(se.str());
    REQUIRE(status == 0);
  }
  for (const char* file : {"screen.csv", "diagnostics.csv", "fit.csv"})
    CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));

  CliOptions o;
  o.out_dir = (dir / "eik").string();
  std::ostringstream eo, ee;
  CHECK(dispatch("eikonal", small, o, eo, ee) == 0);
  CHECK(std::filesystem::exists(dir / "eik" / "eikonal.csv"));
  std::ostringstream go, ge;
  o.out_dir = (dir / "gauge").string();
  CHECK(dispatch("gauge-check", small, o, go, ge) == 0);
}

TEST_CASE("cli argv handling") {
  const auto dir = scratch("argv");
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "bad.ini");
    f << "[grid]\nnx = 10\ntypo = 1\n";
  }
  const std::string cfg = (dir / "bad.ini").string(), outdir = (dir / "o").string();
  std::vector<std::string> args{"abfield", "oracle-check", "--config", cfg, "--out", outdir};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  CHECK(run_cli(int(argv.size()), argv.data(), out, err) == 2);
  CHECK(err.str().find("line 3") != std::string::npos);

  std::vector<std::string> bad_args{"abfield"};
  std::vector<char*> bad_argv{bad_args[0].data()};
  std::ostringstream o2, e2;
  CHECK(run_cli(1, bad_argv.data(), o2, e2) != 0);
}

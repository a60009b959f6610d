#include "abfield/config.hpp"

#include "abfield/error.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace abfield {

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

RunConfig default_run_config() {
  RunConfig c;
  SimulationConfig& s = c.sim;
  s.geometry.grid = Grid::centered(768, 512, 0.25);
  s.geometry.barrier_column = 300;
  s.geometry.barrier_thickness = 16;
  s.geometry.slits = {Slit{196, 204}, Slit{308, 316}};
  const Vec2 axis = s.geometry.grid.position(300, 0).x() * Vec2::UnitX() +
                    0.5 * (s.geometry.barrier_thickness - 1) * s.geometry.grid.h * Vec2::UnitX();
  s.geometry.exclusion = Disk{axis, 1.5};
  s.geometry.sponge_width = 32;
  s.geometry.sponge_strength = 1.5;
  s.dt = 0.05;
  s.coupling = 1.0;
  s.mass = 1.0;
  s.packet = WavepacketParams{Vec2(38.0, 0.0), 6.0, Vec2(2.0, 0.0)};
  s.potential = VectorPotentialSpec::ideal_solenoid(axis, 1.0, 0.0);
  s.steps = 6000;
  s.output_cadence = 500;
  s.screen_column = -1;
  s.dress_incident = true;
  s.threads = 0;
  for (int k = 0; k <= 8; ++k) c.fluxes.push_back(k * std::numbers::pi / 4.0);
  return c;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Thrown by value parsers; the caller adds the line number.
struct BadValue {
  std::string what;
};

double to_double(const std::string& s) {
  double v = 0;
  const std::string t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw BadValue{"expected a number, got '" + t + "'"};
  return v;
}

long long to_integer(const std::string& s) {
  long long v = 0;
  const std::string t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw BadValue{"expected an integer, got '" + t + "'"};
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw BadValue{"integer out of range: " + s};
  return int(v);
}

bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw BadValue{"expected true or false, got '" + s + "'"};
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(item));
  return out;
}

std::string from_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + format_double(v[k]);
  return out;
}

std::vector<Slit> to_slits(const std::string& s) {
  std::vector<Slit> out;
  if (trim(s).empty()) return out;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw BadValue{"slit must be lo:hi, got '" + item + "'"};
    out.push_back(Slit{to_int(parts[0]), to_int(parts[1])});
  }
  return out;
}

std::string from_slits(const std::vector<Slit>& slits) {
  std::string out;
  for (std::size_t k = 0; k < slits.size(); ++k)
    out += (k ? ", " : "") + std::to_string(slits[k].lo) + ":" + std::to_string(slits[k].hi);
  return out;
}

// "x y; x y; ...; closed" inline, or "@file".
PathSpec to_path(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return {};
  if (t[0] == '@') {
    try {
      return read_path_file(t.substr(1));
    } catch (const Error& e) {
      throw BadValue{e.what()};
    }
  }
  PathSpec path;
  for (const auto& item : split(t, ';')) {
    if (item == "closed") {
      path.closed = true;
      continue;
    }
    std::istringstream in(item);
    std::string xs, ys, extra;
    if (!(in >> xs >> ys) || (in >> extra)) throw BadValue{"path vertex must be 'x y', got '" + item + "'"};
    path.vertices.emplace_back(to_double(xs), to_double(ys));
  }
  if (path.vertices.size() < 2) throw BadValue{"path needs at least two vertices"};
  return path;
}

std::string from_path(const PathSpec& path) {
  std::string out;
  for (std::size_t k = 0; k < path.vertices.size(); ++k)
    out += (k ? "; " : "") + format_double(path.vertices[k].x()) + " " + format_double(path.vertices[k].y());
  if (path.closed) out += "; closed";
  return out;
}

// "linear(gx, gy); sinusoid(amp, kx, ky, phase); gaussian(amp, cx, cy, width)"
std::vector<GaugeFunction> to_gauges(const std::string& s) {
  std::vector<GaugeFunction> out;
  if (trim(s).empty()) return out;
  for (const auto& item : split(s, ';')) {
    const auto open = item.find('('), close = item.rfind(')');
    if (open == std::string::npos || close != item.size() - 1)
      throw BadValue{"gauge function must be name(args), got '" + item + "'"};
    const std::string name = trim(item.substr(0, open));
    std::vector<double> a = to_doubles(item.substr(open + 1, close - open - 1));
    if (name == "linear" && a.size() == 2) {
      out.push_back(GaugeFunction::linear(Vec2(a[0], a[1])));
    } else if (name == "sinusoid" && a.size() == 4) {
      out.push_back(GaugeFunction::sinusoid(a[0], Vec2(a[1], a[2]), a[3]));
    } else if (name == "gaussian" && a.size() == 4) {
      if (!(a[3] > 0)) throw BadValue{"gaussian gauge width must be > 0"};
      out.push_back(GaugeFunction::gaussian(a[0], Vec2(a[1], a[2]), a[3]));
    } else {
      throw BadValue{"unknown gauge function or wrong argument count: '" + item + "'"};
    }
  }
  return out;
}

std::string from_gauges(const std::vector<GaugeFunction>& gauges) {
  std::string out;
  for (std::size_t k = 0; k < gauges.size(); ++k) {
    const GaugeFunction& g = gauges[k];
    out += k ? "; " : "";
    switch (g.kind) {
      case GaugeFunction::Kind::Linear:
        out += "linear(" + from_doubles({g.wavevector.x(), g.wavevector.y()}) + ")";
        break;
      case GaugeFunction::Kind::Sinusoid:
        out += "sinusoid(" + from_doubles({g.amplitude, g.wavevector.x(), g.wavevector.y(), g.phase}) + ")";
        break;
      case GaugeFunction::Kind::Gaussian:
        out += "gaussian(" + from_doubles({g.amplitude, g.center.x(), g.center.y(), g.width}) + ")";
        break;
    }
  }
  return out;
}

// The potential is rebuilt from these parts after parsing.
struct PotentialParts {
  std::string kind = "solenoid";
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  double flux = 0.0;
  Vec2 uniform = Vec2::Zero();
  std::vector<GaugeFunction> gauges;
};

PotentialParts split_potential(const VectorPotentialSpec& spec) {
  PotentialParts p;
  const VectorPotentialSpec& r = spec.root();
  if (r.kind() == VectorPotentialSpec::Kind::IdealSolenoid) {
    p.kind = "solenoid";
    p.center = r.center();
    p.radius = r.radius();
    p.flux = r.flux();
  } else {
    p.kind = "uniform";
    p.uniform = r.uniform_value();
  }
  p.gauges = spec.gauge_stack();
  return p;
}

VectorPotentialSpec build_potential(const PotentialParts& p) {
  VectorPotentialSpec spec = p.kind == "solenoid" ? VectorPotentialSpec::ideal_solenoid(p.center, p.radius, p.flux)
                                                  : VectorPotentialSpec::uniform(p.uniform);
  for (const auto& g : p.gauges) spec = VectorPotentialSpec::gauge_shifted(spec, g);
  return spec;
}

// Parse state: the config under construction plus the pieces that are
// assembled afterwards.
struct Draft {
  RunConfig c;
  PotentialParts potential;
  int nx, ny;
  double h;
  bool periodic;
  Vec2 grid_origin;
};

struct Key {
  const char* section;
  const char* name;
  std::function<void(Draft&, const std::string&)> set;
  std::function<std::string(const Draft&)> get;
};

#define ABF_DOUBLE(sec, key, field)                                                   \
  Key {                                                                               \
    sec, key, [](Draft& d, const std::string& v) { d.field = to_double(v); },         \
        [](const Draft& d) { return format_double(d.field); }                         \
  }
#define ABF_INT(sec, key, field)                                                      \
  Key {                                                                               \
    sec, key, [](Draft& d, const std::string& v) { d.field = to_int(v); },            \
        [](const Draft& d) { return std::to_string(d.field); }                        \
  }
#define ABF_BOOL(sec, key, field)                                                     \
  Key {                                                                               \
    sec, key, [](Draft& d, const std::string& v) { d.field = to_bool(v); },           \
        [](const Draft& d) { return from_bool(d.field); }                             \
  }
#define ABF_VEC(sec, key, field, comp)                                                \
  Key {                                                                               \
    sec, key, [](Draft& d, const std::string& v) { d.field.comp() = to_double(v); },  \
        [](const Draft& d) { return format_double(d.field.comp()); }                  \
  }
#define ABF_PATH(sec, key, field)                                                     \
  Key {                                                                               \
    sec, key, [](Draft& d, const std::string& v) { d.field = to_path(v); },           \
        [](const Draft& d) { return from_path(d.field); }                             \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      ABF_INT("grid", "nx", nx),
      ABF_INT("grid", "ny", ny),
      ABF_DOUBLE("grid", "h", h),
      ABF_VEC("grid", "origin_x", grid_origin, x),
      ABF_VEC("grid", "origin_y", grid_origin, y),
      ABF_BOOL("grid", "periodic", periodic),

      ABF_DOUBLE("time", "dt", c.sim.dt),
      ABF_INT("time", "steps", c.sim.steps),
      ABF_INT("time", "output_cadence", c.sim.output_cadence),

      ABF_DOUBLE("field", "coupling", c.sim.coupling),
      ABF_DOUBLE("field", "mass", c.sim.mass),

      ABF_VEC("packet", "x", c.sim.packet.center, x),
      ABF_VEC("packet", "y", c.sim.packet.center, y),
      ABF_DOUBLE("packet", "sigma", c.sim.packet.sigma),
      ABF_VEC("packet", "kx", c.sim.packet.k0, x),
      ABF_VEC("packet", "ky", c.sim.packet.k0, y),
      ABF_BOOL("packet", "dress_incident", c.sim.dress_incident),

      ABF_INT("geometry", "barrier_column", c.sim.geometry.barrier_column),
      ABF_INT("geometry", "barrier_thickness", c.sim.geometry.barrier_thickness),
      Key{"geometry", "slits", [](Draft& d, const std::string& v) { d.c.sim.geometry.slits = to_slits(v); },
          [](const Draft& d) { return from_slits(d.c.sim.geometry.slits); }},
      ABF_VEC("geometry", "exclusion_x", c.sim.geometry.exclusion.center, x),
      ABF_VEC("geometry", "exclusion_y", c.sim.geometry.exclusion.center, y),
      ABF_DOUBLE("geometry", "exclusion_radius", c.sim.geometry.exclusion.radius),
      ABF_INT("geometry", "sponge_width", c.sim.geometry.sponge_width),
      ABF_DOUBLE("geometry", "sponge_strength", c.sim.geometry.sponge_strength),
      ABF_INT("geometry", "screen_column", c.sim.screen_column),

      Key{"potential", "kind",
          [](Draft& d, const std::string& v) {
            if (v != "solenoid" && v != "uniform") throw BadValue{"kind must be solenoid or uniform, got '" + v + "'"};
            d.potential.kind = v;
          },
          [](const Draft& d) { return d.potential.kind; }},
      ABF_VEC("potential", "center_x", potential.center, x),
      ABF_VEC("potential", "center_y", potential.center, y),
      ABF_DOUBLE("potential", "radius", potential.radius),
      ABF_DOUBLE("potential", "flux", potential.flux),
      ABF_VEC("potential", "uniform_x", potential.uniform, x),
      ABF_VEC("potential", "uniform_y", potential.uniform, y),
      Key{"potential", "gauge", [](Draft& d, const std::string& v) { d.potential.gauges = to_gauges(v); },
          [](const Draft& d) { return from_gauges(d.potential.gauges); }},

      ABF_DOUBLE("gauge", "node_threshold", c.gauge.node_threshold),

      ABF_PATH("eikonal", "loop", c.loop),
      ABF_PATH("eikonal", "upper_path", c.upper_path),
      ABF_PATH("eikonal", "lower_path", c.lower_path),
      ABF_DOUBLE("eikonal", "p0", c.refractive.p0),
      ABF_DOUBLE("eikonal", "a1", c.refractive.a1),
      ABF_DOUBLE("eikonal", "a2", c.refractive.a2),
      ABF_DOUBLE("eikonal", "thickness", c.refractive.thickness),

      Key{"analysis", "fluxes", [](Draft& d, const std::string& v) { d.c.fluxes = to_doubles(v); },
          [](const Draft& d) { return from_doubles(d.c.fluxes); }},
      ABF_DOUBLE("analysis", "kappa_guess", c.kappa_guess),

      ABF_INT("dressed", "interval", c.dressed_interval),
      ABF_INT("dressed", "intervals", c.dressed_intervals),

      Key{"run", "out_dir", [](Draft& d, const std::string& v) { d.c.out_dir = v; },
          [](const Draft& d) { return d.c.out_dir; }},
      Key{"run", "seed",
          [](Draft& d, const std::string& v) {
            std::uint64_t s = 0;
            const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
            if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
              throw BadValue{"expected an unsigned integer, got '" + v + "'"};
            d.c.seed = s;
          },
          [](const Draft& d) { return std::to_string(d.c.seed); }},
      ABF_INT("run", "threads", c.sim.threads),
      ABF_BOOL("run", "emit_images", c.emit_images),
      ABF_BOOL("run", "field_dumps", c.field_dumps),
  };
  return table;
}

#undef ABF_DOUBLE
#undef ABF_INT
#undef ABF_BOOL
#undef ABF_VEC
#undef ABF_PATH

Draft to_draft(const RunConfig& c) {
  Draft d;
  d.c = c;
  const Grid& g = c.sim.geometry.grid;
  d.nx = g.nx;
  d.ny = g.ny;
  d.h = g.h;
  d.periodic = g.periodic;
  d.grid_origin = g.origin;
  d.potential = split_potential(c.sim.potential);
  return d;
}

RunConfig from_draft(const Draft& d) {
  RunConfig c = d.c;
  Grid g;
  g.nx = d.nx;
  g.ny = d.ny;
  g.h = d.h;
  g.origin = d.grid_origin;
  g.periodic = d.periodic;
  c.sim.geometry.grid = g;
  c.sim.potential = build_potential(d.potential);
  c.gauge.coupling = c.sim.coupling;
  return c;
}

// Index of the first key named in `message`, for pointing an invariant
// violation at a line.
int line_for_message(const std::string& message, const std::map<std::string, int>& lines) {
  std::string word;
  for (std::size_t k = 0; k <= message.size(); ++k) {
    const char ch = k < message.size() ? message[k] : ' ';
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') {
      word += ch;
      continue;
    }
    if (!word.empty()) {
      const auto it = lines.find(word);
      if (it != lines.end()) return it->second;
      word.clear();
    }
  }
  return 0;
}

}  // namespace

void validate_run_config(const RunConfig& c) {
  c.sim.validate();
  if (!(c.gauge.node_threshold >= 0.0 && c.gauge.node_threshold < 1.0))
    throw ConfigError("node_threshold must lie in [0, 1)");
  if (!c.fluxes.empty()) check_sweep_plan(c.fluxes, c.sim.coupling);
  if (c.kappa_guess < 0.0) throw ConfigError("kappa_guess must be >= 0");
  if (c.dressed_interval < 1 || c.dressed_intervals < 1)
    throw ConfigError("dressed interval and intervals must be >= 1");
  if (c.sim.threads < 0) throw ConfigError("threads must be >= 0");
  if (!c.loop.vertices.empty() && !c.loop.closed) throw ConfigError("eikonal loop must be closed");
  if (c.upper_path.vertices.empty() != c.lower_path.vertices.empty())
    throw ConfigError("upper_path and lower_path must be given together");
  if (c.refractive.p0 < 0.0 || c.refractive.thickness < 0.0)
    throw ConfigError("refractive p0 and thickness must be >= 0");
  if (c.out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

RunConfig parse_config(const std::string& text) {
  Draft draft = to_draft(default_run_config());
  std::map<std::string, const Key*> lookup;
  for (const Key& k : keys()) lookup[std::string(k.section) + "." + k.name] = &k;

  std::map<std::string, int> key_lines;  // bare key name -> line
  std::map<std::string, int> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](int line, const std::string& what) -> void {
    std::ostringstream msg;
    msg << "line " << line << ": " << what;
    throw ConfigError(msg.str());
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const Key& k : keys()) known = known || section == k.section;
      if (!known) fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value', got '" + line + "'");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(line_no, "key '" + name + "' appears before any [section]");
    const std::string full = section + "." + name;
    const auto it = lookup.find(full);
    if (it == lookup.end()) fail(line_no, "unknown key '" + name + "' in [" + section + "]");
    if (seen.count(full)) fail(line_no, "duplicate key '" + full + "' (first set on line " +
                                            std::to_string(seen[full]) + ")");
    seen[full] = line_no;
    key_lines[name] = line_no;
    try {
      it->second->set(draft, value);
    } catch (const BadValue& bad) {
      fail(line_no, full + ": " + bad.what);
    }
  }

  RunConfig config;
  try {
    if (draft.nx < 3 || draft.ny < 3) throw ConfigError("grid needs nx, ny >= 3");
    if (!(draft.h > 0.0)) throw ConfigError("h must be > 0");
    if (draft.potential.kind == "solenoid" && !(draft.potential.radius > 0.0))
      throw ConfigError("solenoid radius must be > 0");
    config = from_draft(draft);
    validate_run_config(config);
  } catch (const Error& e) {
    fail(line_for_message(e.what(), key_lines), std::string("invalid config: ") + e.what());
  }
  return config;
}

RunConfig load_config(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ConfigError("cannot open config file '" + filename + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const RunConfig& config) {
  const Draft d = to_draft(config);
  std::ostringstream out;
  std::string section;
  for (const Key& k : keys()) {
    if (section != k.section) {
      if (!section.empty()) out << "\n";
      section = k.section;
      out << "[" << section << "]\n";
    }
    out << k.name << " = " << k.get(d) << "\n";
  }
  return out.str();
}

}  // namespace abfield

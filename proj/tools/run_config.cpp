#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mfrelax::cli {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError("config field '" + field + "': " + msg);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

double number(const json& obj, const std::string& key, const std::string& where) {
  const std::string field = where.empty() ? key : where + "." + key;
  if (!obj.contains(key)) fail(field, "required");
  const json& v = obj.at(key);
  if (!v.is_number()) fail(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(field, "must be finite");
  return d;
}

double number_or(const json& obj, const std::string& key, const std::string& where, double dflt) {
  return obj.contains(key) ? number(obj, key, where) : dflt;
}

int integer_or(const json& obj, const std::string& key, const std::string& where, int dflt) {
  if (!obj.contains(key)) return dflt;
  const std::string field = where + "." + key;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<int>();
}

bool boolean_or(const json& obj, const std::string& key, const std::string& where, bool dflt) {
  if (!obj.contains(key)) return dflt;
  if (!obj.at(key).is_boolean()) fail(where + "." + key, "expected true or false");
  return obj.at(key).get<bool>();
}

Vec3 triple(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 3) fail(field, "expected [x, y, z]");
  Vec3 p;
  for (int a = 0; a < 3; ++a) {
    if (!v[a].is_number()) fail(field, "expected numbers");
    p[a] = v[a].get<double>();
  }
  return p;
}

void parse_mesh(const json& m, RunConfig& c) {
  check_keys(m, "mesh", {"extents", "resolution", "periodic_z"});
  if (m.contains("extents")) {
    const json& e = m.at("extents");
    if (!e.is_array() || e.size() != 3) fail("mesh.extents", "expected three [lo, hi] pairs");
    for (int a = 0; a < 3; ++a) {
      const std::string f = "mesh.extents[" + std::to_string(a) + "]";
      if (!e[a].is_array() || e[a].size() != 2 || !e[a][0].is_number() || !e[a][1].is_number()) {
        fail(f, "expected [lo, hi]");
      }
      c.extents[a] = Interval{e[a][0].get<double>(), e[a][1].get<double>()};
      if (!(c.extents[a].hi > c.extents[a].lo)) fail(f, "hi must exceed lo");
    }
  }
  if (m.contains("resolution")) {
    const json& r = m.at("resolution");
    if (!r.is_array() || r.size() != 3) fail("mesh.resolution", "expected [nx, ny, nz]");
    for (int a = 0; a < 3; ++a) {
      if (!r[a].is_number_integer() || r[a].get<int>() < 1) {
        fail("mesh.resolution[" + std::to_string(a) + "]", "expected a positive integer");
      }
      c.resolution[a] = r[a].get<int>();
    }
  }
  c.periodic_z = boolean_or(m, "periodic_z", "mesh", c.periodic_z);
}

void parse_ic(const json& ic, RunConfig& c) {
  if (!ic.is_object() || !ic.contains("kind") || !ic.at("kind").is_string()) {
    fail("ic.kind", "required (\"hopf\" or \"isohelix\")");
  }
  const std::string kind = ic.at("kind").get<std::string>();
  if (kind == "hopf") {
    check_keys(ic, "ic", {"kind", "omega1", "omega2", "s"});
    HopfParams p;
    p.omega1 = number_or(ic, "omega1", "ic", p.omega1);
    p.omega2 = number_or(ic, "omega2", "ic", p.omega2);
    p.s = number_or(ic, "s", "ic", p.s);
    if (p.s < 0.0) fail("ic.s", "must be >= 0");
    if (std::hypot(p.omega1, p.omega2) == 0.0) fail("ic.omega1", "omega1 and omega2 cannot both be 0");
    c.ic = p;
  } else if (kind == "isohelix") {
    check_keys(ic, "ic", {"kind"});
    c.ic = IsoHelix{};
  } else {
    fail("ic.kind", "unknown initial condition '" + kind + "'");
  }
}

}  // namespace

BoxMesh RunConfig::mesh() const { return BoxMesh(extents, resolution, periodic_z); }

int RunConfig::steps() const {
  const double n = t_final / dt;
  const double r = std::round(n);
  if (!(r >= 1.0) || std::abs(n - r) > 1e-9 * r) {
    throw ConfigError("config field 'physics.t_final': t_final / dt must be a positive integer");
  }
  return static_cast<int>(r);
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  check_keys(doc, "", {"name", "mesh", "scheme", "ic", "physics", "newton", "output", "trace"});
  RunConfig c;
  if (doc.contains("name")) {
    if (!doc.at("name").is_string()) fail("name", "expected a string");
    c.name = doc.at("name").get<std::string>();
  }
  if (doc.contains("mesh")) parse_mesh(doc.at("mesh"), c);
  if (doc.contains("scheme")) {
    if (!doc.at("scheme").is_string()) fail("scheme", "expected a string");
    try {
      c.scheme = scheme_from_string(doc.at("scheme").get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail("scheme", e.what());
    }
  }
  if (doc.contains("ic")) parse_ic(doc.at("ic"), c);

  if (!doc.contains("physics")) fail("physics", "required (tau, dt, t_final)");
  const json& ph = doc.at("physics");
  check_keys(ph, "physics", {"tau", "dt", "t_final"});
  c.tau = number(ph, "tau", "physics");
  c.dt = number(ph, "dt", "physics");
  c.t_final = number(ph, "t_final", "physics");
  if (c.tau < 0.0) fail("physics.tau", "must be >= 0");
  if (!(c.dt > 0.0)) fail("physics.dt", "must be > 0");
  if (!(c.t_final > 0.0)) fail("physics.t_final", "must be > 0");
  c.steps();

  if (doc.contains("newton")) {
    const json& nw = doc.at("newton");
    check_keys(nw, "newton", {"abs_tol", "max_iter", "halve_on_failure"});
    c.newton_abs_tol = number_or(nw, "abs_tol", "newton", c.newton_abs_tol);
    c.newton_max_iter = integer_or(nw, "max_iter", "newton", c.newton_max_iter);
    c.halve_on_failure = boolean_or(nw, "halve_on_failure", "newton", c.halve_on_failure);
    if (!(c.newton_abs_tol > 0.0)) fail("newton.abs_tol", "must be > 0");
    if (c.newton_max_iter < 1) fail("newton.max_iter", "must be >= 1");
  }
  if (doc.contains("output")) {
    const json& out = doc.at("output");
    check_keys(out, "output", {"dir", "helicity_cadence", "snapshot_cadence", "checkpoint_cadence"});
    if (out.contains("dir")) {
      if (!out.at("dir").is_string()) fail("output.dir", "expected a string");
      c.out_dir = out.at("dir").get<std::string>();
    }
    c.helicity_cadence = integer_or(out, "helicity_cadence", "output", c.helicity_cadence);
    c.snapshot_cadence = integer_or(out, "snapshot_cadence", "output", c.snapshot_cadence);
    c.checkpoint_cadence = integer_or(out, "checkpoint_cadence", "output", c.checkpoint_cadence);
    if (c.helicity_cadence < 0) fail("output.helicity_cadence", "must be >= 0");
    if (c.snapshot_cadence < 0) fail("output.snapshot_cadence", "must be >= 0");
    if (c.checkpoint_cadence < 0) fail("output.checkpoint_cadence", "must be >= 0");
  }
  if (doc.contains("trace")) {
    const json& tr = doc.at("trace");
    check_keys(tr, "trace", {"seeds", "step", "max_len"});
    if (tr.contains("seeds")) {
      const json& s = tr.at("seeds");
      if (!s.is_array()) fail("trace.seeds", "expected a list of [x, y, z]");
      for (std::size_t i = 0; i < s.size(); ++i) {
        c.seeds.push_back(triple(s[i], "trace.seeds[" + std::to_string(i) + "]"));
      }
    }
    c.trace_step = number_or(tr, "step", "trace", c.trace_step);
    c.trace_max_len = number_or(tr, "max_len", "trace", c.trace_max_len);
    if (!(c.trace_max_len > 0.0)) fail("trace.max_len", "must be > 0");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<Vec3> load_seeds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read seed file " + path.string());
  std::vector<Vec3> seeds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p[0])) continue;
    std::string rest;
    if (!(ls >> p[1] >> p[2]) || (ls >> rest)) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected three coordinates");
    }
    seeds.push_back(p);
  }
  return seeds;
}

}  // namespace mfrelax::cli

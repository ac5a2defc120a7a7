#include "forch/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace forch {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

double parse_double(const std::string& v, const std::string& key) {
  const std::string t = trim(v);
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(x))
    fail("key '" + key + "': expected a finite real, got '" + v + "'");
  return x;
}

long parse_long(const std::string& v, const std::string& key) {
  const std::string t = trim(v);
  char* end = nullptr;
  const long x = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    fail("key '" + key + "': expected an integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v, const std::string& key) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::vector<double> parse_doubles(const std::string& v, const std::string& key,
                                  std::size_t want = 0) {
  std::vector<double> out;
  for (const auto& piece : split(v, ','))
    out.push_back(parse_double(piece, key));
  if (want && out.size() != want)
    fail("key '" + key + "': expected " + std::to_string(want) + " values, got " +
         std::to_string(out.size()));
  return out;
}

/// Allowed keys per section; unknown names are hard errors so typos cannot
/// silently fall back to defaults.
const std::set<std::string>& allowed_keys(const std::string& section) {
  static const std::set<std::string> domain{"n", "cells", "lo", "hi"};
  static const std::set<std::string> law{"preset", "a0", "a1", "a2", "a3", "m",
                                         "exponents"};
  static const std::set<std::string> scenario{"phi",       "lambda", "gamma",
                                              "C_Z",       "direction", "psi",
                                              "u0",        "T_final"};
  static const std::set<std::string> bounds{"r1",         "r",        "alpha0",
                                            "kappa_tilde", "p_overrides",
                                            "epsilon",    "optimize", "beta"};
  static const std::set<std::string> solver{"dt_initial", "dt_min",
                                            "dt_max",     "picard_tol",
                                            "picard_max", "snapshot_cadence",
                                            "track_alphas"};
  static const std::set<std::string> harness{
      "seed",         "count",          "max_freq",       "decay",
      "include_constant", "include_linear", "include_bump", "sabotage",
      "params",       "safety_factor",  "c1", "c2", "c3", "c4", "c5", "c6", "c7"};
  static const std::set<std::string> output{"directory", "cadence", "write_fields"};
  static const std::set<std::string> none{};
  if (section == "domain") return domain;
  if (section == "law") return law;
  if (section == "scenario") return scenario;
  if (section == "bounds") return bounds;
  if (section == "solver") return solver;
  if (section == "harness") return harness;
  if (section == "output") return output;
  return none;
}

const std::set<std::string> kSections{"domain",  "law",    "scenario", "bounds",
                                      "solver",  "harness", "output"};

}  // namespace

bool RawConfig::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const std::string* RawConfig::find(const std::string& section,
                                   const std::string& key) const {
  for (const auto& sec : sections)
    if (sec.name == section)
      for (const auto& kv : sec.entries)
        if (kv.first == key) return &kv.second;
  return nullptr;
}

bool RawConfig::operator==(const RawConfig& o) const {
  if (sections.size() != o.sections.size()) return false;
  for (std::size_t i = 0; i < sections.size(); ++i)
    if (sections[i].name != o.sections[i].name ||
        sections[i].entries != o.sections[i].entries)
      return false;
  return true;
}

RawConfig parse_config_text(const std::string& text) {
  RawConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  RawConfig::Section* cur = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail("line " + std::to_string(lineno) + ": unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(name))
        fail("line " + std::to_string(lineno) + ": unknown section '" + name + "'");
      for (const auto& sec : cfg.sections)
        if (sec.name == name)
          fail("line " + std::to_string(lineno) + ": duplicate section '" + name + "'");
      cfg.sections.push_back({name, {}});
      cur = &cfg.sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("line " + std::to_string(lineno) + ": expected 'key = value', got '" +
           line + "'");
    if (!cur) fail("line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("line " + std::to_string(lineno) + ": empty key");
    if (!allowed_keys(cur->name).count(key))
      fail("line " + std::to_string(lineno) + ": unknown key '" + cur->name + "." +
           key + "'");
    for (const auto& kv : cur->entries)
      if (kv.first == key)
        fail("line " + std::to_string(lineno) + ": duplicate key '" + cur->name +
             "." + key + "'");
    cur->entries.emplace_back(key, value);
  }
  return cfg;
}

RawConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const RawConfig& cfg) {
  std::ostringstream out;
  bool first = true;
  for (const auto& sec : cfg.sections) {
    if (!first) out << '\n';
    first = false;
    out << '[' << sec.name << "]\n";
    for (const auto& kv : sec.entries) out << kv.first << " = " << kv.second << '\n';
  }
  return out.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const RawConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_config(cfg))));
  return buf;
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- field specs -------------------------------------------------------------

namespace {

struct Spec {
  std::string kind;                // constant | csv | preset
  std::string preset;              // preset name
  double constant = 0.0;
  std::string path;
  std::vector<double> args;
};

Spec parse_spec(const std::string& spec, const std::string& key) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    fail("key '" + key + "': field spec needs a 'kind:' prefix, got '" + spec + "'");
  Spec s;
  s.kind = trim(spec.substr(0, colon));
  const std::string rest = trim(spec.substr(colon + 1));
  if (s.kind == "constant") {
    s.constant = parse_double(rest, key);
    return s;
  }
  if (s.kind == "csv") {
    if (rest.empty()) fail("key '" + key + "': csv spec needs a path");
    s.path = rest;
    return s;
  }
  if (s.kind != "preset")
    fail("key '" + key + "': unknown field spec kind '" + s.kind + "'");
  const auto paren = rest.find('(');
  if (paren == std::string::npos) {
    s.preset = rest;
  } else {
    if (rest.back() != ')')
      fail("key '" + key + "': unterminated preset arguments in '" + spec + "'");
    s.preset = trim(rest.substr(0, paren));
    const std::string argstr = rest.substr(paren + 1, rest.size() - paren - 2);
    for (const auto& piece : split(argstr, ','))
      s.args.push_back(parse_double(piece, key));
  }
  if (s.preset == "one" || s.preset == "linear_x") {
    if (!s.args.empty()) fail("key '" + key + "': preset " + s.preset + " takes no arguments");
  } else if (s.preset == "gauss_bump") {
    if (s.args.size() != 5)
      fail("key '" + key + "': gauss_bump needs (cx,cy,sigma,amp,base)");
    if (!(s.args[2] > 0)) fail("key '" + key + "': gauss_bump sigma must be positive");
  } else if (s.preset == "checker") {
    if (s.args.size() != 2) fail("key '" + key + "': checker needs (v0,v1)");
  } else {
    fail("key '" + key + "': unknown preset '" + s.preset + "'");
  }
  return s;
}

double eval_preset(const Spec& s, const Grid& g, std::array<double, 3> x,
                   std::array<long, 3> idx) {
  if (s.preset == "one") return 1.0;
  if (s.preset == "linear_x") return x[0];
  if (s.preset == "gauss_bump") {
    double d2 = (x[0] - s.args[0]) * (x[0] - s.args[0]);
    if (g.n >= 2) d2 += (x[1] - s.args[1]) * (x[1] - s.args[1]);
    return s.args[4] + s.args[3] * std::exp(-d2 / (2.0 * s.args[2] * s.args[2]));
  }
  // checker
  return ((idx[0] + idx[1] + idx[2]) % 2 == 0) ? s.args[0] : s.args[1];
}

}  // namespace

SpatialField make_spatial_field(const Grid& g, const std::string& spec,
                                const std::string& key, const std::string& label) {
  const Spec s = parse_spec(spec, key);
  if (s.kind == "constant") return SpatialField::constant(g, s.constant, label);
  if (s.kind == "csv") {
    SpatialField f = [&] {
      try {
        return read_field_csv(s.path);
      } catch (const std::exception& e) {
        fail("key '" + key + "': " + e.what());
      }
    }();
    if (!f.grid.same_layout(g))
      fail("key '" + key + "': field file '" + s.path + "' does not match the grid");
    f.label = label;
    return f;
  }
  SpatialField f = SpatialField::constant(g, 0.0, label);
  for (long c = 0; c < g.cell_count(); ++c)
    f[c] = eval_preset(s, g, g.cell_center(c), g.cell_coords(c));
  return f;
}

BoundaryField make_boundary_field(const Grid& g, const std::string& spec,
                                  const std::string& key, const std::string& label) {
  const Spec s = parse_spec(spec, key);
  if (s.kind == "constant") return BoundaryField::constant(g, s.constant, label);
  if (s.kind == "csv") {
    BoundaryField f = [&] {
      try {
        return read_boundary_csv(s.path);
      } catch (const std::exception& e) {
        fail("key '" + key + "': " + e.what());
      }
    }();
    if (!f.grid.same_layout(g))
      fail("key '" + key + "': boundary file '" + s.path + "' does not match the grid");
    f.label = label;
    return f;
  }
  return BoundaryField::from(g, {0.0},
                             [&](std::array<double, 3> x, double) {
                               return eval_preset(s, g, x, {0, 0, 0});
                             },
                             label);
}

// ---- typed construction --------------------------------------------------------

namespace {

Grid build_grid(const RawConfig& raw) {
  const int n = raw.has("domain", "n")
                    ? static_cast<int>(parse_long(*raw.find("domain", "n"), "domain.n"))
                    : 2;
  if (n < 1 || n > 3) fail("key 'domain.n': dimension must be 1, 2, or 3");
  std::array<long, 3> cells{1, 1, 1};
  if (raw.has("domain", "cells")) {
    const auto v = parse_doubles(*raw.find("domain", "cells"), "domain.cells",
                                 static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      if (v[k] < 1 || v[k] != std::floor(v[k]))
        fail("key 'domain.cells': cell counts must be positive integers");
      cells[k] = static_cast<long>(v[k]);
    }
  } else {
    for (int k = 0; k < n; ++k) cells[k] = 16;
  }
  std::array<double, 3> lo{0, 0, 0}, hi{1, 1, 1};
  if (raw.has("domain", "lo")) {
    const auto v = parse_doubles(*raw.find("domain", "lo"), "domain.lo",
                                 static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) lo[k] = v[k];
  }
  if (raw.has("domain", "hi")) {
    const auto v = parse_doubles(*raw.find("domain", "hi"), "domain.hi",
                                 static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) hi[k] = v[k];
  }
  for (int k = 0; k < n; ++k)
    if (!(hi[k] > lo[k])) fail("key 'domain.hi': extents must exceed domain.lo");
  return Grid::make(n, cells, lo, hi);
}

ForchheimerLaw build_law(const RawConfig& raw, const Grid& g) {
  const std::string preset =
      raw.has("law", "preset") ? trim(*raw.find("law", "preset")) : "two_term";
  auto coeff = [&](const char* key, bool required) -> std::optional<SpatialField> {
    if (!raw.has("law", key)) {
      if (required) fail(std::string("key 'law.") + key + "': required by preset " + preset);
      return std::nullopt;
    }
    return make_spatial_field(g, *raw.find("law", key), std::string("law.") + key, key);
  };
  auto forbid = [&](const char* key) {
    if (raw.has("law", key))
      fail(std::string("key 'law.") + key + "': not used by preset " + preset);
  };

  if (preset == "two_term" || preset == "three_term" || preset == "power_law") {
    if (preset != "power_law") forbid("m");
    forbid("exponents");
    const int terms = preset == "three_term" ? 3 : 2;
    std::vector<SpatialField> coeffs;
    const char* names[4] = {"a0", "a1", "a2", "a3"};
    for (int i = 0; i < terms; ++i) {
      auto f = coeff(names[i], false);
      coeffs.push_back(f ? *f : SpatialField::constant(g, 1.0, names[i]));
    }
    for (int i = terms; i < 4; ++i) forbid(names[i]);
    const double m = preset == "power_law"
                         ? parse_double(raw.has("law", "m") ? *raw.find("law", "m") : "1.5",
                                        "law.m")
                         : 0.0;
    try {
      return preset_law(preset, g, coeffs, m);
    } catch (const std::invalid_argument& e) {
      fail(std::string("section [law]: ") + e.what());
    }
  }
  if (preset != "custom") fail("key 'law.preset': unknown preset '" + preset + "'");

  if (!raw.has("law", "exponents")) fail("key 'law.exponents': required by preset custom");
  forbid("m");
  ForchheimerLaw law;
  law.grid = g;
  law.exponents = parse_doubles(*raw.find("law", "exponents"), "law.exponents");
  if (law.exponents.size() < 2 || law.exponents.size() > 4)
    fail("key 'law.exponents': custom laws take 2 to 4 exponents");
  const char* names[4] = {"a0", "a1", "a2", "a3"};
  for (std::size_t i = 0; i < law.exponents.size(); ++i)
    law.coefficients.push_back(*coeff(names[i], true));
  for (std::size_t i = law.exponents.size(); i < 4; ++i) forbid(names[i]);
  try {
    law.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("section [law]: ") + e.what());
  }
  return law;
}

}  // namespace

RunConfig build_run_config(const RawConfig& raw) {
  RunConfig rc;
  rc.raw = raw;
  rc.hash = config_hash_hex(raw);

  rc.grid = build_grid(raw);
  const Grid& g = rc.grid;

  Scenario& sc = rc.scenario;
  sc.grid = g;
  sc.law = build_law(raw, g);

  sc.phi = raw.has("scenario", "phi")
               ? make_spatial_field(g, *raw.find("scenario", "phi"), "scenario.phi", "phi")
               : SpatialField::constant(g, 1.0, "phi");

  if (raw.has("scenario", "lambda") && raw.has("scenario", "gamma"))
    fail("section [scenario]: give lambda or gamma, not both");
  if (raw.has("scenario", "gamma"))
    sc.lambda = lambda_from_gamma(parse_double(*raw.find("scenario", "gamma"),
                                               "scenario.gamma"));
  else if (raw.has("scenario", "lambda"))
    sc.lambda = parse_double(*raw.find("scenario", "lambda"), "scenario.lambda");
  else
    sc.lambda = 0.5;
  if (!(sc.lambda > 0))
    fail("key 'scenario.lambda': must be positive");

  sc.z.C_Z = raw.has("scenario", "C_Z")
                 ? parse_double(*raw.find("scenario", "C_Z"), "scenario.C_Z")
                 : 0.0;
  if (sc.z.C_Z < 0) fail("key 'scenario.C_Z': must be nonnegative");
  if (raw.has("scenario", "direction")) {
    const auto v = parse_doubles(*raw.find("scenario", "direction"),
                                 "scenario.direction", static_cast<std::size_t>(g.n));
    double norm = 0;
    for (int k = 0; k < g.n; ++k) norm += v[k] * v[k];
    norm = std::sqrt(norm);
    if (!(norm > 0)) fail("key 'scenario.direction': zero vector");
    sc.z.dir = {0, 0, 0};
    for (int k = 0; k < g.n; ++k) sc.z.dir[k] = v[k] / norm;
  }

  sc.psi = raw.has("scenario", "psi")
               ? make_boundary_field(g, *raw.find("scenario", "psi"), "scenario.psi", "psi")
               : BoundaryField::constant(g, 0.0, "psi");
  sc.u0 = raw.has("scenario", "u0")
              ? make_spatial_field(g, *raw.find("scenario", "u0"), "scenario.u0", "u0")
              : SpatialField::constant(g, 1.0, "u0");

  if (raw.has("scenario", "T_final")) {
    const std::string t = trim(*raw.find("scenario", "T_final"));
    if (t.rfind("threshold:", 0) == 0) {
      rc.T_is_threshold_fraction = true;
      rc.T_value = parse_double(t.substr(10), "scenario.T_final");
    } else {
      rc.T_value = parse_double(t, "scenario.T_final");
    }
    if (!(rc.T_value > 0)) fail("key 'scenario.T_final': must be positive");
  }
  sc.T_final = rc.T_is_threshold_fraction ? 1.0 : rc.T_value;  // resolved later

  // [bounds]
  auto bd = [&](const char* key, double dflt) {
    return raw.has("bounds", key) ? parse_double(*raw.find("bounds", key),
                                                 std::string("bounds.") + key)
                                  : dflt;
  };
  rc.r1 = bd("r1", 0.0);
  rc.r = bd("r", -1.0);
  rc.alpha0 = bd("alpha0", 0.0);
  rc.kappa_tilde = bd("kappa_tilde", 0.0);
  if (raw.has("bounds", "p_overrides")) {
    const auto v = parse_doubles(*raw.find("bounds", "p_overrides"),
                                 "bounds.p_overrides", 5);
    rc.p_overrides = std::array<double, 5>{v[0], v[1], v[2], v[3], v[4]};
  }
  if (raw.has("bounds", "epsilon")) {
    const std::string e = trim(*raw.find("bounds", "epsilon"));
    if (e != "auto") {
      rc.epsilon = parse_double(e, "bounds.epsilon");
      if (!(rc.epsilon > 0)) fail("key 'bounds.epsilon': must be positive or 'auto'");
    }
  }
  rc.optimize = raw.has("bounds", "optimize") &&
                parse_bool(*raw.find("bounds", "optimize"), "bounds.optimize");
  if (raw.has("bounds", "beta"))
    rc.beta = parse_double(*raw.find("bounds", "beta"), "bounds.beta");

  // [solver]
  auto sv = [&](const char* key) -> const std::string* {
    return raw.find("solver", key);
  };
  if (const auto* v = sv("dt_initial"); v && trim(*v) != "auto") {
    rc.solver.dt_initial = parse_double(*v, "solver.dt_initial");
    rc.dt_initial_auto = false;
  }
  if (const auto* v = sv("dt_min"); v && trim(*v) != "auto") {
    rc.solver.dt_min = parse_double(*v, "solver.dt_min");
    rc.dt_min_auto = false;
  }
  if (const auto* v = sv("dt_max"); v && trim(*v) != "auto") {
    rc.solver.dt_max = parse_double(*v, "solver.dt_max");
    rc.dt_max_auto = false;
  }
  if (const auto* v = sv("picard_tol")) rc.solver.picard_tol = parse_double(*v, "solver.picard_tol");
  if (const auto* v = sv("picard_max"))
    rc.solver.picard_max = static_cast<int>(parse_long(*v, "solver.picard_max"));
  if (const auto* v = sv("snapshot_cadence"))
    rc.solver.snapshot_cadence = static_cast<int>(parse_long(*v, "solver.snapshot_cadence"));
  if (rc.solver.snapshot_cadence < 1) fail("key 'solver.snapshot_cadence': must be >= 1");
  if (const auto* v = sv("track_alphas")) {
    rc.track_alphas = parse_doubles(*v, "solver.track_alphas");
    for (double a : rc.track_alphas)
      if (!(a > 0)) fail("key 'solver.track_alphas': exponents must be positive");
  }

  // [harness]
  auto hz = [&](const char* key) -> const std::string* {
    return raw.find("harness", key);
  };
  if (const auto* v = hz("seed"))
    rc.seed = static_cast<std::uint64_t>(parse_long(*v, "harness.seed"));
  rc.family.seed = rc.seed;
  if (const auto* v = hz("count"))
    rc.family.count = static_cast<int>(parse_long(*v, "harness.count"));
  if (rc.family.count < 0) fail("key 'harness.count': must be nonnegative");
  if (const auto* v = hz("max_freq"))
    rc.family.max_freq = static_cast<int>(parse_long(*v, "harness.max_freq"));
  if (const auto* v = hz("decay")) rc.family.decay = parse_double(*v, "harness.decay");
  if (const auto* v = hz("include_constant"))
    rc.family.include_constant = parse_bool(*v, "harness.include_constant");
  if (const auto* v = hz("include_linear"))
    rc.family.include_linear = parse_bool(*v, "harness.include_linear");
  if (const auto* v = hz("include_bump"))
    rc.family.include_bump = parse_bool(*v, "harness.include_bump");
  if (const auto* v = hz("sabotage")) rc.sabotage = parse_bool(*v, "harness.sabotage");
  if (const auto* v = hz("safety_factor")) {
    rc.safety_factor = parse_double(*v, "harness.safety_factor");
    if (!(rc.safety_factor >= 1)) fail("key 'harness.safety_factor': must be >= 1");
  }
  if (const auto* v = hz("params")) {
    const std::string p = trim(*v);
    if (p != "default") {
      for (const auto& tuple : split(p, ';')) {
        if (tuple.empty()) continue;
        const auto vals = parse_doubles(tuple, "harness.params", 6);
        rc.param_tuples.push_back({vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]});
      }
    }
  }
  {
    const bool any = hz("c1") || hz("c2") || hz("c3") || hz("c4") || hz("c5") ||
                     hz("c6") || hz("c7");
    const bool all = hz("c1") && hz("c2") && hz("c3") && hz("c4") && hz("c5") &&
                     hz("c6") && hz("c7");
    if (any && !all)
      fail("section [harness]: embedding constants need all of c1..c7");
    if (all) {
      EmbeddingConstants ec;
      ec.c1 = parse_double(*hz("c1"), "harness.c1");
      ec.c2 = parse_double(*hz("c2"), "harness.c2");
      ec.c3 = parse_double(*hz("c3"), "harness.c3");
      ec.c4 = parse_double(*hz("c4"), "harness.c4");
      ec.c5 = parse_double(*hz("c5"), "harness.c5");
      ec.c6 = parse_double(*hz("c6"), "harness.c6");
      ec.c7 = parse_double(*hz("c7"), "harness.c7");
      for (double c : {ec.c1, ec.c2, ec.c3, ec.c4, ec.c5, ec.c6, ec.c7})
        if (!(c > 0)) fail("section [harness]: embedding constants must be positive");
      ec.safety_factor = rc.safety_factor;
      ec.provenance = "user-supplied";
      ec.seed = rc.seed;
      rc.user_constants = ec;
    }
  }

  // [output]
  if (const auto* v = raw.find("output", "directory")) {
    rc.out_dir = trim(*v);
    if (rc.out_dir.empty()) fail("key 'output.directory': empty path");
  }
  if (const auto* v = raw.find("output", "cadence"))
    rc.snapshot_cadence_out = static_cast<int>(parse_long(*v, "output.cadence"));
  if (rc.snapshot_cadence_out < 0) fail("key 'output.cadence': must be >= 0");
  if (const auto* v = raw.find("output", "write_fields"))
    rc.write_fields = parse_bool(*v, "output.write_fields");

  if (rc.snapshot_cadence_out > 0) rc.solver.snapshot_cadence = rc.snapshot_cadence_out;

  try {
    rc.scenario.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("scenario: ") + e.what());
  }
  return rc;
}

}  // namespace forch

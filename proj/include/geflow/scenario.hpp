#pragma once

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "classes.hpp"
#include "flow.hpp"
#include "hym.hpp"

namespace geflow {

enum class ScenarioKind { TorusProduct, TorusCoupled, TorusM2, ProjectiveBundle };

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::TorusProduct: return "torus-product";
    case ScenarioKind::TorusCoupled: return "torus-coupled";
    case ScenarioKind::TorusM2: return "torus-m2";
    case ScenarioKind::ProjectiveBundle: return "projective-bundle";
  }
  return "";
}

// One cosine perturbation; `part` selects the total space, the base summand or a bundle diagonal entry.
struct ModeSpec {
  double amplitude = 0;
  std::vector<int> freq;
  double phase = 0;
  std::string part = "total";
  int entry = 0;
};

struct FlowSpec {
  double dt = 0;  // 0 selects the stability rule
  double T = 1.0;
  Method method = Method::Euler;
  long snapshot_every = 0;
  long record_every = 1;
};

struct Tolerances {
  double contract = 1e-8;
  double he = 1e-10;
  double normalize = 1e-8;
};

struct BundleSpec {
  int rank = 2;
  std::vector<std::int64_t> degrees{0, 0};
  std::int64_t volume = 1;
};

struct Scenario {
  std::string name = "scenario";
  ScenarioKind kind = ScenarioKind::TorusProduct;
  GridSpec grid;
  DiffScheme scheme = DiffScheme::FD4;
  double kappa = 2.0;
  std::vector<double> a_diag;
  cplx a_offdiag = 0;
  std::vector<double> base_metric;
  std::vector<ModeSpec> modes;
  FlowSpec flow;
  Tolerances tol;
  BundleSpec bundle;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::string at_line(const toml::node& n) {
  return " (line " + std::to_string(n.source().begin.line) + ")";
}

inline void only_keys(const toml::table& t, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t)
    if (!allowed.count(std::string(k.str())))
      throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + where + at_line(v));
}

inline const toml::table* sub_table(const toml::table& t, const char* key) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(std::string(key) + ": expected a table" + at_line(*n));
  return n->as_table();
}

inline double get_real(const toml::table& t, const std::string& where, const char* key, double def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
  throw ConfigError(where + key + ": expected a number" + at_line(*n));
}

inline std::int64_t get_int(const toml::table& t, const std::string& where, const char* key, std::int64_t def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (!n->is_integer()) throw ConfigError(where + key + ": expected an integer" + at_line(*n));
  return *n->value<std::int64_t>();
}

inline std::string get_string(const toml::table& t, const std::string& where, const char* key, const std::string& def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (!n->is_string()) throw ConfigError(where + key + ": expected a string" + at_line(*n));
  return *n->value<std::string>();
}

template <class T>
std::vector<T> get_array(const toml::table& t, const std::string& where, const char* key, std::vector<T> def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  const toml::array* a = n->as_array();
  if (!a) throw ConfigError(where + key + ": expected an array" + at_line(*n));
  std::vector<T> out;
  for (const auto& e : *a) {
    bool ok = std::is_integral_v<T> ? e.is_integer() : (e.is_integer() || e.is_floating_point());
    if (!ok) throw ConfigError(where + key + ": wrong element type" + at_line(e));
    out.push_back(*e.value<T>());
  }
  return out;
}

inline ScenarioKind parse_kind(const std::string& s) {
  if (s == "torus-product") return ScenarioKind::TorusProduct;
  if (s == "torus-coupled") return ScenarioKind::TorusCoupled;
  if (s == "torus-m2") return ScenarioKind::TorusM2;
  if (s == "projective-bundle") return ScenarioKind::ProjectiveBundle;
  throw ConfigError("kind: unknown scenario kind '" + s + "'");
}

}  // namespace detail

inline bool is_torus(const Scenario& s) { return s.kind != ScenarioKind::ProjectiveBundle; }

// Checks ranges and cross-field consistency; the admissibility of the initial field is checked by build_field.
inline void validate(const Scenario& s) {
  s.grid.validate();
  if (!(s.kappa > 0)) throw ConfigError("weight.kappa: must be positive");
  if (static_cast<int>(s.a_diag.size()) != s.grid.m) throw ConfigError("weight.a: needs one entry per base dimension");
  if (s.a_offdiag != 0.0 && s.grid.m != 2) throw ConfigError("weight.a_offdiag: requires m = 2");
  if (static_cast<int>(s.base_metric.size()) != s.grid.m)
    throw ConfigError("base_metric.diag: needs one entry per base dimension");
  for (double d : s.base_metric)
    if (!(d > 0)) throw ConfigError("base_metric.diag: entries must be positive");
  if (s.flow.dt < 0) throw ConfigError("flow.dt: must be nonnegative");
  if (!(s.flow.T >= 0)) throw ConfigError("flow.T: must be nonnegative");
  if (s.flow.snapshot_every < 0) throw ConfigError("flow.snapshot_every: must be nonnegative");
  if (s.flow.record_every < 1) throw ConfigError("flow.record_every: must be at least 1");
  if (!(s.tol.contract > 0)) throw ConfigError("tolerances.contract: must be positive");
  if (!(s.tol.he > 0)) throw ConfigError("tolerances.he: must be positive");
  if (!(s.tol.normalize > 0)) throw ConfigError("tolerances.normalize: must be positive");
  if (s.kind == ScenarioKind::ProjectiveBundle) {
    if (s.bundle.rank != 2) throw ConfigError("bundle.rank: rank 2 only");
    if (s.bundle.degrees.size() != 2) throw ConfigError("bundle.degrees: needs one degree per summand");
    if (s.bundle.volume <= 0) throw ConfigError("bundle.volume: must be positive");
  }
  int mdims = 2 * s.grid.m;
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    const ModeSpec& md = s.modes[i];
    std::string where = "mode[" + std::to_string(i) + "]";
    std::size_t want = md.part == "total" ? mdims + 2 : mdims;
    if (md.part == "bundle") {
      if (s.kind != ScenarioKind::ProjectiveBundle) throw ConfigError(where + ".part: bundle modes need a projective-bundle scenario");
      if (md.entry != 0 && md.entry != 1) throw ConfigError(where + ".entry: must be 0 or 1");
    } else if (md.part == "total" || md.part == "base") {
      if (s.kind == ScenarioKind::ProjectiveBundle) throw ConfigError(where + ".part: projective-bundle modes must be bundle modes");
    } else {
      throw ConfigError(where + ".part: expected total, base or bundle");
    }
    if (md.freq.size() != want) throw ConfigError(where + ".freq: expected " + std::to_string(want) + " entries");
    if (s.kind == ScenarioKind::TorusProduct && md.part == "total")
      for (int k = 0; k < mdims; ++k)
        if (md.freq[k] != 0) throw ConfigError(where + ".freq: torus-product total modes must not depend on the base");
  }
}

inline Scenario parse_scenario_string(const std::string& text, const std::string& source = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.source().begin.line) + ": parse error: " +
                      std::string(e.description()));
  }
  using namespace detail;
  only_keys(root, "the top level",
            {"name", "kind", "seed", "grid", "weight", "base_metric", "flow", "tolerances", "bundle", "mode"});
  Scenario s;
  s.name = get_string(root, "", "name", s.name);
  if (!root.get("kind")) throw ConfigError("kind: missing");
  s.kind = parse_kind(get_string(root, "", "kind", ""));
  std::int64_t seed = get_int(root, "", "seed", 1);
  if (seed < 0) throw ConfigError("seed: must be nonnegative");
  s.seed = static_cast<std::uint64_t>(seed);
  s.grid.m = s.kind == ScenarioKind::TorusM2 ? 2 : 1;
  s.grid.kind = s.kind == ScenarioKind::ProjectiveBundle ? FiberKind::Projective : FiberKind::Torus;
  s.grid.N = s.grid.m == 2 ? 8 : 16;

  if (const toml::table* g = sub_table(root, "grid")) {
    only_keys(*g, "[grid]", {"N", "scheme"});
    s.grid.N = static_cast<int>(get_int(*g, "grid.", "N", s.grid.N));
    std::string sch = get_string(*g, "grid.", "scheme", "fd4");
    if (sch == "fd4")
      s.scheme = DiffScheme::FD4;
    else if (sch == "spectral")
      s.scheme = DiffScheme::Spectral;
    else
      throw ConfigError("grid.scheme: expected fd4 or spectral" + at_line(*g->get("scheme")));
  }
  s.a_diag.assign(s.grid.m, 0.0);
  s.base_metric.assign(s.grid.m, 1.0);
  if (const toml::table* w = sub_table(root, "weight")) {
    only_keys(*w, "[weight]", {"kappa", "a", "a_offdiag"});
    s.kappa = get_real(*w, "weight.", "kappa", s.kappa);
    s.a_diag = get_array<double>(*w, "weight.", "a", s.a_diag);
    auto off = get_array<double>(*w, "weight.", "a_offdiag", {0.0, 0.0});
    if (off.size() != 2) throw ConfigError("weight.a_offdiag: expected [re, im]");
    s.a_offdiag = cplx(off[0], off[1]);
  }
  if (const toml::table* b = sub_table(root, "base_metric")) {
    only_keys(*b, "[base_metric]", {"diag"});
    s.base_metric = get_array<double>(*b, "base_metric.", "diag", s.base_metric);
  }
  if (const toml::table* f = sub_table(root, "flow")) {
    only_keys(*f, "[flow]", {"dt", "T", "method", "snapshot_every", "record_every"});
    s.flow.dt = get_real(*f, "flow.", "dt", s.flow.dt);
    s.flow.T = get_real(*f, "flow.", "T", s.flow.T);
    std::string method = get_string(*f, "flow.", "method", "euler");
    try {
      s.flow.method = parse_method(method);
    } catch (const ConfigError&) {
      throw ConfigError("flow.method: expected euler or rk4" + at_line(*f->get("method")));
    }
    s.flow.snapshot_every = get_int(*f, "flow.", "snapshot_every", 0);
    s.flow.record_every = get_int(*f, "flow.", "record_every", 1);
  }
  if (const toml::table* t = sub_table(root, "tolerances")) {
    only_keys(*t, "[tolerances]", {"contract", "he", "normalize"});
    s.tol.contract = get_real(*t, "tolerances.", "contract", s.tol.contract);
    s.tol.he = get_real(*t, "tolerances.", "he", s.tol.he);
    s.tol.normalize = get_real(*t, "tolerances.", "normalize", s.tol.normalize);
  }
  if (const toml::table* b = sub_table(root, "bundle")) {
    if (s.kind != ScenarioKind::ProjectiveBundle) throw ConfigError("[bundle]: only valid for projective-bundle" + at_line(*b));
    only_keys(*b, "[bundle]", {"rank", "degrees", "volume"});
    s.bundle.rank = static_cast<int>(get_int(*b, "bundle.", "rank", 2));
    s.bundle.degrees = get_array<std::int64_t>(*b, "bundle.", "degrees", s.bundle.degrees);
    s.bundle.volume = get_int(*b, "bundle.", "volume", 1);
  }
  if (const toml::node* n = root.get("mode")) {
    const toml::array* arr = n->as_array();
    if (!arr || !arr->is_array_of_tables()) throw ConfigError("mode: expected [[mode]] tables" + at_line(*n));
    for (const auto& e : *arr) {
      const toml::table& t = *e.as_table();
      std::string where = "mode[" + std::to_string(s.modes.size()) + "].";
      only_keys(t, "[[mode]]", {"amplitude", "freq", "phase", "part", "entry"});
      ModeSpec md;
      if (!t.get("amplitude")) throw ConfigError(where + "amplitude: missing" + at_line(t));
      if (!t.get("freq")) throw ConfigError(where + "freq: missing" + at_line(t));
      md.amplitude = get_real(t, where, "amplitude", 0);
      md.freq = get_array<int>(t, where, "freq", {});
      md.phase = get_real(t, where, "phase", 0);
      md.part = get_string(t, where, "part", s.kind == ScenarioKind::ProjectiveBundle ? "bundle" : "total");
      md.entry = static_cast<int>(get_int(t, where, "entry", 0));
      s.modes.push_back(md);
    }
  }
  validate(s);
  return s;
}

inline Scenario parse_scenario(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw ConfigError("cannot read config '" + path + "'");
  }
  return parse_scenario_string(text, path);
}

inline BaseMetric build_base_metric(const Scenario& s) {
  BaseMetric w = BaseMetric::diagonal(s.base_metric);
  w.validate(s.grid.base_size());
  return w;
}

inline std::vector<Mode> modes_of(const Scenario& s, const std::string& part, int entry = 0) {
  std::vector<Mode> out;
  for (const auto& md : s.modes)
    if (md.part == part && (part != "bundle" || md.entry == entry)) out.push_back({md.amplitude, md.freq, md.phase});
  return out;
}

// Initial weight of a torus scenario; a nonpositive fiber Hessian is a configuration error.
inline MetricField build_field(const Scenario& s) {
  if (!is_torus(s)) throw ConfigError("scenario '" + s.name + "' is a projective bundle, not a torus weight");
  MetricField f = MetricField::reference(s.grid, s.kappa, s.scheme);
  f.scenario = s.name;
  for (int a = 0; a < s.grid.m; ++a) f.A(a, a) = s.a_diag[a];
  if (s.grid.m == 2) {
    f.A(0, 1) = s.a_offdiag;
    f.A(1, 0) = std::conj(s.a_offdiag);
  }
  f.psi = sample_modes(s.grid.total(), modes_of(s, "total"));
  auto base = modes_of(s, "base");
  if (!base.empty()) f.p = sample_modes(s.grid.base(), base);
  try {
    admissible_jets(f);
  } catch (const NonAdmissible& e) {
    throw ConfigError(std::string("non-admissible initial field: ") + e.what());
  }
  return f;
}

// Initial bundle metric diag(exp(u0), exp(u1)) of a projective-bundle scenario.
inline HermitianBundleState build_bundle(const Scenario& s) {
  if (s.kind != ScenarioKind::ProjectiveBundle) throw ConfigError("scenario '" + s.name + "' is not a projective bundle");
  Lattice lat{2, s.grid.N};
  HermitianBundleState st = HermitianBundleState::constant(s.grid.N, Mat2::Identity(), s.scheme);
  for (int e = 0; e < 2; ++e) {
    auto md = modes_of(s, "bundle", e);
    if (md.empty()) continue;
    RealField u = sample_modes(lat, md);
    for (std::size_t b = 0; b < u.size(); ++b) st.h[b](e, e) = std::exp(u[b]);
  }
  st.validate();
  return st;
}

inline SplitBundle split_bundle(const Scenario& s) {
  if (s.kind != ScenarioKind::ProjectiveBundle) throw ConfigError("scenario '" + s.name + "' is not a projective bundle");
  return {s.bundle.degrees, Rational(s.bundle.volume)};
}

}  // namespace geflow

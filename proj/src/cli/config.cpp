#include "mfginv/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "mfginv/errors.hpp"

namespace mfginv::cli {

using nlohmann::json;

namespace {

const std::vector<std::pair<Mode, std::string>> kModes = {
    {Mode::Forward, "forward"}, {Mode::GenerateMeasurement, "generate-measurement"},
    {Mode::Eci, "eci"},         {Mode::Bri, "bri"},
    {Mode::BriStaticRestart, "bri-static-restart"},
    {Mode::Heci, "heci"},       {Mode::Linpara, "linpara"},
    {Mode::Diagnostics, "diagnostics"}};

const std::set<std::string> kInteractions = {"absent", "local_identity", "local_negated", "local_square",
                                             "nonlocal_gaussian"};
const std::set<std::string> kDensities = {"uniform", "gaussian"};

// Collects every problem found while reading; the caller throws once at the end.
class Reader {
 public:
  std::vector<std::string> issues;

  void fail(const std::string& where, const std::string& what) { issues.push_back(where + ": " + what); }

  bool object(const json& j, const std::string& where) {
    if (j.is_object()) return true;
    fail(where, "expected an object");
    return false;
  }

  void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) return;
    for (const auto& [key, _] : j.items()) {
      const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
      if (!ok) fail(where, "unknown key '" + key + "'");
    }
  }

  void number(const json& j, const char* key, const std::string& where, double& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      fail(where + "." + key, "expected a finite number");
      return;
    }
    out = v.get<double>();
  }

  void integer(const json& j, const char* key, const std::string& where, int& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_integer()) {
      fail(where + "." + key, "expected an integer");
      return;
    }
    out = v.get<int>();
  }

  void boolean(const json& j, const char* key, const std::string& where, bool& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_boolean()) {
      fail(where + "." + key, "expected true or false");
      return;
    }
    out = v.get<bool>();
  }

  void string(const json& j, const char* key, const std::string& where, std::string& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_string()) {
      fail(where + "." + key, "expected a string");
      return;
    }
    out = v.get<std::string>();
  }

  // {"name": ..., <numeric params>} or a bare name string.
  NamedSpec named(const json& j, const std::string& where) {
    NamedSpec spec;
    if (j.is_string()) {
      spec.name = j.get<std::string>();
      return spec;
    }
    if (!object(j, where)) return spec;
    for (const auto& [key, v] : j.items()) {
      if (key == "name") {
        if (v.is_string()) spec.name = v.get<std::string>();
        else fail(where + ".name", "expected a string");
      } else if (v.is_number()) {
        spec.params[key] = v.get<double>();
      } else if (v.is_boolean()) {
        spec.params[key] = v.get<bool>() ? 1.0 : 0.0;
      } else {
        fail(where + "." + key, "parameters must be numbers");
      }
    }
    if (spec.name.empty()) fail(where, "missing 'name'");
    return spec;
  }

  void forward(const json& j, const std::string& where, FicPlayParams& p) {
    if (!object(j, where)) return;
    only_keys(j, where, {"schedule", "delta", "tol", "max_iter", "newton_tol", "newton_max_iter"});
    std::string schedule = p.schedule.is_harmonic() ? "harmonic" : "fixed";
    double delta = p.schedule.delta();
    string(j, "schedule", where, schedule);
    number(j, "delta", where, delta);
    if (schedule == "harmonic") {
      p.schedule = WeightSchedule::harmonic();
    } else if (schedule == "fixed") {
      if (delta > 0.0 && delta <= 1.0) p.schedule = WeightSchedule::fixed(delta);
      else fail(where + ".delta", "must lie in (0, 1]");
    } else {
      fail(where + ".schedule", "expected 'fixed' or 'harmonic'");
    }
    number(j, "tol", where, p.tol);
    integer(j, "max_iter", where, p.max_iter);
    number(j, "newton_tol", where, p.newton.tol);
    integer(j, "newton_max_iter", where, p.newton.max_iter);
    if (!(p.tol > 0.0)) fail(where + ".tol", "must be positive");
    if (p.max_iter < 1) fail(where + ".max_iter", "must be at least 1");
    if (!(p.newton.tol > 0.0)) fail(where + ".newton_tol", "must be positive");
    if (p.newton.max_iter < 1) fail(where + ".newton_max_iter", "must be at least 1");
  }

  FieldSpec field(const json& j, const std::string& where) {
    FieldSpec f;
    if (j.is_number()) {
      f.value = j.get<double>();
      return f;
    }
    if (!object(j, where)) return f;
    std::string kind = "constant";
    string(j, "kind", where, kind);
    if (kind == "constant") {
      only_keys(j, where, {"kind", "value"});
      number(j, "value", where, f.value);
    } else if (kind == "random") {
      only_keys(j, where, {"kind", "low", "high"});
      f.kind = FieldSpec::Kind::Random;
      double v = 0.0;
      if (j.contains("low")) {
        number(j, "low", where, v);
        f.low = v;
      }
      if (j.contains("high")) {
        number(j, "high", where, v);
        f.high = v;
      }
      if (f.low && f.high && !(*f.low < *f.high)) fail(where, "random bounds need low < high");
    } else if (kind == "potential") {
      f.kind = FieldSpec::Kind::Potential;
      if (!j.contains("potential")) {
        fail(where, "kind 'potential' needs a 'potential' entry");
      } else {
        only_keys(j, where, {"kind", "potential"});
        f.potential = named(j.at("potential"), where + ".potential");
        check_potential(f.potential, where + ".potential");
      }
    } else {
      fail(where + ".kind", "expected 'constant', 'random' or 'potential'");
    }
    return f;
  }

  void check_potential(const NamedSpec& s, const std::string& where) {
    const auto names = builtin_potential_names();
    if (std::find(names.begin(), names.end(), s.name) == names.end()) {
      fail(where + ".name", "unknown potential '" + s.name + "'");
      return;
    }
    try {
      builtin_potential(Grid(4, 1, 0.0, 1.0, 1.0), s.name, s.params);
    } catch (const std::exception& e) {
      fail(where, e.what());
    }
  }

  void check_density(const NamedSpec& s, const std::string& where) {
    if (!kDensities.contains(s.name)) {
      fail(where + ".name", "unknown density '" + s.name + "'");
      return;
    }
    try {
      builtin_density(Grid(4, 1, 0.0, 1.0, 1.0), s.name, s.params);
    } catch (const std::exception& e) {
      fail(where, e.what());
    }
  }
};

json named_json(const NamedSpec& s) {
  json j = json::object();
  j["name"] = s.name;
  for (const auto& [k, v] : s.params) j[k] = v;
  return j;
}

json forward_json(const FicPlayParams& p) {
  json j;
  j["schedule"] = p.schedule.is_harmonic() ? "harmonic" : "fixed";
  if (!p.schedule.is_harmonic()) j["delta"] = p.schedule.delta();
  j["tol"] = p.tol;
  j["max_iter"] = p.max_iter;
  j["newton_tol"] = p.newton.tol;
  j["newton_max_iter"] = p.newton.max_iter;
  return j;
}

json field_json(const FieldSpec& f) {
  json j;
  switch (f.kind) {
    case FieldSpec::Kind::Constant:
      j["kind"] = "constant";
      j["value"] = f.value;
      break;
    case FieldSpec::Kind::Random:
      j["kind"] = "random";
      if (f.low) j["low"] = *f.low;
      if (f.high) j["high"] = *f.high;
      break;
    case FieldSpec::Kind::Potential:
      j["kind"] = "potential";
      j["potential"] = named_json(f.potential);
      break;
  }
  return j;
}

double param(const BuiltinParams& p, const char* key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error([&] {
        std::string msg = "invalid config:";
        for (const auto& s : issues) msg += "\n  - " + s;
        return msg;
      }()),
      issues_(std::move(issues)) {}

std::string to_string(Mode m) {
  for (const auto& [mode, name] : kModes)
    if (mode == m) return name;
  return "unknown";
}

std::optional<Mode> parse_mode(const std::string& s) {
  for (const auto& [mode, name] : kModes)
    if (name == s) return mode;
  return std::nullopt;
}

bool is_inverse_mode(Mode m) {
  return m == Mode::Eci || m == Mode::Bri || m == Mode::BriStaticRestart || m == Mode::Heci || m == Mode::Linpara;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  Reader r;
  ExperimentConfig cfg;
  if (!r.object(doc, "config")) throw ConfigError(r.issues);
  r.only_keys(doc, "config",
              {"name", "mode", "seed", "problem", "grid", "forward", "inverse", "measurement", "diagnostics",
               "output_dir"});
  r.string(doc, "name", "config", cfg.name);
  if (cfg.name.empty() || cfg.name.find_first_of("/\\,\n") != std::string::npos)
    r.fail("config.name", "must be non-empty without '/', '\\', ',' or newlines");

  if (doc.contains("mode")) {
    std::string mode;
    r.string(doc, "mode", "config", mode);
    if (auto m = parse_mode(mode)) cfg.mode = *m;
    else r.fail("config.mode", "unknown mode '" + mode + "'");
  }
  if (doc.contains("seed")) {
    if (doc.at("seed").is_number_unsigned()) cfg.seed = doc.at("seed").get<std::uint64_t>();
    else r.fail("config.seed", "expected a nonnegative integer");
  }

  ProblemSpec& ps = cfg.problem;
  if (!doc.contains("problem")) {
    r.fail("config", "missing 'problem'");
  } else if (const json& pj = doc.at("problem"); r.object(pj, "problem")) {
    r.only_keys(pj, "problem",
                {"domain", "T", "nu", "hamiltonian", "nu_num", "interaction", "terminal", "rho0", "potential"});
    if (pj.contains("domain")) {
      const json& d = pj.at("domain");
      if (d.is_array() && d.size() == 2 && d[0].is_number() && d[1].is_number()) {
        ps.x_lo = d[0].get<double>();
        ps.x_hi = d[1].get<double>();
        if (!(ps.x_lo < ps.x_hi)) r.fail("problem.domain", "needs lo < hi");
      } else {
        r.fail("problem.domain", "expected [lo, hi]");
      }
    }
    r.number(pj, "T", "problem", ps.T);
    r.number(pj, "nu", "problem", ps.nu);
    r.string(pj, "hamiltonian", "problem", ps.hamiltonian);
    if (!(ps.T > 0.0)) r.fail("problem.T", "must be positive");
    if (!(ps.nu > 0.0)) r.fail("problem.nu", "must be positive");
    if (ps.hamiltonian != "quadratic") r.fail("problem.hamiltonian", "unknown Hamiltonian '" + ps.hamiltonian + "'");
    if (pj.contains("nu_num")) {
      const json& v = pj.at("nu_num");
      if (v.is_string() && v.get<std::string>() == "dx") {
        ps.nu_num.reset();
      } else if (v.is_number() && v.get<double>() >= 0.0) {
        ps.nu_num = v.get<double>();
      } else {
        r.fail("problem.nu_num", "expected \"dx\" or a nonnegative number");
      }
    }
    if (pj.contains("interaction")) {
      ps.interaction = r.named(pj.at("interaction"), "problem.interaction");
      if (!kInteractions.contains(ps.interaction.name))
        r.fail("problem.interaction.name", "unknown interaction '" + ps.interaction.name + "'");
      if (ps.interaction.name == "nonlocal_gaussian" && !(param(ps.interaction.params, "sigma", 0.0) > 0.0))
        r.fail("problem.interaction.sigma", "nonlocal_gaussian needs sigma > 0");
    }
    r.string(pj, "terminal", "problem", ps.terminal);
    if (ps.terminal != "zero" && ps.terminal != "neg_rho0")
      r.fail("problem.terminal", "expected 'zero' or 'neg_rho0'");
    if (pj.contains("rho0")) {
      ps.rho0 = r.named(pj.at("rho0"), "problem.rho0");
      r.check_density(ps.rho0, "problem.rho0");
    }
    if (pj.contains("potential") && !pj.at("potential").is_null()) {
      ps.potential = r.named(pj.at("potential"), "problem.potential");
      r.check_potential(*ps.potential, "problem.potential");
    }
  }

  if (!doc.contains("grid")) {
    r.fail("config", "missing 'grid'");
  } else if (const json& gj = doc.at("grid"); r.object(gj, "grid")) {
    r.only_keys(gj, "grid", {"nx", "nt"});
    r.integer(gj, "nx", "grid", cfg.nx);
    r.integer(gj, "nt", "grid", cfg.nt);
    if (cfg.nx < 3) r.fail("grid.nx", "must be at least 3");
    if (cfg.nt < 1) r.fail("grid.nt", "must be at least 1");
  }

  if (doc.contains("forward")) r.forward(doc.at("forward"), "forward", cfg.forward);
  cfg.inverse.forward = cfg.forward;
  cfg.measurement.forward = cfg.forward;

  if (doc.contains("inverse")) {
    const json& ij = doc.at("inverse");
    if (r.object(ij, "inverse")) {
      r.only_keys(ij, "inverse",
                  {"q0", "outer_tol", "outer_max", "stop_on_forward_failure", "bri_inner_N", "bri_delta",
                   "heci_levels", "heci_coarse_tol", "divergence_threshold"});
      InverseConfig& ic = cfg.inverse;
      if (ij.contains("q0")) cfg.q0_spec = r.field(ij.at("q0"), "inverse.q0");
      r.number(ij, "outer_tol", "inverse", ic.outer_tol);
      r.integer(ij, "outer_max", "inverse", ic.outer_max);
      r.boolean(ij, "stop_on_forward_failure", "inverse", ic.stop_on_forward_failure);
      r.integer(ij, "bri_inner_N", "inverse", ic.bri_inner_N);
      r.number(ij, "bri_delta", "inverse", ic.bri_delta);
      r.integer(ij, "heci_levels", "inverse", ic.heci_levels);
      r.number(ij, "heci_coarse_tol", "inverse", ic.heci_coarse_tol);
      r.number(ij, "divergence_threshold", "inverse", ic.divergence_threshold);
      if (!(ic.outer_tol > 0.0)) r.fail("inverse.outer_tol", "must be positive");
      if (ic.outer_max < 0) r.fail("inverse.outer_max", "must be nonnegative");
      if (ic.bri_inner_N < 1) r.fail("inverse.bri_inner_N", "must be at least 1");
      if (!(ic.bri_delta > 0.0 && ic.bri_delta <= 1.0)) r.fail("inverse.bri_delta", "must lie in (0, 1]");
      if (ic.heci_levels < 1) r.fail("inverse.heci_levels", "must be at least 1");
      if (!(ic.heci_coarse_tol > 0.0)) r.fail("inverse.heci_coarse_tol", "must be positive");
      if (!(ic.divergence_threshold > 0.0)) r.fail("inverse.divergence_threshold", "must be positive");
    }
  }

  if (doc.contains("measurement")) {
    const json& mj = doc.at("measurement");
    if (r.object(mj, "measurement")) {
      r.only_keys(mj, "measurement", {"source", "path", "forward"});
      std::string source = "generate";
      r.string(mj, "source", "measurement", source);
      if (source == "file") {
        cfg.measurement.source = MeasurementSpec::Source::File;
        std::string path;
        r.string(mj, "path", "measurement", path);
        if (path.empty()) r.fail("measurement.path", "required when source is 'file'");
        cfg.measurement.path = path.empty() ? std::filesystem::path() : base_dir / path;
      } else if (source != "generate") {
        r.fail("measurement.source", "expected 'generate' or 'file'");
      }
      if (mj.contains("forward")) r.forward(mj.at("forward"), "measurement.forward", cfg.measurement.forward);
    }
  }

  if (doc.contains("diagnostics")) {
    const json& dj = doc.at("diagnostics");
    if (r.object(dj, "diagnostics")) {
      r.only_keys(dj, "diagnostics", {"q_hat"});
      if (dj.contains("q_hat")) cfg.q_hat_spec = r.field(dj.at("q_hat"), "diagnostics.q_hat");
    }
  }

  if (doc.contains("output_dir")) {
    std::string out;
    r.string(doc, "output_dir", "config", out);
    cfg.output_dir = out;
  } else {
    cfg.output_dir = std::filesystem::path("out") / cfg.name;
  }

  // Cross-field constraints.
  const bool generates = cfg.mode == Mode::Forward || cfg.mode == Mode::GenerateMeasurement ||
                         cfg.mode == Mode::Diagnostics ||
                         (is_inverse_mode(cfg.mode) && cfg.measurement.source == MeasurementSpec::Source::Generate);
  if (generates && !ps.potential) r.fail("problem.potential", "mode '" + to_string(cfg.mode) + "' needs a truth potential");
  if (cfg.mode == Mode::Linpara && ps.interaction.name != "absent")
    r.fail("problem.interaction", "linpara mode requires the 'absent' interaction");
  if (cfg.mode == Mode::Heci) {
    const int factor = 1 << std::clamp(cfg.inverse.heci_levels - 1, 0, 30);
    if (cfg.nx % factor != 0 || cfg.nt % factor != 0)
      r.fail("grid", "heci with " + std::to_string(cfg.inverse.heci_levels) + " levels needs nx and nt divisible by " +
                         std::to_string(factor));
    else if (cfg.nx / factor < 3)
      r.fail("grid.nx", "coarsest heci level needs at least 3 nodes");
  }
  if (cfg.mode != Mode::Heci && cfg.inverse.heci_levels != 1 && doc.contains("inverse") &&
      doc.at("inverse").contains("heci_levels"))
    r.fail("inverse.heci_levels", "only meaningful in heci mode");
  if (cfg.q0_spec.kind == FieldSpec::Kind::Random && (!cfg.q0_spec.low != !cfg.q0_spec.high))
    r.fail("inverse.q0", "give both random bounds or neither");

  if (!r.issues.empty()) throw ConfigError(r.issues);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::optional<std::string>& mode_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open '" + path.string() + "'"});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  if (mode_override && doc.is_object()) doc["mode"] = *mode_override;
  return parse_config(doc, path.parent_path());
}

json to_json(const ExperimentConfig& cfg) {
  const ProblemSpec& ps = cfg.problem;
  json j;
  j["name"] = cfg.name;
  j["mode"] = to_string(cfg.mode);
  j["seed"] = cfg.seed;
  json& pj = j["problem"];
  pj["domain"] = {ps.x_lo, ps.x_hi};
  pj["T"] = ps.T;
  pj["nu"] = ps.nu;
  pj["hamiltonian"] = ps.hamiltonian;
  // Resolved value, so the record never depends on an implicit default.
  pj["nu_num"] = ps.nu_num ? *ps.nu_num : (ps.x_hi - ps.x_lo) / cfg.nx;
  pj["nu_num_rule"] = ps.nu_num ? "fixed" : "dx";
  pj["interaction"] = named_json(ps.interaction);
  pj["terminal"] = ps.terminal;
  pj["rho0"] = named_json(ps.rho0);
  pj["potential"] = ps.potential ? named_json(*ps.potential) : json(nullptr);
  j["grid"] = {{"nx", cfg.nx}, {"nt", cfg.nt}};
  j["forward"] = forward_json(cfg.forward);
  const InverseConfig& ic = cfg.inverse;
  j["inverse"] = {{"q0", field_json(cfg.q0_spec)},
                  {"outer_tol", ic.outer_tol},
                  {"outer_max", ic.outer_max},
                  {"stop_on_forward_failure", ic.stop_on_forward_failure},
                  {"bri_inner_N", ic.bri_inner_N},
                  {"bri_delta", ic.bri_delta},
                  {"heci_levels", ic.heci_levels},
                  {"heci_coarse_tol", ic.heci_coarse_tol},
                  {"divergence_threshold", ic.divergence_threshold}};
  json& mj = j["measurement"];
  mj["source"] = cfg.measurement.source == MeasurementSpec::Source::File ? "file" : "generate";
  if (cfg.measurement.source == MeasurementSpec::Source::File) mj["path"] = cfg.measurement.path.generic_string();
  mj["forward"] = forward_json(cfg.measurement.forward);
  j["diagnostics"] = {{"q_hat", field_json(cfg.q_hat_spec)}};
  j["output_dir"] = cfg.output_dir.generic_string();
  return j;
}

Grid build_grid(const ExperimentConfig& cfg) {
  return Grid(cfg.nx, cfg.nt, cfg.problem.x_lo, cfg.problem.x_hi, cfg.problem.T);
}

MfgProblem build_problem(const ExperimentConfig& cfg) {
  const ProblemSpec& ps = cfg.problem;
  const Grid g = build_grid(cfg);
  InteractionCost f = InteractionCost::absent();
  const std::string& fname = ps.interaction.name;
  if (fname == "local_identity") f = InteractionCost::local_identity();
  else if (fname == "local_negated") f = InteractionCost::local_negated();
  else if (fname == "local_square") f = InteractionCost::local_square();
  else if (fname == "nonlocal_gaussian")
    f = InteractionCost::nonlocal_gaussian(param(ps.interaction.params, "sigma", 0.1),
                                           param(ps.interaction.params, "square_density", 0.0) != 0.0);

  const SpatialField rho0 = builtin_density(g, ps.rho0.name, ps.rho0.params);
  const TerminalCost ft = ps.terminal == "neg_rho0" ? TerminalCost::fixed(rho0 * -1.0) : TerminalCost::zero();
  std::optional<SpatialField> q;
  if (ps.potential) q = builtin_potential(g, ps.potential->name, ps.potential->params);
  return MfgProblem(ps.nu, Hamiltonian::quadratic(), ps.nu_num, std::move(f), ft, rho0, std::move(q));
}

double uniform_draw(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 evaluated at counter position index + 1.
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

SpatialField resolve_field(const FieldSpec& spec, const MfgProblem& problem, std::uint64_t seed) {
  const Grid& g = problem.grid();
  switch (spec.kind) {
    case FieldSpec::Kind::Constant:
      return SpatialField(g, spec.value);
    case FieldSpec::Kind::Potential:
      return builtin_potential(g, spec.potential.name, spec.potential.params);
    case FieldSpec::Kind::Random: {
      double lo = -1.0, hi = 1.0;
      if (spec.low && spec.high) {
        lo = *spec.low;
        hi = *spec.high;
      } else if (problem.q()) {
        lo = problem.q()->min();
        hi = problem.q()->max();
      }
      SpatialField out(g);
      for (int i = 0; i < g.nx(); ++i) out[i] = lo + (hi - lo) * uniform_draw(seed, static_cast<std::uint64_t>(i));
      return out;
    }
  }
  throw InvalidArgument("resolve_field: unknown kind");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mfginv::cli

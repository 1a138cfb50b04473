#pragma once

// Command-line driver internals: flat dotted-key run configuration, artifact
// writers (CSV/JSON with the resolved config embedded), the validation
// report, and the parameter-sweep worker pool.  The `pxp` binary is a thin
// argument-parsing shell around run_config().

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pxpdyn/dynamics.hpp"
#include "pxpdyn/errors.hpp"
#include "pxpdyn/integrator.hpp"
#include "pxpdyn/leakage.hpp"
#include "pxpdyn/model.hpp"
#include "pxpdyn/validate.hpp"

namespace pxpdyn {

// Full-precision (round-trip safe) real formatting for all artifacts.
inline std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct SweepAxis {
  std::string name;  // model.Omega_i | model.Delta_i | state.theta_i | state.phi_i
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  double value(int k) const {
    return count <= 1 ? min : min + (max - min) * static_cast<double>(k) / (count - 1);
  }
};

struct RunConfig {
  std::string mode;  // evolve | leakage | validate | sweep
  ModelParams params;
  VariationalState state;
  double t_end = 0.0;
  double dt = 1e-3;
  long long record_every = 1;
  RhsKind rhs = RhsKind::exact;
  double trunc_eps = detail::kSeriesTruncEps;
  std::vector<SweepAxis> axes;
  std::string output_path;    // empty = stdout
  std::string format = "csv"; // csv | json
  std::uint64_t seed = kDefaultValidationSeed;
  int threads = 0;  // sweep worker count, 0 = hardware
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline bool parse_plain_real(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

// Accepts plain reals plus the convenience forms "pi", "-pi", "3*pi", "pi/2",
// and "3*pi/4" so angle-valued keys stay readable.
inline double parse_real_token(const std::string& raw, const std::string& key, int line) {
  const std::string tok = trim(raw);
  const auto fail = [&]() -> double {
    throw config_error("line " + std::to_string(line) + ": key '" + key +
                       "': cannot parse real value '" + tok + "'");
  };
  if (tok.empty()) return fail();
  double v = 0.0;
  if (parse_plain_real(tok, v)) return v;
  const std::size_t p = tok.find("pi");
  if (p == std::string::npos) return fail();
  double coef = 1.0, divisor = 1.0;
  const std::string pre = trim(tok.substr(0, p));
  const std::string post = trim(tok.substr(p + 2));
  if (pre == "-") {
    coef = -1.0;
  } else if (!pre.empty()) {
    if (pre.back() != '*') return fail();
    if (!parse_plain_real(trim(pre.substr(0, pre.size() - 1)), coef)) return fail();
  }
  if (!post.empty()) {
    if (post.front() != '/') return fail();
    if (!parse_plain_real(trim(post.substr(1)), divisor)) return fail();
    if (divisor == 0.0) return fail();
  }
  return coef * pi / divisor;
}

// Flat `key = value` file: '#' comments, blank lines ignored, duplicate keys
// rejected, unknown keys reported after parsing (typos fail loudly).
class KeyValues {
 public:
  static KeyValues parse(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string s = trim(line);
      if (s.empty()) continue;
      const std::size_t eq = s.find('=');
      if (eq == std::string::npos)
        throw config_error("line " + std::to_string(lineno) + ": expected 'key = value', got '" +
                           s + "'");
      const std::string key = trim(s.substr(0, eq));
      const std::string val = trim(s.substr(eq + 1));
      if (key.empty())
        throw config_error("line " + std::to_string(lineno) + ": empty key");
      const auto [it, fresh] = kv.items_.emplace(key, Item{val, lineno, false});
      if (!fresh)
        throw config_error("line " + std::to_string(lineno) + ": duplicate key '" + key +
                           "' (first set on line " + std::to_string(it->second.line) + ")");
    }
    return kv;
  }

  bool has(const std::string& key) const { return items_.count(key) != 0; }

  std::string str(const std::string& key) const {
    const Item& it = require(key);
    return it.value;
  }
  std::string str_or(const std::string& key, const std::string& def) const {
    return has(key) ? str(key) : def;
  }

  double num(const std::string& key) const {
    const Item& it = require(key);
    return parse_real_token(it.value, key, it.line);
  }
  double num_or(const std::string& key, double def) const { return has(key) ? num(key) : def; }

  long long integer(const std::string& key) const {
    const Item& it = require(key);
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(it.value, &pos);
      if (pos != it.value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw config_error("line " + std::to_string(it.line) + ": key '" + key +
                         "': cannot parse integer '" + it.value + "'");
    }
  }
  long long integer_or(const std::string& key, long long def) const {
    return has(key) ? integer(key) : def;
  }

  bool flag_or(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const Item& it = require(key);
    if (it.value == "true" || it.value == "1") return true;
    if (it.value == "false" || it.value == "0") return false;
    throw config_error("line " + std::to_string(it.line) + ": key '" + key +
                       "': expected true/false, got '" + it.value + "'");
  }

  // Comma list of reals; a single value broadcasts to length n.
  std::vector<double> list_k(const std::string& key, int n) const {
    const Item& it = require(key);
    std::vector<double> out;
    std::stringstream ss(it.value);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_real_token(tok, key, it.line));
    if (static_cast<int>(out.size()) == 1 && n > 1) out.assign(n, out[0]);
    if (static_cast<int>(out.size()) != n)
      throw config_error("line " + std::to_string(it.line) + ": key '" + key + "': expected " +
                         std::to_string(n) + " comma-separated values, got " +
                         std::to_string(out.size()));
    return out;
  }

  void finish() const {
    std::string unknown;
    for (const auto& [key, item] : items_)
      if (!item.used) unknown += (unknown.empty() ? "" : ", ") + ("'" + key + "' (line " +
                                 std::to_string(item.line) + ")");
    if (!unknown.empty()) throw config_error("unknown config keys: " + unknown);
  }

 private:
  struct Item {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  const Item& require(const std::string& key) const {
    const auto it = items_.find(key);
    if (it == items_.end()) throw config_error("missing required config key '" + key + "'");
    it->second.used = true;
    return it->second;
  }

  std::map<std::string, Item> items_;
};

inline RhsKind parse_rhs(const std::string& s) {
  if (s == "exact") return RhsKind::exact;
  if (s == "series") return RhsKind::series;
  if (s == "spin_half") return RhsKind::spin_half;
  if (s == "large_j") return RhsKind::large_j;
  throw config_error("run.rhs must be exact|series|spin_half|large_j, got '" + s + "'");
}

// Resolves a sweep axis name to a component setter; rejects anything that is
// not a per-site Omega/Delta/theta/phi entry (1-based site index).
inline std::pair<int, int> axis_target(const std::string& name, int K) {
  static const std::vector<std::pair<std::string, int>> kinds = {
      {"model.Omega_", 0}, {"model.Delta_", 1}, {"state.theta_", 2}, {"state.phi_", 3}};
  for (const auto& [prefix, kind] : kinds)
    if (name.rfind(prefix, 0) == 0) {
      int idx = 0;
      try {
        std::size_t pos = 0;
        idx = std::stoi(name.substr(prefix.size()), &pos);
        if (pos != name.size() - prefix.size()) throw std::invalid_argument("");
      } catch (...) {
        throw config_error("sweep axis '" + name + "': bad site index");
      }
      if (idx < 1 || idx > K)
        throw config_error("sweep axis '" + name + "': site index out of range 1.." +
                           std::to_string(K));
      return {kind, idx - 1};
    }
  throw config_error("sweep axis '" + name +
                     "' is not sweepable (use model.Omega_i, model.Delta_i, state.theta_i, "
                     "state.phi_i)");
}

inline void apply_axis(RunConfig& cfg, const std::pair<int, int>& target, double v) {
  switch (target.first) {
    case 0: cfg.params.Omega[target.second] = v; break;
    case 1: cfg.params.Delta[target.second] = v; break;
    case 2: cfg.state.theta[target.second] = v; break;
    default: cfg.state.phi[target.second] = v; break;
  }
}

inline std::string join17(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
  return s;
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in, const std::string& mode_override = "") {
  using detail::KeyValues;
  KeyValues kv = KeyValues::parse(in);
  RunConfig cfg;

  std::string mode = kv.str_or("run.mode", "");
  if (!mode_override.empty()) {
    if (!mode.empty() && mode != mode_override)
      throw config_error("run.mode = '" + mode + "' conflicts with subcommand '" +
                         mode_override + "'");
    mode = mode_override;
  }
  if (mode.empty()) throw config_error("run.mode missing (evolve|leakage|validate|sweep)");
  if (mode != "evolve" && mode != "leakage" && mode != "validate" && mode != "sweep")
    throw config_error("run.mode must be evolve|leakage|validate|sweep, got '" + mode + "'");
  cfg.mode = mode;

  cfg.output_path = kv.str_or("run.output", "");
  cfg.format = kv.str_or("run.format", "csv");
  if (cfg.format != "csv" && cfg.format != "json")
    throw config_error("run.format must be csv|json, got '" + cfg.format + "'");
  cfg.seed = static_cast<std::uint64_t>(
      kv.integer_or("run.seed", static_cast<long long>(kDefaultValidationSeed)));
  cfg.threads = static_cast<int>(kv.integer_or("run.threads", 0));

  if (mode != "validate") {
    const int K = static_cast<int>(kv.integer("model.K"));
    if (K < 1) throw config_error("model.K must be >= 1");
    cfg.params.K = K;
    cfg.params.J = kv.num("model.J");
    cfg.params.Omega = kv.list_k("model.Omega", K);
    cfg.params.Delta = kv.has("model.Delta") ? kv.list_k("model.Delta", K)
                                             : std::vector<double>(K, 0.0);
    cfg.params.retain_beta = kv.flag_or("model.retain_beta", true);
    cfg.state.theta = kv.list_k("state.theta", K);
    cfg.state.phi = kv.has("state.phi") ? kv.list_k("state.phi", K)
                                        : std::vector<double>(K, 0.0);
    cfg.rhs = detail::parse_rhs(kv.str_or("run.rhs", "exact"));
    cfg.trunc_eps = kv.num_or("run.trunc_eps", detail::kSeriesTruncEps);
    // Model-level checks run here so a bad config is rejected at parse time;
    // surface them as config errors since the config file is what is wrong.
    try {
      validate(cfg.params);
      validate_state(cfg.params, cfg.state);
    } catch (const validation_error& e) {
      throw config_error(e.what());
    }
  }
  if (mode == "evolve") {
    cfg.t_end = kv.num("run.t_end");
    cfg.dt = kv.num_or("run.dt", 1e-3);
    cfg.record_every = kv.integer_or("run.record_every", 1);
    if (cfg.record_every < 1) throw config_error("run.record_every must be >= 1");
  }
  if (mode == "sweep") {
    cfg.t_end = kv.num_or("run.t_end", 0.0);
    cfg.dt = kv.num_or("run.dt", 1e-3);
    for (const char* axis : {"sweep.axis1", "sweep.axis2"}) {
      const std::string base(axis);
      if (!kv.has(base + ".name")) {
        if (base == "sweep.axis1") throw config_error("sweep mode requires sweep.axis1.name");
        continue;
      }
      SweepAxis ax;
      ax.name = kv.str(base + ".name");
      ax.min = kv.num(base + ".min");
      ax.max = kv.num(base + ".max");
      ax.count = static_cast<int>(kv.integer(base + ".count"));
      if (ax.count < 1) throw config_error(base + ".count must be >= 1");
      detail::axis_target(ax.name, cfg.params.K);  // name validation
      cfg.axes.push_back(std::move(ax));
    }
  }
  kv.finish();
  return cfg;
}

// Canonical echo of every resolved setting, embedded in all artifacts.
inline std::vector<std::pair<std::string, std::string>> resolved_config(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("run.mode", cfg.mode);
  out.emplace_back("run.format", cfg.format);
  if (!cfg.output_path.empty()) out.emplace_back("run.output", cfg.output_path);
  if (cfg.mode == "validate") {
    out.emplace_back("run.seed", std::to_string(cfg.seed));
    return out;
  }
  out.emplace_back("model.K", std::to_string(cfg.params.K));
  out.emplace_back("model.J", fmt17(cfg.params.J));
  out.emplace_back("model.Omega", detail::join17(cfg.params.Omega));
  out.emplace_back("model.Delta", detail::join17(cfg.params.Delta));
  out.emplace_back("model.retain_beta", cfg.params.retain_beta ? "true" : "false");
  out.emplace_back("state.theta", detail::join17(cfg.state.theta));
  out.emplace_back("state.phi", detail::join17(cfg.state.phi));
  out.emplace_back("run.rhs", to_string(cfg.rhs));
  out.emplace_back("run.trunc_eps", fmt17(cfg.trunc_eps));
  if (cfg.mode == "evolve" || cfg.mode == "sweep") {
    out.emplace_back("run.t_end", fmt17(cfg.t_end));
    out.emplace_back("run.dt", fmt17(cfg.dt));
  }
  if (cfg.mode == "evolve")
    out.emplace_back("run.record_every", std::to_string(cfg.record_every));
  if (cfg.mode == "sweep") {
    out.emplace_back("run.threads", std::to_string(cfg.threads));
    for (std::size_t a = 0; a < cfg.axes.size(); ++a) {
      const std::string base = "sweep.axis" + std::to_string(a + 1);
      out.emplace_back(base + ".name", cfg.axes[a].name);
      out.emplace_back(base + ".min", fmt17(cfg.axes[a].min));
      out.emplace_back(base + ".max", fmt17(cfg.axes[a].max));
      out.emplace_back(base + ".count", std::to_string(cfg.axes[a].count));
    }
  }
  return out;
}

namespace detail {

inline void write_artifact(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);  // binary keeps newlines unix
  if (!f) throw io_error("cannot open output path '" + path + "'");
  f << text;
  f.flush();
  if (!f) throw io_error("write failed for output path '" + path + "'");
}

inline std::string config_comment_block(const RunConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : resolved_config(cfg)) s += "# " + k + " = " + v + "\n";
  return s;
}

inline nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : resolved_config(cfg)) j[k] = v;
  return j;
}

inline std::string state_snapshot(const VariationalState& y) {
  return "theta = (" + join17(y.theta) + "), phi = (" + join17(y.phi) + ")";
}

inline std::string trajectory_csv(const RunConfig& cfg, const Trajectory& tr) {
  std::string s = config_comment_block(cfg);
  s += "# termination = " + std::string(to_string(tr.termination)) + "\n";
  s += "t";
  for (int i = 1; i <= cfg.params.K; ++i) s += ",theta_" + std::to_string(i);
  for (int i = 1; i <= cfg.params.K; ++i) s += ",phi_" + std::to_string(i);
  s += ",energy,gamma2,accumulated_leakage\n";
  for (std::size_t r = 0; r < tr.times.size(); ++r) {
    s += fmt17(tr.times[r]);
    for (const double th : tr.states[r].theta) s += "," + fmt17(th);
    for (const double ph : tr.states[r].phi) s += "," + fmt17(ph);
    s += "," + fmt17(tr.energy[r]) + "," + fmt17(tr.gamma2[r]) + "," +
         fmt17(tr.accumulated_leakage[r]) + "\n";
  }
  return s;
}

inline std::string trajectory_json(const RunConfig& cfg, const Trajectory& tr) {
  nlohmann::json j;
  j["config"] = config_json(cfg);
  j["termination"] = to_string(tr.termination);
  nlohmann::json cols = nlohmann::json::array();
  cols.push_back("t");
  for (int i = 1; i <= cfg.params.K; ++i) cols.push_back("theta_" + std::to_string(i));
  for (int i = 1; i <= cfg.params.K; ++i) cols.push_back("phi_" + std::to_string(i));
  for (const char* c : {"energy", "gamma2", "accumulated_leakage"}) cols.push_back(c);
  j["columns"] = cols;
  nlohmann::json recs = nlohmann::json::array();
  for (std::size_t r = 0; r < tr.times.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    row.push_back(tr.times[r]);
    for (const double th : tr.states[r].theta) row.push_back(th);
    for (const double ph : tr.states[r].phi) row.push_back(ph);
    row.push_back(tr.energy[r]);
    row.push_back(tr.gamma2[r]);
    row.push_back(tr.accumulated_leakage[r]);
    recs.push_back(std::move(row));
  }
  j["records"] = std::move(recs);
  return j.dump(2) + "\n";
}

inline std::vector<std::pair<std::string, double>> leakage_quantities(const RunConfig& cfg) {
  const double e_cell = variational_energy(cfg.params, cfg.state);
  const VarianceReport vr = leakage_rate(cfg.params, cfg.state);
  std::vector<std::pair<std::string, double>> q = {
      {"energy_per_cell", e_cell},
      {"energy_per_site", e_cell / cfg.params.K},
      {"gamma2", vr.gamma2},
      {"gamma", std::sqrt(std::max(vr.gamma2, 0.0))},
      {"gamma2_definition", vr.gamma2_definition},
      {"variance_total", vr.total},
      {"variance_zz", vr.var_zz},
      {"variance_zxxz", vr.var_zxxz},
      {"variance_xx", vr.var_xx},
  };
  for (std::size_t b = 0; b < vr.gamma2_breakdown.size(); ++b)
    q.emplace_back("gamma2_breakdown_" + std::to_string(b + 1), vr.gamma2_breakdown[b]);
  return q;
}

}  // namespace detail

// Mode runners return process exit codes: 0 ok, 2 config, 3 numeric event.

inline int run_evolve(const RunConfig& cfg, std::ostream& diag) {
  const Trajectory tr =
      evolve(cfg.state, cfg.params, cfg.t_end, cfg.dt, cfg.rhs,
             static_cast<int>(std::min<long long>(cfg.record_every, 1 << 30)), cfg.trunc_eps);
  detail::write_artifact(cfg.output_path, cfg.format == "csv"
                                              ? detail::trajectory_csv(cfg, tr)
                                              : detail::trajectory_json(cfg, tr));
  if (tr.termination != Termination::completed) {
    const VariationalState& snap = tr.states.empty() ? cfg.state : tr.states.back();
    const double t_last = tr.times.empty() ? 0.0 : tr.times.back();
    diag << "numeric event: " << to_string(tr.termination) << " after t = " << fmt17(t_last)
         << " at " << detail::state_snapshot(snap) << "\n";
    return 3;
  }
  return 0;
}

inline int run_leakage(const RunConfig& cfg, std::ostream& diag) {
  std::vector<std::pair<std::string, double>> q;
  try {
    q = detail::leakage_quantities(cfg);
  } catch (const validation_error&) {
    throw;
  } catch (const error& e) {
    diag << "numeric event: " << e.what() << " at " << detail::state_snapshot(cfg.state)
         << "\n";
    return 3;
  }
  if (cfg.format == "csv") {
    std::string s = detail::config_comment_block(cfg);
    s += "quantity,value\n";
    for (const auto& [name, v] : q) s += name + "," + fmt17(v) + "\n";
    detail::write_artifact(cfg.output_path, s);
  } else {
    nlohmann::json j;
    j["config"] = detail::config_json(cfg);
    nlohmann::json rep = nlohmann::json::object();
    for (const auto& [name, v] : q) rep[name] = v;
    j["report"] = std::move(rep);
    detail::write_artifact(cfg.output_path, j.dump(2) + "\n");
  }
  return 0;
}

inline int run_validate_mode(const RunConfig& cfg, std::ostream& diag) {
  const ValidationReport rep = run_validation(cfg.seed);
  if (cfg.format == "csv") {
    std::ostringstream os;
    os << detail::config_comment_block(cfg);
    print_validation(rep, os);
    detail::write_artifact(cfg.output_path, os.str());
  } else {
    nlohmann::json j;
    j["config"] = detail::config_json(cfg);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rep.results)
      arr.push_back({{"index", r.index},
                     {"name", r.name},
                     {"passed", r.passed},
                     {"detail", r.detail},
                     {"seconds", r.seconds}});
    j["criteria"] = std::move(arr);
    j["all_passed"] = rep.all_passed();
    detail::write_artifact(cfg.output_path, j.dump(2) + "\n");
  }
  if (!rep.all_passed()) {
    diag << "validation failed\n";
    return 1;
  }
  return 0;
}

inline int run_sweep(const RunConfig& cfg, std::ostream&) {
  struct Row {
    std::vector<double> axis_values;
    double energy = std::numeric_limits<double>::quiet_NaN();
    double gamma2 = std::numeric_limits<double>::quiet_NaN();
    std::string termination;
  };

  if (cfg.axes.empty()) throw config_error("sweep mode requires at least one axis");
  std::vector<std::pair<int, int>> targets;
  for (const auto& ax : cfg.axes) targets.push_back(detail::axis_target(ax.name, cfg.params.K));
  const int n1 = cfg.axes[0].count;
  const int n2 = cfg.axes.size() > 1 ? cfg.axes[1].count : 1;
  const std::size_t total = static_cast<std::size_t>(n1) * n2;

  std::vector<Row> rows(total);
  std::atomic<std::size_t> cursor{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t at = cursor.fetch_add(1);
      if (at >= total) return;
      const int k1 = static_cast<int>(at) / n2;
      const int k2 = static_cast<int>(at) % n2;
      RunConfig point = cfg;
      Row& row = rows[at];
      row.axis_values.push_back(cfg.axes[0].value(k1));
      detail::apply_axis(point, targets[0], row.axis_values.back());
      if (cfg.axes.size() > 1) {
        row.axis_values.push_back(cfg.axes[1].value(k2));
        detail::apply_axis(point, targets[1], row.axis_values.back());
      }
      try {
        const Trajectory tr = evolve(point.state, point.params, point.t_end, point.dt,
                                     point.rhs, 1 << 30, point.trunc_eps);
        row.termination = to_string(tr.termination);
        if (!tr.energy.empty()) {
          row.energy = tr.energy.back();
          row.gamma2 = tr.gamma2.back();
        }
      } catch (const validation_error&) {
        row.termination = "validation_error";
      } catch (const wrong_spin_error&) {
        row.termination = "wrong_spin_error";
      } catch (const error&) {
        // evolve() absorbs pole/degenerate/resonance/convergence events into
        // the trajectory termination, so anything else is unexpected.
        row.termination = "numeric_error";
      }
    }
  };

  int n_threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(total)));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  if (cfg.format == "csv") {
    std::string s = detail::config_comment_block(cfg);
    s += cfg.axes[0].name;
    if (cfg.axes.size() > 1) s += "," + cfg.axes[1].name;
    s += ",energy,gamma2,termination\n";
    for (const Row& row : rows) {
      s += fmt17(row.axis_values[0]);
      if (row.axis_values.size() > 1) s += "," + fmt17(row.axis_values[1]);
      s += "," + fmt17(row.energy) + "," + fmt17(row.gamma2) + "," + row.termination + "\n";
    }
    detail::write_artifact(cfg.output_path, s);
  } else {
    nlohmann::json j;
    j["config"] = detail::config_json(cfg);
    nlohmann::json arr = nlohmann::json::array();
    for (const Row& row : rows) {
      nlohmann::json o;
      o[cfg.axes[0].name] = row.axis_values[0];
      if (row.axis_values.size() > 1) o[cfg.axes[1].name] = row.axis_values[1];
      o["energy"] = row.energy;
      o["gamma2"] = row.gamma2;
      o["termination"] = row.termination;
      arr.push_back(std::move(o));
    }
    j["rows"] = std::move(arr);
    detail::write_artifact(cfg.output_path, j.dump(2) + "\n");
  }
  return 0;
}

inline int run_config(const RunConfig& cfg, std::ostream& diag) {
  try {
    if (cfg.mode == "evolve") return run_evolve(cfg, diag);
    if (cfg.mode == "leakage") return run_leakage(cfg, diag);
    if (cfg.mode == "validate") return run_validate_mode(cfg, diag);
    if (cfg.mode == "sweep") return run_sweep(cfg, diag);
    throw config_error("unknown run.mode '" + cfg.mode + "'");
  } catch (const config_error& e) {
    diag << "config error: " << e.what() << "\n";
    return 2;
  } catch (const validation_error& e) {
    diag << "config error: " << e.what() << "\n";
    return 2;
  } catch (const wrong_spin_error& e) {
    diag << "config error: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    diag << "io error: " << e.what() << "\n";
    return 2;
  } catch (const error& e) {
    diag << "numeric event: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace pxpdyn

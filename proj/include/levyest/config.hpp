#pragma once

#include "bench.hpp"
#include "errors.hpp"
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace levyest {

//! [estimate] section: input for the estimate subcommand.
struct EstimateSettings
{
  std::string samples;         //!< sample CSV path; empty: simulate the first grid cell
  std::optional<double> delta; //!< sampling step of the CSV
  std::size_t replicate = 0;
  std::size_t density_points = 512;
};

struct ParsedConfig
{
  ExperimentPlan plan;
  EstimateSettings estimate;
  std::size_t dump_replicates = 1; //!< replicates written per cell by simulate
  //! grid as written: explicit Delta list or the n^exponent coupling
  std::vector<std::size_t> grid_n;
  std::vector<double> grid_delta;
  double delta_scale = 1.0;
  double delta_exponent = -0.5;
};

namespace config_detail {

struct Entry
{
  std::string value;
  int line;
};

inline const std::map<std::string, std::set<std::string>>& schema()
{
  static const std::map<std::string, std::set<std::string>> s = {
    { "run", { "name", "seed", "replicates", "workers" } },
    { "model",
      { "family", "intensity", "jump_law", "jump_mean", "jump_sd", "jump_lo", "jump_hi", "jump_value", "alpha",
        "sigma" } },
    { "geometry", { "eps", "a_bar", "eps_exponent" } },
    { "simulation", { "mode", "inner_cutoff_ratio", "gaussian_remainder", "dump_replicates" } },
    { "grid", { "n", "delta", "delta_scale", "delta_exponent" } },
    { "estimator", { "smoothness", "order", "depth", "j_rule", "j_fixed", "correction_order", "clip" } },
    { "loss", { "p", "grid_points" } },
    { "bounds",
      { "intensity_limit_delta", "count_n", "count_runs", "count_delta", "count_r", "split_n", "split_runs", "split_delta",
        "split_r", "tail_t", "tail_x", "tail_replicates" } },
    { "diagnostics", { "h1_deltas", "h2_deltas", "h2_replicates", "stable_k_max", "stable_replicates" } },
    { "estimate", { "samples", "delta", "replicate", "density_points" } },
  };
  return s;
}

inline std::string trim(const std::string& s)
{
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos)
    return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class Table
{
public:
  explicit Table(const std::string& text)
  {
    std::istringstream is(text);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(is, raw)) {
      ++lineno;
      std::string line = trim(raw);
      if (line.empty() || line[0] == '#' || line[0] == ';')
        continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("malformed section header '" + line + "'", lineno);
        section = trim(line.substr(1, line.size() - 2));
        if (!schema().count(section))
          throw ConfigError("unknown section [" + section + "]", lineno);
        sections_.emplace(section, lineno);
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected 'key = value', got '" + line + "'", lineno);
      if (section.empty())
        throw ConfigError("key outside any [section]", lineno);
      std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (!schema().at(section).count(key))
        throw ConfigError("unknown key '" + key + "' in [" + section + "]", lineno);
      auto& keys = entries_[section];
      if (auto it = keys.find(key); it != keys.end())
        throw ConfigError("duplicate key '" + key + "' in [" + section + "] (lines " +
                            std::to_string(it->second.line) + " and " + std::to_string(lineno) + ")",
                          lineno);
      keys.emplace(key, Entry{ value, lineno });
    }
  }

  const Entry* find(const std::string& sec, const std::string& key) const
  {
    auto s = entries_.find(sec);
    if (s == entries_.end())
      return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
  //! Line of the key, else of its section header, else 0.
  int line_of(const std::string& sec, const std::string& key) const
  {
    if (auto e = find(sec, key))
      return e->line;
    auto s = sections_.find(sec);
    return s == sections_.end() ? 0 : s->second;
  }
  const Entry& require(const std::string& sec, const std::string& key) const
  {
    if (auto e = find(sec, key))
      return *e;
    throw ConfigError("missing required key '" + key + "' in [" + sec + "]", line_of(sec, key));
  }

private:
  std::map<std::string, std::map<std::string, Entry>> entries_;
  std::map<std::string, int> sections_;
};

inline double to_double(const Entry& e, const std::string& key)
{
  const std::string& s = e.value;
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    if (s == "inf")
      return std::numeric_limits<double>::infinity();
    throw ConfigError("'" + key + "' expects a number, got '" + s + "'", e.line);
  }
  return v;
}

inline uint64_t to_count(const Entry& e, const std::string& key)
{
  double v = to_double(e, key);
  if (!(v >= 0) || v != std::floor(v) || v > 9007199254740992.0)
    throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + e.value + "'", e.line);
  return uint64_t(v);
}

inline bool to_bool(const Entry& e, const std::string& key)
{
  if (e.value == "true" || e.value == "yes" || e.value == "1")
    return true;
  if (e.value == "false" || e.value == "no" || e.value == "0")
    return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + e.value + "'", e.line);
}

inline std::vector<std::string> split_list(const std::string& s)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty())
        out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

inline std::vector<double> to_doubles(const Entry& e, const std::string& key)
{
  std::vector<double> out;
  for (const auto& item : split_list(e.value))
    out.push_back(to_double(Entry{ item, e.line }, key));
  if (out.empty())
    throw ConfigError("'" + key + "' expects a nonempty list", e.line);
  return out;
}

inline std::string join(const std::vector<double>& v)
{
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

} // namespace config_detail

//! Parses the `[section]` / `key = value` format. Every problem is a
//! ConfigError carrying the offending line.
inline ParsedConfig parse_config(const std::string& text)
{
  using namespace config_detail;
  Table t(text);
  ParsedConfig c;
  ExperimentPlan& p = c.plan;

  auto num = [&](const char* sec, const char* key, double& dst) {
    if (auto e = t.find(sec, key))
      dst = to_double(*e, key);
  };
  auto count = [&](const char* sec, const char* key, auto& dst) {
    if (auto e = t.find(sec, key))
      dst = decltype(+dst)(to_count(*e, key));
  };
  auto str = [&](const char* sec, const char* key, std::string& dst) {
    if (auto e = t.find(sec, key))
      dst = e->value;
  };
  auto flag = [&](const char* sec, const char* key, bool& dst) {
    if (auto e = t.find(sec, key))
      dst = to_bool(*e, key);
  };
  auto list = [&](const char* sec, const char* key, std::vector<double>& dst) {
    if (auto e = t.find(sec, key))
      dst = to_doubles(*e, key);
  };
  auto fail = [&](const std::string& m, const char* sec, const char* key) {
    throw ConfigError(m, t.line_of(sec, key));
  };

  str("run", "name", p.config_id);
  if (auto e = t.find("run", "seed")) {
    uint64_t v = 0;
    auto r = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (e->value.empty() || r.ec != std::errc() || r.ptr != e->value.data() + e->value.size())
      fail("'seed' expects an unsigned 64-bit integer, got '" + e->value + "'", "run", "seed");
    p.seed = v;
  }
  count("run", "replicates", p.replicates);
  count("run", "workers", p.workers);

  auto& m = p.model;
  str("model", "family", m.family);
  num("model", "intensity", m.intensity);
  str("model", "jump_law", m.jump_law);
  num("model", "jump_mean", m.jump_mean);
  num("model", "jump_sd", m.jump_sd);
  num("model", "jump_lo", m.jump_lo);
  num("model", "jump_hi", m.jump_hi);
  num("model", "jump_value", m.jump_value);
  num("model", "alpha", m.alpha);
  num("model", "sigma", m.sigma);

  p.geometry.eps = to_double(t.require("geometry", "eps"), "eps");
  num("geometry", "a_bar", p.geometry.a_bar);
  if (auto e = t.find("geometry", "eps_exponent"); e && e->value != "none") {
    p.eps_exponent = to_double(*e, "eps_exponent");
    if (!(*p.eps_exponent > 0))
      fail("eps_exponent must be positive", "geometry", "eps_exponent");
  }

  if (auto e = t.find("simulation", "mode")) {
    if (e->value == "exact")
      p.mode = SimulationMode::exact;
    else if (e->value == "decomposed")
      p.mode = SimulationMode::decomposed;
    else
      fail("mode must be exact or decomposed", "simulation", "mode");
  }
  num("simulation", "inner_cutoff_ratio", p.inner_cutoff_ratio);
  flag("simulation", "gaussian_remainder", p.gaussian_remainder);
  count("simulation", "dump_replicates", c.dump_replicates);

  {
    const auto& e = t.require("grid", "n");
    for (double v : to_doubles(e, "n")) {
      if (!(v >= 1) || v != std::floor(v))
        throw ConfigError("'n' expects positive integers", e.line);
      c.grid_n.push_back(std::size_t(v));
    }
  }
  list("grid", "delta", c.grid_delta);
  num("grid", "delta_scale", c.delta_scale);
  num("grid", "delta_exponent", c.delta_exponent);
  if (!c.grid_delta.empty()) {
    if (t.find("grid", "delta_scale") || t.find("grid", "delta_exponent"))
      fail("give either 'delta' or 'delta_scale'/'delta_exponent', not both", "grid", "delta");
    if (c.grid_delta.size() != c.grid_n.size() && c.grid_delta.size() != 1)
      fail("'delta' must have one entry or one per n", "grid", "delta");
    for (std::size_t i = 0; i < c.grid_n.size(); ++i)
      p.grid.push_back({ c.grid_n[i], c.grid_delta[c.grid_delta.size() == 1 ? 0 : i] });
  } else {
    if (!(c.delta_scale > 0))
      fail("delta_scale must be positive", "grid", "delta_scale");
    p.grid = coupled_grid(c.grid_n, c.delta_scale, c.delta_exponent);
  }

  auto& est = p.estimator;
  num("estimator", "smoothness", est.s);
  count("estimator", "order", est.order);
  count("estimator", "depth", est.depth);
  if (auto e = t.find("estimator", "j_rule")) {
    try {
      est.j_rule = parse_j_rule(e->value);
    } catch (const DomainError& x) {
      throw ConfigError(x.what(), e->line);
    }
  }
  count("estimator", "j_fixed", est.j_fixed);
  count("estimator", "correction_order", est.correction_order);
  flag("estimator", "clip", est.clip);

  num("loss", "p", p.p);
  count("loss", "grid_points", p.loss_points);

  auto& b = p.bounds;
  num("bounds", "intensity_limit_delta", b.intensity_limit_delta);
  count("bounds", "count_n", b.count_n);
  count("bounds", "count_runs", b.count_runs);
  num("bounds", "count_delta", b.count_delta);
  list("bounds", "count_r", b.count_r);
  count("bounds", "split_n", b.split_n);
  count("bounds", "split_runs", b.split_runs);
  num("bounds", "split_delta", b.split_delta);
  list("bounds", "split_r", b.split_r);
  num("bounds", "tail_t", b.tail_t);
  list("bounds", "tail_x", b.tail_x);
  count("bounds", "tail_replicates", b.tail_replicates);
  if (!(b.intensity_limit_delta > 0 && b.count_delta > 0 && b.split_delta > 0 && b.tail_t > 0))
    fail("bound step sizes must be positive", "bounds", "count_delta");
  if (b.split_runs < 1 || b.split_n < 1)
    fail("split_runs and split_n must be >= 1", "bounds", "split_runs");

  auto& d = p.diagnostics;
  list("diagnostics", "h1_deltas", d.h1_deltas);
  list("diagnostics", "h2_deltas", d.h2_deltas);
  count("diagnostics", "h2_replicates", d.h2_replicates);
  count("diagnostics", "stable_k_max", d.stable_k_max);
  count("diagnostics", "stable_replicates", d.stable_replicates);
  if (d.h2_replicates < 1000 || d.stable_replicates < 1000)
    fail("diagnostic Monte Carlo needs at least 1000 replicates", "diagnostics", "h2_replicates");
  for (double x : d.h1_deltas)
    if (!(x > 0))
      fail("h1_deltas must be positive", "diagnostics", "h1_deltas");
  for (double x : d.h2_deltas)
    if (!(x > 0))
      fail("h2_deltas must be positive", "diagnostics", "h2_deltas");

  str("estimate", "samples", c.estimate.samples);
  if (auto e = t.find("estimate", "delta"); e && e->value != "none") {
    c.estimate.delta = to_double(*e, "delta");
    if (!(*c.estimate.delta > 0))
      fail("estimate delta must be positive", "estimate", "delta");
  }
  count("estimate", "replicate", c.estimate.replicate);
  count("estimate", "density_points", c.estimate.density_points);
  if (c.estimate.density_points < 2)
    fail("density_points must be >= 2", "estimate", "density_points");
  if (!c.estimate.samples.empty() && !c.estimate.delta)
    fail("'samples' needs the sampling step 'delta'", "estimate", "samples");

  // invariants, reported at the line that caused them
  LevyModel model = [&] {
    try {
      return m.build();
    } catch (const DomainError& x) {
      throw ConfigError(x.what(), t.line_of("model", "family"));
    }
  }();
  try {
    p.geometry.validate(model);
  } catch (const DomainError& x) {
    std::string w = x.what();
    throw ConfigError(w, w.find("a_bar") != std::string::npos && t.find("geometry", "a_bar")
                           ? t.line_of("geometry", "a_bar")
                           : t.line_of("geometry", "eps"));
  }
  try {
    p.validate();
  } catch (const DomainError& x) {
    std::string w = x.what();
    auto has = [&](const char* s) { return w.find(s) != std::string::npos; };
    int line = has("config_id")        ? t.line_of("run", "name")
               : has("replicates")     ? t.line_of("run", "replicates")
               : has("grid")           ? t.line_of("grid", "n")
               : has("eps")            ? t.line_of("geometry", "eps_exponent")
               : has("a_bar")          ? t.line_of("geometry", "a_bar")
               : has("depth")          ? t.line_of("estimator", "depth")
               : has("j_fixed")        ? t.line_of("estimator", "j_fixed")
               : has("order")          ? t.line_of("estimator", "order")
               : has("smoothness")     ? t.line_of("estimator", "smoothness")
               : has("inner_cutoff")   ? t.line_of("simulation", "inner_cutoff_ratio")
               : has("loss") || has("p must") ? t.line_of("loss", "p")
                                       : 0;
    throw ConfigError(w, line);
  }
  return c;
}

//! Every key with its resolved value; parse_config(serialize_config(c))
//! reproduces c.
inline std::string serialize_config(const ParsedConfig& c)
{
  using config_detail::join;
  const auto& p = c.plan;
  const auto& m = p.model;
  const auto& e = p.estimator;
  const auto& b = p.bounds;
  const auto& d = p.diagnostics;
  auto f = [](double x) { return format_double(x); };
  std::ostringstream os;
  os << "[run]\n"
     << "name = " << p.config_id << "\n"
     << "seed = " << p.seed << "\n"
     << "replicates = " << p.replicates << "\n"
     << "workers = " << p.workers << "\n\n";
  os << "[model]\n"
     << "family = " << m.family << "\n"
     << "intensity = " << f(m.intensity) << "\n"
     << "jump_law = " << m.jump_law << "\n"
     << "jump_mean = " << f(m.jump_mean) << "\n"
     << "jump_sd = " << f(m.jump_sd) << "\n"
     << "jump_lo = " << f(m.jump_lo) << "\n"
     << "jump_hi = " << f(m.jump_hi) << "\n"
     << "jump_value = " << f(m.jump_value) << "\n"
     << "alpha = " << f(m.alpha) << "\n"
     << "sigma = " << f(m.sigma) << "\n\n";
  os << "[geometry]\n"
     << "eps = " << f(p.geometry.eps) << "\n"
     << "a_bar = " << f(p.geometry.a_bar) << "\n"
     << "eps_exponent = " << (p.eps_exponent ? f(*p.eps_exponent) : "none") << "\n\n";
  os << "[simulation]\n"
     << "mode = " << to_string(p.mode) << "\n"
     << "inner_cutoff_ratio = " << f(p.inner_cutoff_ratio) << "\n"
     << "gaussian_remainder = " << (p.gaussian_remainder ? "true" : "false") << "\n"
     << "dump_replicates = " << c.dump_replicates << "\n\n";
  os << "[grid]\n";
  {
    std::vector<double> ns(c.grid_n.begin(), c.grid_n.end());
    os << "n = " << join(ns) << "\n";
    if (!c.grid_delta.empty())
      os << "delta = " << join(c.grid_delta) << "\n";
    else
      os << "delta_scale = " << f(c.delta_scale) << "\n"
         << "delta_exponent = " << f(c.delta_exponent) << "\n";
  }
  os << "\n[estimator]\n"
     << "smoothness = " << f(e.s) << "\n"
     << "order = " << e.resolved_order() << "\n"
     << "depth = " << e.depth << "\n"
     << "j_rule = " << to_string(e.j_rule) << "\n"
     << "j_fixed = " << e.j_fixed << "\n"
     << "correction_order = " << e.correction_order << "\n"
     << "clip = " << (e.clip ? "true" : "false") << "\n\n";
  os << "[loss]\n"
     << "p = " << f(p.p) << "\n"
     << "grid_points = " << p.loss_points << "\n\n";
  os << "[bounds]\n"
     << "intensity_limit_delta = " << f(b.intensity_limit_delta) << "\n"
     << "count_n = " << b.count_n << "\n"
     << "count_runs = " << b.count_runs << "\n"
     << "count_delta = " << f(b.count_delta) << "\n"
     << "count_r = " << join(b.count_r) << "\n"
     << "split_n = " << b.split_n << "\n"
     << "split_runs = " << b.split_runs << "\n"
     << "split_delta = " << f(b.split_delta) << "\n"
     << "split_r = " << join(b.split_r) << "\n"
     << "tail_t = " << f(b.tail_t) << "\n"
     << "tail_x = " << join(b.tail_x) << "\n"
     << "tail_replicates = " << b.tail_replicates << "\n\n";
  os << "[diagnostics]\n"
     << "h1_deltas = " << join(d.h1_deltas) << "\n"
     << "h2_deltas = " << join(d.h2_deltas) << "\n"
     << "h2_replicates = " << d.h2_replicates << "\n"
     << "stable_k_max = " << d.stable_k_max << "\n"
     << "stable_replicates = " << d.stable_replicates << "\n\n";
  os << "[estimate]\n"
     << "samples = " << c.estimate.samples << "\n"
     << "delta = " << (c.estimate.delta ? f(*c.estimate.delta) : "none") << "\n"
     << "replicate = " << c.estimate.replicate << "\n"
     << "density_points = " << c.estimate.density_points << "\n";
  return os.str();
}

} // namespace levyest

#pragma once

// INI-style scenario files:
//
//   [grid]    nx, ny (even, >= 8), Lx, Ly (> 0)
//   [metric]  phi    = "<expr in x, y>"
//   [alpha]   expr   = "<expr in t>"; window = lo, hi; n_tau (>= 16)
//   [beta]    expr   = "<expr in x, y>"
//   [xi]      expr   = "<expr in x, y>"
//   [run]     oracle = true|false; tol_scale; poisson_tol   (all optional)
//
// One `key = value` per line; '#' or ';' start a comment line.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twistcmc/errors.hpp"
#include "twistcmc/expr.hpp"
#include "twistcmc/geometry.hpp"
#include "twistcmc/poisson.hpp"
#include "twistcmc/spacetime.hpp"
#include "twistcmc/theorem.hpp"

namespace twistcmc::cli {

struct ConfigValue {
  std::string text;
  int line = 0;
};

struct ScenarioConfig {
  std::string source = "<memory>";
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  ConfigValue phi;
  ConfigValue alpha;
  ConfigValue beta;
  ConfigValue xi;
  double tau_min = 0.0;
  double tau_max = 0.0;
  int n_tau = 0;
  bool oracle = false;
  double tol_scale = kDefaultTolScale;
  double poisson_tol = kDefaultPoissonTol;
};

/// Compiled inputs at one resolution.
struct ScenarioInputs {
  ConformalMetric2D gamma;
  AlphaProfile alpha;
  ScalarField beta;
  ScalarField xi;
  int n_tau;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  using Section = std::map<std::string, ConfigValue, std::less<>>;

  Reader(std::string source, std::string_view text) : source_(std::move(source)) {
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    std::string current;
    while (std::getline(in, raw)) {
      ++line;
      const std::string_view s = trim(raw);
      if (s.empty() || s.front() == '#' || s.front() == ';') continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail(line, "malformed section header");
        current = std::string(trim(s.substr(1, s.size() - 2)));
        if (sections_.count(current) != 0) fail(line, "duplicate section [" + current + "]");
        sections_[current];
        lines_[current] = line;
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) fail(line, "expected 'key = value'");
      if (current.empty()) fail(line, "key outside of any section");
      const std::string key(trim(s.substr(0, eq)));
      std::string value(trim(s.substr(eq + 1)));
      // Inline comments follow a closing quote or start at '#' / ';' in bare values.
      if (!value.empty() && value.front() == '"') {
        const auto close = value.find('"', 1);
        if (close == std::string::npos) fail(line, "unterminated string");
        const std::string_view rest = trim(std::string_view(value).substr(close + 1));
        if (!rest.empty() && rest.front() != '#' && rest.front() != ';') fail(line, "text after closing quote");
        value = value.substr(1, close - 1);
      } else if (const auto c = value.find_first_of("#;"); c != std::string::npos) {
        value = std::string(trim(std::string_view(value).substr(0, c)));
      }
      if (key.empty()) fail(line, "empty key");
      if (sections_[current].count(key) != 0) fail(line, "duplicate key '" + key + "'");
      sections_[current][key] = {value, line};
    }
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  const Section& section(const std::string& name) const {
    const auto it = sections_.find(name);
    if (it == sections_.end()) throw ConfigError(source_ + ": missing section [" + name + "]");
    return it->second;
  }
  [[nodiscard]] bool has_section(const std::string& name) const { return sections_.count(name) != 0; }

  const ConfigValue& get(const std::string& sec, const std::string& key) const {
    const Section& s = section(sec);
    const auto it = s.find(key);
    if (it == s.end()) {
      throw ConfigError(source_ + ":" + std::to_string(lines_.at(sec)) + ": missing key '" + key + "' in [" + sec +
                        "]");
    }
    return it->second;
  }

  [[nodiscard]] const ConfigValue* find(const std::string& sec, const std::string& key) const {
    if (!has_section(sec)) return nullptr;
    const Section& s = section(sec);
    const auto it = s.find(key);
    return it == s.end() ? nullptr : &it->second;
  }

  void reject_unknown(const std::map<std::string, std::vector<std::string>>& allowed) const {
    for (const auto& [name, keys] : sections_) {
      const auto a = allowed.find(name);
      if (a == allowed.end()) fail(lines_.at(name), "unknown section [" + name + "]");
      for (const auto& [key, value] : keys) {
        if (std::find(a->second.begin(), a->second.end(), key) == a->second.end()) {
          fail(value.line, "unknown key '" + key + "' in [" + name + "]");
        }
      }
    }
  }

  double number(const ConfigValue& v) const {
    double out = 0.0;
    const auto s = trim(v.text);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out)) {
      fail(v.line, "expected a number, got '" + v.text + "'");
    }
    return out;
  }

  int integer(const ConfigValue& v) const {
    int out = 0;
    const auto s = trim(v.text);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(v.line, "expected an integer, got '" + v.text + "'");
    return out;
  }

  bool boolean(const ConfigValue& v) const {
    if (v.text == "true" || v.text == "yes" || v.text == "1") return true;
    if (v.text == "false" || v.text == "no" || v.text == "0") return false;
    fail(v.line, "expected true or false, got '" + v.text + "'");
  }

  [[nodiscard]] const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
  std::map<std::string, Section, std::less<>> sections_;
  std::map<std::string, int, std::less<>> lines_;
};

inline expr::Expr compile_expr(const std::string& source, const ConfigValue& v, std::vector<std::string> vars,
                               const std::string& what) {
  try {
    return expr::parse(v.text, std::move(vars));
  } catch (const ParseError& e) {
    throw ConfigError(source + ":" + std::to_string(v.line) + ": " + what + ": " + e.what());
  }
}

inline const std::vector<std::string>& spatial_vars() {
  static const std::vector<std::string> v{"x", "y"};
  return v;
}

}  // namespace detail

inline ScenarioConfig parse_config(std::string_view text, const std::string& source = "<memory>") {
  const detail::Reader r(source, text);
  r.reject_unknown({{"grid", {"nx", "ny", "Lx", "Ly"}},
                    {"metric", {"phi"}},
                    {"alpha", {"expr", "window", "n_tau"}},
                    {"beta", {"expr"}},
                    {"xi", {"expr"}},
                    {"run", {"oracle", "tol_scale", "poisson_tol"}}});

  ScenarioConfig c;
  c.source = source;
  for (const char* sec : {"grid", "metric", "alpha", "beta", "xi"}) r.section(sec);

  c.nx = r.integer(r.get("grid", "nx"));
  c.ny = r.integer(r.get("grid", "ny"));
  c.lx = r.number(r.get("grid", "Lx"));
  c.ly = r.number(r.get("grid", "Ly"));
  try {
    (void)Grid2D(c.nx, c.ny, c.lx, c.ly);
  } catch (const Error& e) {
    r.fail(r.get("grid", "nx").line, e.what());
  }

  c.phi = r.get("metric", "phi");
  c.alpha = r.get("alpha", "expr");
  c.beta = r.get("beta", "expr");
  c.xi = r.get("xi", "expr");
  detail::compile_expr(source, c.phi, detail::spatial_vars(), "[metric] phi");
  detail::compile_expr(source, c.alpha, {"t"}, "[alpha] expr");
  detail::compile_expr(source, c.beta, detail::spatial_vars(), "[beta] expr");
  detail::compile_expr(source, c.xi, detail::spatial_vars(), "[xi] expr");

  const ConfigValue& window = r.get("alpha", "window");
  const auto comma = window.text.find(',');
  if (comma == std::string::npos) r.fail(window.line, "window must be 'lo, hi'");
  c.tau_min = r.number({std::string(detail::trim(std::string_view(window.text).substr(0, comma))), window.line});
  c.tau_max = r.number({std::string(detail::trim(std::string_view(window.text).substr(comma + 1))), window.line});
  if (!(c.tau_min < c.tau_max)) r.fail(window.line, "window must satisfy lo < hi");

  const ConfigValue& n_tau = r.get("alpha", "n_tau");
  c.n_tau = r.integer(n_tau);
  if (c.n_tau < kMinTauSamples) r.fail(n_tau.line, "n_tau must be >= " + std::to_string(kMinTauSamples));

  if (const auto* v = r.find("run", "oracle")) c.oracle = r.boolean(*v);
  if (const auto* v = r.find("run", "tol_scale")) {
    c.tol_scale = r.number(*v);
    if (!(c.tol_scale > 0.0)) r.fail(v->line, "tol_scale must be positive");
  }
  if (const auto* v = r.find("run", "poisson_tol")) {
    c.poisson_tol = r.number(*v);
    if (!(c.poisson_tol > 0.0) || c.poisson_tol > 1e-4) r.fail(v->line, "poisson_tol must lie in (0, 1e-4]");
  }
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

namespace detail {

inline ScalarField sample_expr(const ScenarioConfig& c, const Grid2D& grid, const ConfigValue& v,
                               const std::string& what) {
  const expr::Expr e = compile_expr(c.source, v, spatial_vars(), what);
  try {
    return ScalarField::sample(grid, [&](double x, double y) { return e({x, y}); });
  } catch (const Error& err) {
    throw ConfigError(c.source + ":" + std::to_string(v.line) + ": " + what + ": " + err.what());
  }
}

}  // namespace detail

/// Samples every expression at the given resolution; defaults to the configured one.
inline ScenarioInputs compile_inputs(const ScenarioConfig& c, std::optional<int> nx = {}, std::optional<int> ny = {},
                                     std::optional<int> n_tau = {}) {
  const Grid2D grid(nx.value_or(c.nx), ny.value_or(c.ny), c.lx, c.ly);
  ConformalMetric2D gamma(detail::sample_expr(c, grid, c.phi, "[metric] phi"));
  ScalarField beta = detail::sample_expr(c, grid, c.beta, "[beta] expr");
  ScalarField xi = detail::sample_expr(c, grid, c.xi, "[xi] expr");
  const expr::Expr alpha_expr = detail::compile_expr(c.source, c.alpha, {"t"}, "[alpha] expr");
  try {
    AlphaProfile alpha(alpha_expr, c.tau_min, c.tau_max);
    return {std::move(gamma), std::move(alpha), std::move(beta), std::move(xi), n_tau.value_or(c.n_tau)};
  } catch (const ScenarioError& e) {
    throw ConfigError(c.source + ":" + std::to_string(c.alpha.line) + ": [alpha] " + e.what());
  }
}

inline TwistScenario build_from_inputs(const ScenarioConfig& c, const ScenarioInputs& in) {
  return build_scenario(in.gamma, in.alpha, in.beta, in.xi, in.n_tau, c.poisson_tol);
}

}  // namespace twistcmc::cli

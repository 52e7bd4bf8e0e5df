#pragma once

// report.csv, summary text, sweep tables and field exports (CSV, plain PGM).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "twistcmc/geometry.hpp"
#include "twistcmc/theorem.hpp"

namespace twistcmc::cli {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

inline constexpr const char* kReportHeader = "tau,k_tilde_mean,k_tilde_max_dev,target,margin_min,s2_min,oracle_max_dev";

inline void write_report_csv(std::ostream& out, const ScenarioReport& rep) {
  out << kReportHeader << '\n';
  for (const ReportRow& r : rep.rows) {
    out << fmt(r.tau) << ',' << fmt(r.k_tilde_mean) << ',' << fmt(r.k_tilde_max_dev) << ',' << fmt(r.target) << ','
        << fmt(r.margin_min) << ',' << fmt(r.s2_min) << ',' << fmt(r.oracle_max_dev) << '\n';
  }
}

inline void write_summary(std::ostream& out, const ScenarioReport& rep) {
  out << "result: " << (rep.pass ? "PASS" : "FAIL") << '\n';
  out << "valid_window: [" << fmt(rep.valid_window.tau_lo) << ", " << fmt(rep.valid_window.tau_hi) << "] ("
      << rep.valid_window.count() << " samples)\n";
  out << "h: " << fmt(rep.h) << '\n';
  out << "tolerance: " << fmt(rep.tolerance) << '\n';
  out << "k_tilde_max_dev: " << fmt(rep.max_dev) << '\n';
  out << "oracle_max_dev: " << (rep.oracle_max_dev ? fmt(*rep.oracle_max_dev) : std::string("n/a")) << '\n';
  out << "margin_min: " << fmt(rep.margin_min) << '\n';
  out << "poisson_residual: " << fmt(rep.poisson_residual) << '\n';
  out << "shear_norm_max: " << fmt(rep.shear_norm_max) << '\n';
  out << "accel_norm_max: " << fmt(rep.accel_norm_max) << '\n';
  out << "theta_numeric_max_dev: " << fmt(rep.theta_max_dev) << '\n';

  std::size_t negative = 0;
  for (const auto& r : rep.rows) negative += r.margin_min <= 0.0 ? 1 : 0;
  if (negative > 0) out << "spacelike_violations: " << negative << " row(s) with margin_min <= 0\n";

  // Sign conventions: k~ is -div(X) with X = grad(tau) (past-directed); k = -theta
  // is the untilted slice curvature with respect to V = d/dt. For f == 0 they differ by sign.
  out << "\n# tau, k_tilde_mean, k_untilted_mean, unit_normal_div_mean, unit_normal_div_spread\n";
  for (const auto& r : rep.rows) {
    out << fmt(r.tau) << ", " << fmt(r.k_tilde_mean) << ", " << fmt(r.k_untilted_mean) << ", "
        << fmt(r.unit_normal_div_mean) << ", " << fmt(r.unit_normal_div_spread) << '\n';
  }
}

/// Header `x,y,value`, rows in node order (x fastest).
inline void write_field_csv(std::ostream& out, const ScalarField& f) {
  const Grid2D& g = f.grid();
  out << "x,y,value\n";
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) out << fmt(g.x(i)) << ',' << fmt(g.y(j)) << ',' << fmt(f(i, j)) << '\n';
  }
}

/// Plain (P2) PGM, values mapped linearly onto 0..65535.
inline void write_field_pgm(std::ostream& out, const ScalarField& f) {
  const Grid2D& g = f.grid();
  const double lo = f.min();
  const double hi = f.max();
  out << "P2\n# min=" << fmt(lo) << " max=" << fmt(hi) << '\n';
  out << g.nx() << ' ' << g.ny() << "\n65535\n";
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double t = hi > lo ? (f(i, j) - lo) / (hi - lo) : 0.0;
      const long v = std::clamp(std::lround(t * 65535.0), 0L, 65535L);
      out << v << ((i + 1) % 10 == 0 || i + 1 == g.nx() ? '\n' : ' ');
    }
  }
}

}  // namespace twistcmc::cli

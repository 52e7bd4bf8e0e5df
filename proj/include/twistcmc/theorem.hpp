#pragma once

// End-to-end check that tau = t + f(x) is a CMC time function: build the
// scenario from (gamma, alpha, beta, xi), compute where it is valid, and
// measure how far the tilted slices are from constant mean curvature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "twistcmc/errors.hpp"
#include "twistcmc/geometry.hpp"
#include "twistcmc/poisson.hpp"
#include "twistcmc/spacetime.hpp"

namespace twistcmc {

inline constexpr double kDefaultTolScale = 20.0;

/// Solves Delta_gamma f = beta (mean-zero gauge) and assembles the scenario.
/// beta == 0 skips the solve and uses f == 0.
inline TwistScenario build_scenario(const ConformalMetric2D& gamma, const AlphaProfile& alpha,
                                    const ScalarField& beta, const ScalarField& xi, int n_tau,
                                    double poisson_tol = kDefaultPoissonTol) {
  ScalarField f = beta.is_zero() ? ScalarField::constant(beta.grid(), 0.0) : solve_poisson(beta, gamma, poisson_tol);
  return TwistScenario(gamma, alpha, beta, xi, std::move(f), n_tau);
}

struct MarginReport {
  std::vector<ScalarField> margin;  ///< per tau sample: s^2 - ||df||^gamma
  double min = std::numeric_limits<double>::infinity();
  [[nodiscard]] bool pass() const noexcept { return min > 0.0; }
};

inline ScalarField spacelike_margin(const TwistScenario& sc, double tau) {
  auto s2 = s_squared_slice(sc, tau);
  for (std::size_t k = 0; k < s2.size(); ++k) s2[k] -= sc.df_norm_sq_gamma()[k];
  return ScalarField(sc.grid(), std::move(s2));
}

inline MarginReport check_spacelike_margin(const TwistScenario& sc) {
  MarginReport rep;
  for (int k = 0; k < sc.n_tau(); ++k) {
    rep.margin.push_back(spacelike_margin(sc, sc.tau(k)));
    rep.min = std::min(rep.min, rep.margin.back().min());
  }
  return rep;
}

/// Inclusive range of tau-lattice indices.
struct ValidWindow {
  int first = 0;
  int last = -1;
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  [[nodiscard]] bool empty() const noexcept { return last < first; }
  [[nodiscard]] int count() const noexcept { return empty() ? 0 : last - first + 1; }
  [[nodiscard]] bool contains(int k) const noexcept { return k >= first && k <= last; }
};

/// Largest contiguous run of tau samples with min_x s^2 > 0 and alpha' > 0.
inline ValidWindow check_positivity_window(const TwistScenario& sc) {
  ValidWindow best;
  int run_start = -1;
  auto close_run = [&](int end) {
    if (run_start >= 0 && end - run_start > best.last - best.first) {
      best.first = run_start;
      best.last = end;
    }
    run_start = -1;
  };
  for (int k = 0; k < sc.n_tau(); ++k) {
    bool ok = false;
    try {
      const auto a = sc.alpha().at(sc.tau(k));
      if (a.dot > 0.0) {
        const auto s2 = s_squared_slice(sc, sc.tau(k));
        ok = *std::min_element(s2.begin(), s2.end()) > 0.0;
      }
    } catch (const DomainError&) {
      ok = false;
    }
    if (ok && run_start < 0) run_start = k;
    if (!ok) close_run(k - 1);
  }
  close_run(sc.n_tau() - 1);
  if (!best.empty()) {
    best.tau_lo = sc.tau(best.first);
    best.tau_hi = sc.tau(best.last);
  }
  return best;
}

struct VerifyOptions {
  bool run_oracle = false;
  double tol_scale = kDefaultTolScale;
};

struct ReportRow {
  double tau = 0.0;
  double k_tilde_mean = 0.0;
  double k_tilde_max_dev = 0.0;  ///< max_x |k~ + alpha''/alpha'|
  double target = 0.0;           ///< -alpha''/alpha'
  double margin_min = 0.0;
  double s2_min = 0.0;
  double k_untilted_mean = 0.0;  ///< mean of k = -theta on the same slice
  std::optional<double> oracle_max_dev;
  std::optional<double> unit_normal_div_mean;
  std::optional<double> unit_normal_div_spread;  ///< max - min of div(X/|X|)
};

struct ScenarioReport {
  std::vector<ReportRow> rows;
  ValidWindow valid_window;
  double h = 0.0;  ///< max(hx, hy, dtau)
  double tolerance = 0.0;
  double max_dev = 0.0;
  std::optional<double> oracle_max_dev;
  double shear_norm_max = 0.0;
  double accel_norm_max = 0.0;
  double theta_max_dev = 0.0;
  double poisson_residual = 0.0;
  double margin_min = std::numeric_limits<double>::infinity();
  bool pass = false;
};

inline double resolution_scale(const TwistScenario& sc) {
  return std::max({sc.grid().hx(), sc.grid().hy(), sc.tau_step()});
}

inline ScenarioReport verify_cmc(const TwistScenario& sc, const VerifyOptions& opts = {}) {
  ScenarioReport rep;
  rep.valid_window = check_positivity_window(sc);
  if (rep.valid_window.empty()) throw ScenarioError("verify_cmc: s^2 is not positive on any tau sample");
  rep.h = resolution_scale(sc);
  rep.tolerance = opts.tol_scale * rep.h * rep.h;
  rep.poisson_residual = sc.poisson_residual_value();

  const ValidWindow& w = rep.valid_window;
  const std::size_t n = sc.grid().size();
  rep.pass = true;
  for (int k = w.first; k <= w.last; ++k) {
    const double tau = sc.tau(k);
    const double rate = sc.alpha().ddot_over_dot(tau);
    const TiltedCurvature tc = tilted_mean_curvature_closed(sc, tau);
    const ScalarField margin = spacelike_margin(sc, tau);
    const auto s2 = s_squared_slice(sc, tau);

    ReportRow row;
    row.tau = tau;
    row.target = -rate;
    row.k_tilde_mean = tc.k_tilde.mean();
    double k_untilted = 0.0;
    for (std::size_t node = 0; node < n; ++node) {
      row.k_tilde_max_dev = std::max(row.k_tilde_max_dev, std::abs(tc.k_tilde[node] + rate));
      k_untilted += slice_mean_curvature_k(sc, tau, node);
    }
    row.k_untilted_mean = k_untilted / static_cast<double>(n);
    row.margin_min = margin.min();
    row.s2_min = *std::min_element(s2.begin(), s2.end());

    if (opts.run_oracle && k > w.first && k < w.last) {
      const OracleSlice os = oracle_divergence_slice(sc, k);
      double dev = 0.0;
      for (std::size_t node = 0; node < n; ++node) {
        dev = std::max(dev, std::abs(tc.div_x[node] - os.div_x[node]));
      }
      row.oracle_max_dev = dev;
      rep.oracle_max_dev = std::max(rep.oracle_max_dev.value_or(0.0), dev);
      if (os.unit_normal_div) {
        row.unit_normal_div_mean = os.unit_normal_div->mean();
        row.unit_normal_div_spread = os.unit_normal_div->max() - os.unit_normal_div->min();
      }
    }

    rep.max_dev = std::max(rep.max_dev, row.k_tilde_max_dev);
    rep.margin_min = std::min(rep.margin_min, row.margin_min);
    if (!(row.margin_min > 0.0) || !(row.s2_min > 0.0) || !(row.k_tilde_max_dev <= rep.tolerance)) {
      rep.pass = false;
    }
    rep.rows.push_back(row);
  }

  const KinematicsReport kin = kinematics_of_V(sc, w.first, w.last);
  rep.shear_norm_max = kin.shear_norm_max;
  rep.accel_norm_max = kin.accel_norm_max;
  rep.theta_max_dev = kin.theta_max_dev;
  return rep;
}

}  // namespace twistcmc

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/generators.hpp"
#include "support/scenarios.hpp"
#include "twistcmc/cli/commands.hpp"

#ifndef TWISTCMC_CONFIG_DIR
#error "TWISTCMC_CONFIG_DIR must point at the configs/ directory"
#endif

namespace {

using namespace twistcmc;
using namespace twistcmc::testing;

// Tolerances, pinned.
constexpr double kCurvatureTolScale = 20.0;   // max_dev <= 20 h^2
constexpr double kOracleTolScale = 50.0;      // <= 50 (h^2 + dtau^2)
constexpr double kOrderTarget = 2.0;
constexpr double kOrderSlack = 0.2;
constexpr double kWarpedExact = 1e-12;
constexpr double kPoissonResidualMax = 1e-10;
constexpr double kMarginAtZero = 0.9;         // +- 2 h^2
constexpr double kKinematicsTolScale = 20.0;  // <= 20 h^2, theta <= 20 dtau^2
constexpr double kRuntimeBudgetSeconds = 30.0;
constexpr double kCovarianceRel = 1e-13;
constexpr double kDivergenceRel = 1e-11;
constexpr double kMetricIdentity = 1e-12;
constexpr double kFuzzRel = 1e-6;
constexpr int kFuzzCases = 1000;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

bool order_ok(double order) { return std::abs(order - kOrderTarget) <= kOrderSlack; }

struct Level {
  int n = 0;
  cli::SweepLevel result;
  double dtau = 0.0;
  double hx = 0.0;
};

std::vector<Level> cos_levels;
double cos_seconds = 0.0;

void run_cos_sweep() {
  const auto start = std::chrono::steady_clock::now();
  for (int n : {32, 64, 128}) {
    const auto sc = cos_scenario(n, n);
    VerifyOptions opts;
    opts.run_oracle = true;
    opts.tol_scale = kCurvatureTolScale;
    const auto rep = verify_cmc(sc, opts);
    Level l;
    l.n = n;
    l.result = {n, n, n, rep.h, rep.max_dev, rep.oracle_max_dev.value_or(0.0), rep.pass};
    l.dtau = sc.tau_step();
    l.hx = sc.grid().hx();
    cos_levels.push_back(l);
  }
  cos_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome ac1_theorem_reproduction() {
  Outcome o;
  const Level& mid = cos_levels[1];
  const double h = mid.result.h;
  o.detail << "64x64/64: max_dev=" << num(mid.result.max_dev) << " (tol " << num(kCurvatureTolScale * h * h) << ")";
  o.require(mid.result.max_dev <= kCurvatureTolScale * h * h, "max_dev <= 20 h^2 at 64");
  for (std::size_t l = 1; l < cos_levels.size(); ++l) {
    const double order = std::log2(cos_levels[l - 1].result.max_dev / cos_levels[l].result.max_dev);
    o.detail << "; order " << cos_levels[l - 1].n << "->" << cos_levels[l].n << "=" << num(order);
    o.require(order_ok(order), "max_dev order 2.0 +- 0.2");
  }
  o.detail << "; runtime " << num(cos_seconds) << " s";
  o.require(cos_seconds < kRuntimeBudgetSeconds, "runtime < 30 s");
  return o;
}

Outcome ac2_oracle_equivalence() {
  Outcome o;
  for (const Level& l : cos_levels) {
    const double tol = kOracleTolScale * (l.hx * l.hx + l.dtau * l.dtau);
    o.detail << (l.n == 32 ? "" : "; ") << l.n << ": " << num(l.result.oracle_max_dev) << " (tol " << num(tol) << ")";
    o.require(l.result.oracle_max_dev <= tol, "oracle deviation within 50 (h^2 + dtau^2)");
  }
  const double order = std::log2(cos_levels[1].result.oracle_max_dev / cos_levels[2].result.oracle_max_dev);
  o.detail << "; order 64->128=" << num(order);
  o.require(order_ok(order), "oracle order 2.0 +- 0.2 on the finest pair");
  return o;
}

Outcome ac3_warped_exactness() {
  Outcome o;
  for (const char* phi : {"0", "0.2*cos(x+y)"}) {
    for (double lambda : {1.0, 2.0}) {
      const auto rep = verify_cmc(warped_scenario(32, 32, lambda, phi));
      o.detail << (o.detail.str().empty() ? "" : "; ") << "lambda=" << lambda << " phi=" << phi << ": "
               << num(rep.max_dev);
      o.require(rep.max_dev < kWarpedExact && rep.pass, "k~ == -lambda to 1e-12");
      for (const auto& row : rep.rows) o.require(std::abs(row.k_tilde_mean + lambda) < kWarpedExact, "mean k~");
    }
  }
  return o;
}

Outcome ac4_poisson_solver() {
  Outcome o;
  for (const char* phi_src : {"0", "0.2*cos(x+y)"}) {
    const auto phi_expr = expr::parse(phi_src, {"x", "y"});
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
      const Grid2D g = torus(n);
      const ConformalMetric2D gamma(ScalarField::sample(g, [&](double x, double y) { return phi_expr({x, y}); }));
      const auto exact = ScalarField::sample(g, [](double x, double y) { return 0.3 * std::cos(x) + 0.2 * std::sin(2 * y); });
      // Continuum Delta_gamma f* = exp(-2 phi) (-0.3 cos x - 0.8 sin 2y).
      const auto beta = ScalarField::sample(g, [&](double x, double y) {
        return std::exp(-2.0 * phi_expr({x, y})) * (-0.3 * std::cos(x) - 0.8 * std::sin(2 * y));
      });
      const auto r = solve_poisson_detailed(beta, gamma);
      const auto gauged = exact + (-exact.mean());
      err.push_back((r.solution - gauged).norm2() / gauged.norm2());
      o.require(r.residual <= kPoissonResidualMax, "solver residual <= 1e-10");
    }
    o.detail << (o.detail.str().empty() ? "" : "; ") << "phi=" << phi_src << ": err " << num(err[0]) << "," << num(err[1])
             << "," << num(err[2]);
    for (std::size_t l = 1; l < err.size(); ++l) {
      const double order = std::log2(err[l - 1] / err[l]);
      o.detail << " order " << num(order);
      o.require(order_ok(order), "L2 error order 2.0 +- 0.2");
    }
  }
  return o;
}

Outcome ac5_spacelike_gate() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path out = fs::temp_directory_path() / "twistcmc_acceptance_violation";
  fs::remove_all(out);
  std::ostringstream log, err;
  const std::string cfg = std::string(TWISTCMC_CONFIG_DIR) + "/spacelike_violation.ini";
  const int code = cli::cmd_verify({cfg, false, out.string()}, log, err);
  o.detail << "violation exit=" << code;
  o.require(code == cli::kExitFail, "exit code 2");

  int negative_rows = 0;
  std::ifstream report(out / "report.csv");
  std::string line;
  std::getline(report, line);
  while (std::getline(report, line)) {
    // margin_min is the fifth column.
    std::istringstream cells(line);
    std::string cell;
    for (int c = 0; c < 5; ++c) std::getline(cells, cell, ',');
    if (std::stod(cell) < 0.0) ++negative_rows;
  }
  o.detail << ", rows with margin_min<0: " << negative_rows;
  o.require(negative_rows >= 1, "at least one row with margin_min < 0");

  const auto c = cos_scenario(64, 64);
  const double h = resolution_scale(c);
  const double m0 = spacelike_margin(c, 0.0).min();
  o.detail << "; cos margin_min(tau=0)=" << num(m0);
  o.require(std::abs(m0 - kMarginAtZero) <= 2 * h * h, "cos-scenario margin 0.9 +- 2 h^2 at tau = 0");
  return o;
}

Outcome ac6_kinematics() {
  Outcome o;
  std::vector<std::pair<std::string, TwistScenario>> scenarios;
  scenarios.emplace_back("cos", cos_scenario(64, 64));
  scenarios.emplace_back("warped1", warped_scenario(32, 32, 1.0, "0.2*cos(x+y)"));
  scenarios.emplace_back("warped2", warped_scenario(32, 32, 2.0));
  scenarios.emplace_back("minkowski", minkowski_scenario(32));
  scenarios.emplace_back("violating", violating_scenario(32));
  for (const auto& [name, sc] : scenarios) {
    const double h = resolution_scale(sc);
    const double dt = sc.tau_step();
    const auto k = kinematics_of_V(sc);
    o.detail << (o.detail.str().empty() ? "" : "; ") << name << ": shear " << num(k.shear_norm_max) << " accel "
             << num(k.accel_norm_max) << " theta " << num(k.theta_max_dev);
    o.require(k.shear_norm_max <= kKinematicsTolScale * h * h, name + " shear");
    o.require(k.accel_norm_max <= kKinematicsTolScale * h * h, name + " acceleration");
    o.require(k.theta_max_dev <= kKinematicsTolScale * dt * dt, name + " theta");
  }
  return o;
}

Outcome ac7_invariants() {
  Outcome o;
  std::mt19937_64 rng(2024);

  // Conformal covariance: Delta_{exp(2 psi) gamma} = exp(-2 psi) Delta_gamma.
  double cov = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Grid2D g(16 + 2 * (trial % 5), 20, 3.0 + trial, 5.0);
    const auto f = random_field(g, rng, 1.0);
    const auto phi = random_field(g, rng, 0.3);
    const auto psi = random_field(g, rng, 0.3);
    const auto lhs = laplace_beltrami(f, ConformalMetric2D(phi + psi));
    const auto base = laplace_beltrami(f, ConformalMetric2D(phi));
    const double scale = std::max(lhs.max_abs(), 1e-300);
    for (std::size_t k = 0; k < g.size(); ++k) {
      cov = std::max(cov, std::abs(lhs[k] - std::exp(-2.0 * psi[k]) * base[k]) / scale);
    }
  }
  o.detail << "covariance " << num(cov);
  o.require(cov <= kCovarianceRel, "conformal covariance");

  double div = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Grid2D g(32, 16 + 2 * trial, 6.0, 2.0 + trial);
    const auto f = random_field(g, rng, 2.0);
    const ConformalMetric2D gamma(random_field(g, rng, 0.4));
    const auto lap = laplace_beltrami(f, gamma);
    div = std::max(div, std::abs(integrate_volume(lap, gamma)) / (lap.max_abs() * gamma.area()));
  }
  o.detail << "; divergence " << num(div);
  o.require(div <= kDivergenceRel, "discrete divergence theorem");

  // Gauge shift f -> f + c leaves k~ bit-identical, for arbitrary c.
  int gauge_mismatch = 0;
  int gauge_slices = 0;
  double gauge_dev = 0.0;
  const auto base = cos_scenario(32, 16);
  std::uniform_real_distribution<double> shift(-3.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const TwistScenario shifted(base.gamma(), base.alpha(), base.beta(), base.xi(), base.f() + shift(rng),
                                base.n_tau());
    for (int k = 0; k < base.n_tau(); ++k) {
      const auto a = tilted_mean_curvature_closed(base, base.tau(k)).k_tilde;
      const auto b = tilted_mean_curvature_closed(shifted, base.tau(k)).k_tilde;
      ++gauge_slices;
      if (!std::ranges::equal(a.values(), b.values())) ++gauge_mismatch;
      gauge_dev = std::max(gauge_dev, (a - b).max_abs());
    }
  }
  // Diagnostic only: shifts for which f + c is exactly representable.
  int exact_mismatch = 0;
  {
    std::vector<double> q(base.f().values().begin(), base.f().values().end());
    for (double& v : q) v = std::ldexp(std::round(std::ldexp(v, 30)), -30);
    const TwistScenario dyadic(base.gamma(), base.alpha(), base.beta(), base.xi(), ScalarField(base.grid(), q),
                               base.n_tau());
    for (int trial = 1; trial <= 10; ++trial) {
      const TwistScenario shifted(base.gamma(), base.alpha(), base.beta(), base.xi(),
                                  dyadic.f() + std::ldexp(trial * 301 - 1500, -9), base.n_tau());
      for (int k = 0; k < base.n_tau(); ++k) {
        if (!std::ranges::equal(tilted_mean_curvature_closed(dyadic, base.tau(k)).k_tilde.values(),
                                tilted_mean_curvature_closed(shifted, base.tau(k)).k_tilde.values())) {
          ++exact_mismatch;
        }
      }
    }
  }
  o.detail << "; gauge: " << gauge_slices - gauge_mismatch << "/" << gauge_slices
           << " slices bit-identical for random c (max |dk~| " << num(gauge_dev) << "), exact shifts "
           << (exact_mismatch == 0 ? "bit-identical" : "differ");
  o.require(gauge_mismatch == 0, "gauge-shift invariance (bit-identical)");

  // g g^-1 = I and g(X, X) = ||df||^h - 1 on the cos-scenario.
  double ident = 0.0;
  double normal = 0.0;
  const auto c = cos_scenario(32, 16);
  for (int k = 0; k < c.n_tau(); ++k) {
    const auto g = assemble_tilted_metric(c, c.tau(k));
    const auto inv = inverse_metric_closed(c, c.tau(k));
    const auto s2 = s_squared_slice(c, c.tau(k));
    for (std::size_t node = 0; node < g.size(); ++node) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          double p = 0.0;
          for (int m = 0; m < 3; ++m) p += g[node](a, m) * inv[node](m, b);
          ident = std::max(ident, std::abs(p - (a == b ? 1.0 : 0.0)));
        }
      }
      const double closed = c.df_norm_sq_gamma()[node] / s2[node] - 1.0;
      normal = std::max(normal, std::abs(normal_norm_sq_contracted(g[node], inv[node]) - closed));
    }
  }
  o.detail << "; g*ginv " << num(ident) << "; g(X,X) " << num(normal);
  o.require(ident <= kMetricIdentity, "g g^-1 = I");
  o.require(normal <= kMetricIdentity, "g(X, X) two-way");

  // Derivative vs central difference on random expressions.
  ExprGenerator gen(20240611);
  const std::vector<std::string> vars{"x", "y", "t"};
  int checked = 0;
  int bad = 0;
  while (checked < kFuzzCases) {
    const expr::Expr e = expr::parse(gen(3), vars);
    std::vector<double> p{gen.coordinate(), gen.coordinate(), gen.coordinate()};
    const int v = gen.index(3);
    const expr::Expr de = expr::differentiate(e, vars[v]);
    double exact = 0.0;
    double fd = 0.0;
    try {
      exact = de(p);
      const double step = 1e-5;
      auto q = p;
      q[v] = p[v] + step;
      const double up = e(q);
      q[v] = p[v] - step;
      fd = (up - e(q)) / (2 * step);
    } catch (const DomainError&) {
      continue;
    }
    if (!std::isfinite(exact) || std::abs(exact) > 1e3 || std::abs(e(p)) > 1e3) continue;
    if (std::abs(exact - fd) > kFuzzRel * (1.0 + std::abs(exact))) ++bad;
    ++checked;
  }
  o.detail << "; fuzz " << checked - bad << "/" << checked;
  o.require(bad == 0, "derivative fuzz");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 theorem reproduction (cos-scenario)", ac1_theorem_reproduction},
      {"AC2 oracle equivalence", ac2_oracle_equivalence},
      {"AC3 warped-product exactness", ac3_warped_exactness},
      {"AC4 Poisson solver", ac4_poisson_solver},
      {"AC5 spacelike gate", ac5_spacelike_gate},
      {"AC6 kinematic identities", ac6_kinematics},
      {"AC7 invariant suite", ac7_invariants},
  };
  run_cos_sweep();
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

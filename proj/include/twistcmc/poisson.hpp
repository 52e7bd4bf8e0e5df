#pragma once

// Delta_gamma f = beta on the closed torus, gauge-fixed to mean(f) = 0.
//
// In two dimensions the problem is equivalent to the flat problem
// Delta_flat f = exp(2 phi) beta, which is solved by conjugate gradients on
// -Delta_flat (symmetric positive semidefinite; kernel = constants) with the
// residual projected onto mean-zero fields after every update.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <vector>

#include "twistcmc/errors.hpp"
#include "twistcmc/geometry.hpp"

namespace twistcmc {

inline constexpr double kDefaultPoissonTol = 1e-10;
inline constexpr double kSolvabilityTol = 1e-8;

struct PoissonOptions {
  double tol = kDefaultPoissonTol;
  std::optional<ScalarField> initial_guess;
  std::optional<int> max_iterations;  ///< default 10 * (nx * ny)
};

struct PoissonResult {
  ScalarField solution;
  int iterations = 0;
  double residual = 0.0;  ///< poisson_residual(solution, beta, gamma)
};

/// ||Delta_gamma f - beta||_2 / max(||beta||_2, 1e-300) over nodes.
inline double poisson_residual(const ScalarField& f, const ScalarField& beta, const ConformalMetric2D& gamma) {
  ScalarField::require_same_grid(f.grid(), beta.grid());
  const ScalarField lap = laplace_beltrami(f, gamma);
  double r2 = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double d = lap[k] - beta[k];
    r2 += d * d;
  }
  return std::sqrt(r2) / std::max(beta.norm2(), 1e-300);
}

namespace detail {

inline void project_mean_zero(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// out = -Delta_flat(v)
inline void apply_neg_laplacian(const Grid2D& g, const std::vector<double>& v, std::vector<double>& out) {
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  const int nx = g.nx();
  const int ny = g.ny();
  for (int j = 0; j < ny; ++j) {
    const int jm = j == 0 ? ny - 1 : j - 1;
    const int jp = j == ny - 1 ? 0 : j + 1;
    for (int i = 0; i < nx; ++i) {
      const int im = i == 0 ? nx - 1 : i - 1;
      const int ip = i == nx - 1 ? 0 : i + 1;
      const double c = v[static_cast<std::size_t>(j) * nx + i];
      const double lx = (v[static_cast<std::size_t>(j) * nx + ip] - c) - (c - v[static_cast<std::size_t>(j) * nx + im]);
      const double ly = (v[static_cast<std::size_t>(jp) * nx + i] - c) - (c - v[static_cast<std::size_t>(jm) * nx + i]);
      out[static_cast<std::size_t>(j) * nx + i] = -(lx * ihx2 + ly * ihy2);
    }
  }
}

}  // namespace detail

inline PoissonResult solve_poisson_detailed(const ScalarField& beta, const ConformalMetric2D& gamma,
                                            const PoissonOptions& opts = {}) {
  ScalarField::require_same_grid(beta.grid(), gamma.grid());
  if (!(opts.tol > 0.0) || opts.tol > 1e-4) throw Error("solve_poisson: tol must lie in (0, 1e-4]");
  const Grid2D& g = beta.grid();

  const double total = integrate_volume(beta, gamma);
  const double bound = kSolvabilityTol * beta.max_abs() * gamma.area();
  if (std::abs(total) > bound) {
    std::ostringstream msg;
    msg << "solve_poisson: right-hand side has nonzero volume integral " << total
        << " (allowed " << bound << "); Delta_gamma f = beta is unsolvable on a closed surface";
    throw SolvabilityError(msg.str());
  }

  const std::size_t n = g.size();
  const double beta_norm = beta.norm2();
  if (beta_norm == 0.0) return {ScalarField::constant(g, 0.0), 0, 0.0};

  // -Delta_flat x = c, c = -exp(2 phi) beta projected onto the range.
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = -gamma.factor(k) * beta[k];
  detail::project_mean_zero(c);

  std::vector<double> x(n, 0.0);
  if (opts.initial_guess) {
    ScalarField::require_same_grid(opts.initial_guess->grid(), g);
    x.assign(opts.initial_guess->values().begin(), opts.initial_guess->values().end());
    detail::project_mean_zero(x);
  }

  // Stopping test on the metric residual: exp(-2 phi) r is Delta_gamma x - beta up to sign.
  const double target = opts.tol * beta_norm;
  auto weighted_norm = [&](const std::vector<double>& r) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = gamma.inverse_factor(k) * r[k];
      s += w * w;
    }
    return std::sqrt(s);
  };

  std::vector<double> r(n);
  std::vector<double> p(n);
  std::vector<double> ap(n);
  auto true_residual = [&] {
    detail::apply_neg_laplacian(g, x, ap);
    for (std::size_t k = 0; k < n; ++k) r[k] = c[k] - ap[k];
    detail::project_mean_zero(r);
  };

  const int cap = opts.max_iterations.value_or(10 * static_cast<int>(n));
  int iter = 0;
  true_residual();
  double rnorm = weighted_norm(r);
  while (rnorm > target) {
    // (Re)start from the true residual; recurrence drift is corrected on every restart.
    p = r;
    double rr = detail::dot(r, r);
    bool restart = false;
    while (!restart) {
      if (iter >= cap) {
        const double rel = weighted_norm(r) / beta_norm;
        std::ostringstream msg;
        msg << "solve_poisson: no convergence after " << iter << " iterations, relative residual " << rel;
        throw ConvergenceError(msg.str(), rel);
      }
      ++iter;
      detail::apply_neg_laplacian(g, p, ap);
      const double pap = detail::dot(p, ap);
      if (!(pap > 0.0)) {
        restart = true;
        break;
      }
      const double alpha = rr / pap;
      for (std::size_t k = 0; k < n; ++k) {
        x[k] += alpha * p[k];
        r[k] -= alpha * ap[k];
      }
      detail::project_mean_zero(r);
      if (weighted_norm(r) <= target) restart = true;
      const double rr_new = detail::dot(r, r);
      const double b = rr_new / rr;
      rr = rr_new;
      for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + b * p[k];
    }
    true_residual();
    rnorm = weighted_norm(r);
  }

  detail::project_mean_zero(x);
  ScalarField f(g, std::move(x));
  const double res = poisson_residual(f, beta, gamma);
  return {std::move(f), iter, res};
}

inline ScalarField solve_poisson(const ScalarField& beta, const ConformalMetric2D& gamma,
                                 double tol = kDefaultPoissonTol) {
  PoissonOptions opts;
  opts.tol = tol;
  return solve_poisson_detailed(beta, gamma, opts).solution;
}

}  // namespace twistcmc

#pragma once

// Twisted product g = -dt^2 + s^2 gamma over the torus, written in the tilted
// time tau = t + f(x) where s^2(tau, x) = (alpha(tau) beta(x) + xi(x)) / alpha'(tau).
//
// Two independent routes to the mean curvature of the tau = const slices live here:
//  * tilted_mean_curvature_closed: the closed form Delta_h f - 2 s'/s, with exact
//    symbolic alpha derivatives and the 5-point Laplacian;
//  * oracle_divergence_X: the full 3-metric assembled on a (tau, x, y) lattice,
//    inverted numerically per sample and differenced in all three coordinates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "twistcmc/errors.hpp"
#include "twistcmc/expr.hpp"
#include "twistcmc/geometry.hpp"
#include "twistcmc/poisson.hpp"

namespace twistcmc {

inline constexpr int kAlphaCheckSamples = 1000;
inline constexpr int kMinTauSamples = 16;
inline constexpr double kScenarioPoissonResidual = 1e-6;

/// alpha(tau) with exact first and second derivatives, positive with positive
/// slope on its window.
class AlphaProfile {
 public:
  struct Values {
    double alpha;
    double dot;
    double ddot;
  };

  AlphaProfile(expr::Expr alpha, double tau_min, double tau_max, int check_samples = kAlphaCheckSamples)
      : alpha_(std::move(alpha)),
        dot_(derivative_of(alpha_)),
        ddot_(derivative_of(dot_)),
        tau_min_(tau_min),
        tau_max_(tau_max) {
    if (!(tau_min < tau_max) || !std::isfinite(tau_min) || !std::isfinite(tau_max)) {
      throw ScenarioError("AlphaProfile: window must satisfy tau_min < tau_max");
    }
    const int n = std::max(check_samples, kAlphaCheckSamples);
    for (int i = 0; i < n; ++i) {
      const double tau = tau_min + (tau_max - tau_min) * i / (n - 1);
      Values v{};
      try {
        v = at(tau);
      } catch (const DomainError& e) {
        throw ScenarioError("AlphaProfile: alpha undefined at tau = " + std::to_string(tau) + ": " + e.what());
      }
      if (!(v.alpha > 0.0) || !std::isfinite(v.alpha)) {
        throw ScenarioError("AlphaProfile: alpha must be positive on the window (alpha(" + std::to_string(tau) +
                            ") = " + std::to_string(v.alpha) + ")");
      }
      if (!(v.dot > 0.0) || !std::isfinite(v.dot)) {
        throw ScenarioError("AlphaProfile: alpha' must be positive on the window (alpha'(" + std::to_string(tau) +
                            ") = " + std::to_string(v.dot) + ")");
      }
    }
  }

  [[nodiscard]] Values at(double tau) const { return {alpha_({tau}), dot_({tau}), ddot_({tau})}; }
  /// alpha''/alpha', the slice-constant value of -k~ predicted by the theorem.
  [[nodiscard]] double ddot_over_dot(double tau) const { return ddot_({tau}) / dot_({tau}); }

  [[nodiscard]] const expr::Expr& alpha() const noexcept { return alpha_; }
  [[nodiscard]] const expr::Expr& alpha_dot() const noexcept { return dot_; }
  [[nodiscard]] const expr::Expr& alpha_ddot() const noexcept { return ddot_; }
  [[nodiscard]] double tau_min() const noexcept { return tau_min_; }
  [[nodiscard]] double tau_max() const noexcept { return tau_max_; }

 private:
  static expr::Expr derivative_of(const expr::Expr& e) {
    if (e.variables().size() != 1) {
      throw ScenarioError("AlphaProfile: alpha must be an expression in exactly one variable");
    }
    return e.derivative(e.variables().front());
  }

  expr::Expr alpha_;
  expr::Expr dot_;
  expr::Expr ddot_;
  double tau_min_;
  double tau_max_;
};

class TwistScenario {
 public:
  TwistScenario(ConformalMetric2D gamma, AlphaProfile alpha, ScalarField beta, ScalarField xi, ScalarField f,
                int n_tau)
      : gamma_(std::move(gamma)),
        alpha_(std::move(alpha)),
        beta_(std::move(beta)),
        xi_(std::move(xi)),
        f_(std::move(f)),
        n_tau_(n_tau),
        df_(gradient(f_)),
        df_norm_sq_(grad_norm_sq_gamma(f_, gamma_)),
        lap_f_(laplace_beltrami(f_, gamma_)) {
    ScalarField::require_same_grid(gamma_.grid(), beta_.grid());
    ScalarField::require_same_grid(gamma_.grid(), xi_.grid());
    ScalarField::require_same_grid(gamma_.grid(), f_.grid());
    if (n_tau_ < kMinTauSamples) {
      throw ScenarioError("TwistScenario: n_tau must be >= " + std::to_string(kMinTauSamples));
    }
    poisson_residual_ = poisson_residual(f_, beta_, gamma_);
    if (!(poisson_residual_ <= kScenarioPoissonResidual)) {
      std::ostringstream msg;
      msg << "TwistScenario: Delta_gamma f = beta violated (relative residual " << poisson_residual_ << ")";
      throw ScenarioError(msg.str());
    }
  }

  [[nodiscard]] const Grid2D& grid() const noexcept { return gamma_.grid(); }
  [[nodiscard]] const ConformalMetric2D& gamma() const noexcept { return gamma_; }
  [[nodiscard]] const AlphaProfile& alpha() const noexcept { return alpha_; }
  [[nodiscard]] const ScalarField& beta() const noexcept { return beta_; }
  [[nodiscard]] const ScalarField& xi() const noexcept { return xi_; }
  [[nodiscard]] const ScalarField& f() const noexcept { return f_; }
  [[nodiscard]] int n_tau() const noexcept { return n_tau_; }

  [[nodiscard]] double tau_step() const noexcept {
    return (alpha_.tau_max() - alpha_.tau_min()) / (n_tau_ - 1);
  }
  [[nodiscard]] double tau(int k) const noexcept {
    return k == n_tau_ - 1 ? alpha_.tau_max() : alpha_.tau_min() + k * tau_step();
  }

  [[nodiscard]] const Covector& df() const noexcept { return df_; }
  /// gamma^{ij} f_,i f_,j
  [[nodiscard]] const ScalarField& df_norm_sq_gamma() const noexcept { return df_norm_sq_; }
  [[nodiscard]] const ScalarField& laplacian_f() const noexcept { return lap_f_; }
  [[nodiscard]] double poisson_residual_value() const noexcept { return poisson_residual_; }

  /// (alpha beta + xi) / alpha' without a sign check.
  [[nodiscard]] double s_squared_raw(const AlphaProfile::Values& a, std::size_t node) const noexcept {
    return (a.alpha * beta_[node] + xi_[node]) / a.dot;
  }

 private:
  ConformalMetric2D gamma_;
  AlphaProfile alpha_;
  ScalarField beta_;
  ScalarField xi_;
  ScalarField f_;
  int n_tau_;
  Covector df_;
  ScalarField df_norm_sq_;
  ScalarField lap_f_;
  double poisson_residual_ = 0.0;
};

namespace detail {

[[noreturn]] inline void non_positive_s2(double tau, std::size_t node, double value) {
  std::ostringstream msg;
  msg << "s^2 = " << value << " is not positive at tau = " << tau << ", node " << node;
  throw ScenarioError(msg.str());
}

}  // namespace detail

inline double s_squared(const TwistScenario& sc, double tau, std::size_t node) {
  const double s2 = sc.s_squared_raw(sc.alpha().at(tau), node);
  if (!(s2 > 0.0)) detail::non_positive_s2(tau, node, s2);
  return s2;
}

/// s^2 on a whole slice; values may be non-positive.
inline std::vector<double> s_squared_slice(const TwistScenario& sc, double tau) {
  const auto a = sc.alpha().at(tau);
  std::vector<double> v(sc.grid().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = sc.s_squared_raw(a, k);
  return v;
}

namespace detail {

inline double theta_from(const AlphaProfile::Values& a, double beta, double xi) {
  return a.dot * beta / (a.alpha * beta + xi) - a.ddot / a.dot;
}

}  // namespace detail

/// theta = 2 s'/s = d/dtau ln s^2, from the exact alpha derivatives.
inline double expansion_theta(const TwistScenario& sc, double tau, std::size_t node) {
  const auto a = sc.alpha().at(tau);
  const double s2 = sc.s_squared_raw(a, node);
  if (!(s2 > 0.0)) detail::non_positive_s2(tau, node, s2);
  return detail::theta_from(a, sc.beta()[node], sc.xi()[node]);
}

/// Mean curvature of the untilted slice t = const: k = -theta.
inline double slice_mean_curvature_k(const TwistScenario& sc, double tau, std::size_t node) {
  return -expansion_theta(sc, tau, node);
}

struct TiltedCurvature {
  ScalarField div_x;    ///< -k~ = Delta_gamma f / s^2 - 2 s'/s
  ScalarField k_tilde;  ///< k~ = -div_x
};

inline TiltedCurvature tilted_mean_curvature_closed(const TwistScenario& sc, double tau) {
  const auto a = sc.alpha().at(tau);
  const std::size_t n = sc.grid().size();
  std::vector<double> div(n);
  std::vector<double> k(n);
  for (std::size_t node = 0; node < n; ++node) {
    const double s2 = sc.s_squared_raw(a, node);
    if (!(s2 > 0.0)) detail::non_positive_s2(tau, node, s2);
    const double theta = detail::theta_from(a, sc.beta()[node], sc.xi()[node]);
    div[node] = sc.laplacian_f()[node] / s2 - theta;
    k[node] = -div[node];
  }
  return {ScalarField(sc.grid(), std::move(div)), ScalarField(sc.grid(), std::move(k))};
}

/// The uncancelled form d/dtau(||df||^h) + (||df||^h - 1) theta + Delta_h f on an
/// interior lattice slice; the tau derivative is a central difference.
inline ScalarField tilted_mean_curvature_uncancelled(const TwistScenario& sc, int k) {
  if (k < 1 || k > sc.n_tau() - 2) throw ScenarioError("uncancelled form needs an interior tau sample");
  const double dtau = sc.tau_step();
  const auto a = sc.alpha().at(sc.tau(k));
  const auto s2m = s_squared_slice(sc, sc.tau(k - 1));
  const auto s2p = s_squared_slice(sc, sc.tau(k + 1));
  const std::size_t n = sc.grid().size();
  std::vector<double> v(n);
  for (std::size_t node = 0; node < n; ++node) {
    const double s2 = sc.s_squared_raw(a, node);
    if (!(s2 > 0.0) || !(s2m[node] > 0.0) || !(s2p[node] > 0.0)) detail::non_positive_s2(sc.tau(k), node, s2);
    const double q = sc.df_norm_sq_gamma()[node];
    const double dq = (q / s2p[node] - q / s2m[node]) / (2.0 * dtau);
    const double theta = detail::theta_from(a, sc.beta()[node], sc.xi()[node]);
    v[node] = dq + (q / s2 - 1.0) * theta + sc.laplacian_f()[node] / s2;
  }
  return ScalarField(sc.grid(), std::move(v));
}

/// Symmetric 3x3 tensor in the chart (tau, x, y); index 0 is tau.
struct Sym3 {
  double tt = 0, tx = 0, ty = 0, xx = 0, xy = 0, yy = 0;

  [[nodiscard]] double operator()(int a, int b) const noexcept {
    static constexpr std::array<std::array<int, 3>, 3> map{{{0, 1, 2}, {1, 3, 4}, {2, 4, 5}}};
    const std::array<double, 6> c{tt, tx, ty, xx, xy, yy};
    return c[map[a][b]];
  }
};

using MetricSlab = std::vector<Sym3>;

inline bool spatial_block_positive_definite(const Sym3& g) noexcept {
  return g.xx * g.yy - g.xy * g.xy > 0.0 && g.xx + g.yy > 0.0;
}

namespace detail {

inline MetricSlab tilted_metric_components(const TwistScenario& sc, double tau) {
  const auto a = sc.alpha().at(tau);
  const std::size_t n = sc.grid().size();
  MetricSlab slab(n);
  for (std::size_t node = 0; node < n; ++node) {
    const double h = sc.s_squared_raw(a, node) * sc.gamma().factor(node);
    const double fx = sc.df().dx[node];
    const double fy = sc.df().dy[node];
    slab[node] = {-1.0, fx, fy, h - fx * fx, -fx * fy, h - fy * fy};
  }
  return slab;
}

}  // namespace detail

/// g = -dtau^2 + 2 f_,i dx^i dtau + (s^2 gamma_ij - f_,i f_,j) dx^i dx^j on one slice.
inline MetricSlab assemble_tilted_metric(const TwistScenario& sc, double tau) {
  MetricSlab slab = detail::tilted_metric_components(sc, tau);
  std::vector<std::size_t> bad;
  for (std::size_t node = 0; node < slab.size(); ++node) {
    if (!spatial_block_positive_definite(slab[node])) bad.push_back(node);
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "assemble_tilted_metric: signature is not (-,+,+) at " << bad.size() << " node(s) on tau = " << tau
        << " (first: node " << bad.front() << ")";
    throw ScenarioError(msg.str());
  }
  return slab;
}

/// Closed inverse: g^tt = ||df||^h - 1, g^ti = h^{ij} f_,j, g^ij = h^{ij}.
inline MetricSlab inverse_metric_closed(const TwistScenario& sc, double tau) {
  const auto a = sc.alpha().at(tau);
  const std::size_t n = sc.grid().size();
  MetricSlab inv(n);
  for (std::size_t node = 0; node < n; ++node) {
    const double s2 = sc.s_squared_raw(a, node);
    if (!(s2 > 0.0)) detail::non_positive_s2(tau, node, s2);
    const double hinv = sc.gamma().inverse_factor(node) / s2;
    const double norm_h = sc.df_norm_sq_gamma()[node] / s2;
    if (!(norm_h < 1.0)) {
      std::ostringstream msg;
      msg << "inverse_metric_closed: ||df||^h = " << norm_h << " >= 1 at tau = " << tau << ", node " << node
          << "; the slice is not spacelike there";
      throw ScenarioError(msg.str());
    }
    inv[node] = {norm_h - 1.0, hinv * sc.df().dx[node], hinv * sc.df().dy[node], hinv, 0.0, hinv};
  }
  return inv;
}

/// General 3x3 inverse by cofactors; `det` receives the determinant.
inline Sym3 invert_numeric(const Sym3& g, double& det) {
  const double c00 = g.xx * g.yy - g.xy * g.xy;
  const double c01 = g.ty * g.xy - g.tx * g.yy;
  const double c02 = g.tx * g.xy - g.ty * g.xx;
  det = g.tt * c00 + g.tx * c01 + g.ty * c02;
  if (det == 0.0 || !std::isfinite(det)) throw ScenarioError("singular metric sample");
  const double c11 = g.tt * g.yy - g.ty * g.ty;
  const double c12 = g.tx * g.ty - g.tt * g.xy;
  const double c22 = g.tt * g.xx - g.tx * g.tx;
  return {c00 / det, c01 / det, c02 / det, c11 / det, c12 / det, c22 / det};
}

/// g(X, X) for X^a = g^{a tau}, contracted with the lower-index metric.
inline double normal_norm_sq_contracted(const Sym3& g, const Sym3& ginv) {
  const std::array<double, 3> x{ginv.tt, ginv.tx, ginv.ty};
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) s += g(a, b) * x[a] * x[b];
  }
  return s;
}

struct OracleSlice {
  int k = 0;
  double tau = 0.0;
  ScalarField div_x;  ///< -k~ from the numeric divergence of X
  /// div(X / |X|); absent when X fails to be timelike somewhere on the slice.
  std::optional<ScalarField> unit_normal_div;
};

/// div X = |det g|^{-1/2} d_a (|det g|^{1/2} X^a), X^a = g^{a tau}, on interior tau sample k.
inline OracleSlice oracle_divergence_slice(const TwistScenario& sc, int k) {
  if (k < 1 || k > sc.n_tau() - 2) throw ScenarioError("oracle: tau sample has no neighbours on both sides");
  const Grid2D& grid = sc.grid();
  const std::size_t n = grid.size();

  struct Flux {
    std::vector<double> w;  // sqrt|det g|
    std::vector<std::array<double, 3>> x;
    std::vector<std::array<double, 3>> unit;
    bool timelike = true;
  };
  auto slab_flux = [&](int kk) {
    const MetricSlab g = detail::tilted_metric_components(sc, sc.tau(kk));
    Flux out{std::vector<double>(n), std::vector<std::array<double, 3>>(n), std::vector<std::array<double, 3>>(n)};
    for (std::size_t node = 0; node < n; ++node) {
      double det = 0.0;
      const Sym3 inv = invert_numeric(g[node], det);
      const double w = std::sqrt(std::abs(det));
      out.w[node] = w;
      out.x[node] = {w * inv.tt, w * inv.tx, w * inv.ty};
      const double xx = normal_norm_sq_contracted(g[node], inv);
      if (xx < 0.0) {
        const double len = std::sqrt(-xx);
        out.unit[node] = {out.x[node][0] / len, out.x[node][1] / len, out.x[node][2] / len};
      } else {
        out.timelike = false;
      }
    }
    return out;
  };

  const Flux lo = slab_flux(k - 1);
  const Flux mid = slab_flux(k);
  const Flux hi = slab_flux(k + 1);
  const double it = 1.0 / (2.0 * sc.tau_step());
  const double ix = 1.0 / (2.0 * grid.hx());
  const double iy = 1.0 / (2.0 * grid.hy());
  const bool timelike = lo.timelike && mid.timelike && hi.timelike;

  std::vector<double> div(n);
  std::vector<double> unit(timelike ? n : 0);
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const std::size_t c = grid.index(i, j);
      const std::size_t xp = grid.index(i + 1, j);
      const std::size_t xm = grid.index(i - 1, j);
      const std::size_t yp = grid.index(i, j + 1);
      const std::size_t ym = grid.index(i, j - 1);
      div[c] = ((hi.x[c][0] - lo.x[c][0]) * it + (mid.x[xp][1] - mid.x[xm][1]) * ix +
                (mid.x[yp][2] - mid.x[ym][2]) * iy) /
               mid.w[c];
      if (timelike) {
        unit[c] = ((hi.unit[c][0] - lo.unit[c][0]) * it + (mid.unit[xp][1] - mid.unit[xm][1]) * ix +
                   (mid.unit[yp][2] - mid.unit[ym][2]) * iy) /
                  mid.w[c];
      }
    }
  }
  OracleSlice out{k, sc.tau(k), ScalarField(grid, std::move(div)), std::nullopt};
  if (timelike) out.unit_normal_div.emplace(grid, std::move(unit));
  return out;
}

/// Oracle on every interior tau sample in [first, last] (clamped to the lattice interior).
inline std::vector<OracleSlice> oracle_divergence_X(const TwistScenario& sc, int first = 0, int last = -1) {
  if (last < 0) last = sc.n_tau() - 1;
  first = std::max(first + 1, 1);
  last = std::min(last - 1, sc.n_tau() - 2);
  if (first > last) throw ScenarioError("oracle: tau window too narrow for interior differencing");
  std::vector<OracleSlice> out;
  out.reserve(static_cast<std::size_t>(last - first + 1));
  for (int k = first; k <= last; ++k) out.push_back(oracle_divergence_slice(sc, k));
  return out;
}

struct KinematicsReport {
  std::vector<double> tau;           ///< slices on which the kinematics were sampled
  std::vector<ScalarField> theta;    ///< numeric expansion from the d/dt h decomposition
  double theta_max_dev = 0.0;        ///< max |theta_numeric - 2 s'/s|
  double shear_norm_max = 0.0;
  double accel_norm_max = 0.0;
};

/// Kinematics of V = d/dt in the original gauge, sampled at the spacetime points
/// of the interior tau samples in [first, last]. d/dt at fixed x equals d/dtau at
/// fixed x, so time derivatives use the neighbouring tau samples.
inline KinematicsReport kinematics_of_V(const TwistScenario& sc, int first = 0, int last = -1) {
  if (last < 0) last = sc.n_tau() - 1;
  const Grid2D& grid = sc.grid();
  const std::size_t n = grid.size();
  const double dt = sc.tau_step();
  KinematicsReport rep;

  // Original-gauge components g_tt, g_tx, g_ty on a t = const slab. They carry no
  // t or x dependence for a twisted product; they are sampled and differenced anyway.
  struct LapseShift {
    std::vector<double> tt, tx, ty;
  };
  auto lapse_shift = [n](double /*t*/) { return LapseShift{std::vector<double>(n, -1.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; };

  for (int k = std::max(first + 1, 1); k <= std::min(last - 1, sc.n_tau() - 2); ++k) {
    const double tau = sc.tau(k);
    const auto a = sc.alpha().at(tau);
    const auto s2m = s_squared_slice(sc, sc.tau(k - 1));
    const auto s2p = s_squared_slice(sc, sc.tau(k + 1));
    const LapseShift prev = lapse_shift(tau - dt);
    const LapseShift cur = lapse_shift(tau);
    const LapseShift next = lapse_shift(tau + dt);
    std::vector<double> theta(n);
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) {
        const std::size_t c = grid.index(i, j);
        const double s2 = sc.s_squared_raw(a, c);
        if (!(s2 > 0.0)) detail::non_positive_s2(tau, c, s2);
        const double e2p = sc.gamma().factor(c);
        // h_ij = s^2 exp(2 phi) delta_ij
        const double h = s2 * e2p;
        const double dh_xx = (s2p[c] - s2m[c]) * e2p / (2.0 * dt);
        const double dh_yy = dh_xx;
        const double dh_xy = 0.0;
        const double hinv = 1.0 / h;

        const double th = 0.5 * hinv * (dh_xx + dh_yy);
        theta[c] = th;
        rep.theta_max_dev = std::max(rep.theta_max_dev, std::abs(th - detail::theta_from(a, sc.beta()[c], sc.xi()[c])));

        const double sxx = 0.5 * dh_xx - 0.5 * th * h;
        const double syy = 0.5 * dh_yy - 0.5 * th * h;
        const double sxy = 0.5 * dh_xy;
        const double shear = hinv * std::sqrt(sxx * sxx + 2.0 * sxy * sxy + syy * syy);
        rep.shear_norm_max = std::max(rep.shear_norm_max, shear);

        // u-dot_a = Gamma_{a tt} = d_t g_at - 0.5 d_a g_tt
        const double dgtt_dx = (cur.tt[grid.index(i + 1, j)] - cur.tt[grid.index(i - 1, j)]) / (2.0 * grid.hx());
        const double dgtt_dy = (cur.tt[grid.index(i, j + 1)] - cur.tt[grid.index(i, j - 1)]) / (2.0 * grid.hy());
        const double dgtx_dt = (next.tx[c] - prev.tx[c]) / (2.0 * dt);
        const double dgty_dt = (next.ty[c] - prev.ty[c]) / (2.0 * dt);
        const double dgtt_dt = (next.tt[c] - prev.tt[c]) / (2.0 * dt);
        const double ax = dgtx_dt - 0.5 * dgtt_dx;
        const double ay = dgty_dt - 0.5 * dgtt_dy;
        const double at = 0.5 * dgtt_dt;
        const double accel = std::sqrt(at * at + hinv * (ax * ax + ay * ay));
        rep.accel_norm_max = std::max(rep.accel_norm_max, accel);
      }
    }
    rep.tau.push_back(tau);
    rep.theta.emplace_back(grid, std::move(theta));
  }
  return rep;
}

}  // namespace twistcmc

#pragma once

// Discrete Riemannian geometry on a periodic rectangular chart of the 2-torus
// carrying a conformally flat metric gamma = exp(2 phi) (dx^2 + dy^2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twistcmc/errors.hpp"

namespace twistcmc {

class Grid2D {
 public:
  Grid2D(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0) {
      throw Error("Grid2D: node counts must be even and >= 8 (got " + std::to_string(nx) + "x" +
                  std::to_string(ny) + ")");
    }
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
      throw Error("Grid2D: period lengths must be positive and finite");
    }
  }

  [[nodiscard]] int nx() const noexcept { return nx_; }
  [[nodiscard]] int ny() const noexcept { return ny_; }
  [[nodiscard]] double lx() const noexcept { return lx_; }
  [[nodiscard]] double ly() const noexcept { return ly_; }
  [[nodiscard]] double hx() const noexcept { return lx_ / nx_; }
  [[nodiscard]] double hy() const noexcept { return ly_ / ny_; }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * ny_; }

  [[nodiscard]] double x(int i) const noexcept { return i * hx(); }
  [[nodiscard]] double y(int j) const noexcept { return j * hy(); }

  /// Row-major node index, x fastest; both indices wrap periodically.
  [[nodiscard]] std::size_t index(int i, int j) const noexcept {
    const int iw = ((i % nx_) + nx_) % nx_;
    const int jw = ((j % ny_) + ny_) % ny_;
    return static_cast<std::size_t>(jw) * nx_ + iw;
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  int nx_;
  int ny_;
  double lx_;
  double ly_;
};

class ScalarField {
 public:
  ScalarField(Grid2D grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw Error("ScalarField: value count does not match grid");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        throw Error("ScalarField: non-finite value at node " + std::to_string(k));
      }
    }
  }

  static ScalarField constant(Grid2D grid, double c) {
    return ScalarField(grid, std::vector<double>(grid.size(), c));
  }

  /// Samples fn(x, y) at every node.
  template <typename Fn>
  static ScalarField sample(Grid2D grid, Fn&& fn) {
    std::vector<double> v(grid.size());
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) v[grid.index(i, j)] = fn(grid.x(i), grid.y(j));
    }
    return ScalarField(grid, std::move(v));
  }

  [[nodiscard]] const Grid2D& grid() const noexcept { return grid_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t k) const noexcept { return values_[k]; }
  [[nodiscard]] double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }

  [[nodiscard]] double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  [[nodiscard]] double min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
  [[nodiscard]] double max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }
  [[nodiscard]] double mean() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }
  /// Discrete (unweighted) Euclidean norm over nodes.
  [[nodiscard]] double norm2() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }
  [[nodiscard]] bool is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    return zip(a, b, [](double u, double v) { return u + v; });
  }
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    return zip(a, b, [](double u, double v) { return u - v; });
  }
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    return zip(a, b, [](double u, double v) { return u * v; });
  }
  friend ScalarField operator*(double c, const ScalarField& a) {
    std::vector<double> v(a.values_);
    for (double& x : v) x *= c;
    return ScalarField(a.grid_, std::move(v));
  }
  friend ScalarField operator+(const ScalarField& a, double c) {
    std::vector<double> v(a.values_);
    for (double& x : v) x += c;
    return ScalarField(a.grid_, std::move(v));
  }

 private:
  template <typename Op>
  static ScalarField zip(const ScalarField& a, const ScalarField& b, Op op) {
    require_same_grid(a.grid_, b.grid_);
    std::vector<double> v(a.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = op(a.values_[k], b.values_[k]);
    return ScalarField(a.grid_, std::move(v));
  }

 public:
  static void require_same_grid(const Grid2D& a, const Grid2D& b) {
    if (!(a == b)) throw GridMismatch("fields live on different grids");
  }

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

/// gamma_ij = exp(2 phi) delta_ij. Both conformal factors are cached per node.
class ConformalMetric2D {
 public:
  explicit ConformalMetric2D(ScalarField phi) : phi_(std::move(phi)) {
    factor_.resize(phi_.size());
    inverse_factor_.resize(phi_.size());
    for (std::size_t k = 0; k < phi_.size(); ++k) {
      factor_[k] = std::exp(2.0 * phi_[k]);
      inverse_factor_[k] = std::exp(-2.0 * phi_[k]);
      if (!std::isfinite(factor_[k]) || !std::isfinite(inverse_factor_[k]) || factor_[k] <= 0.0 ||
          inverse_factor_[k] <= 0.0) {
        throw Error("ConformalMetric2D: exp(2 phi) overflows at node " + std::to_string(k));
      }
    }
  }

  static ConformalMetric2D flat(Grid2D grid) { return ConformalMetric2D(ScalarField::constant(grid, 0.0)); }

  [[nodiscard]] const Grid2D& grid() const noexcept { return phi_.grid(); }
  [[nodiscard]] const ScalarField& phi() const noexcept { return phi_; }
  /// exp(2 phi) = gamma_xx = gamma_yy = sqrt(det gamma).
  [[nodiscard]] double factor(std::size_t k) const noexcept { return factor_[k]; }
  /// exp(-2 phi) = gamma^xx = gamma^yy.
  [[nodiscard]] double inverse_factor(std::size_t k) const noexcept { return inverse_factor_[k]; }
  [[nodiscard]] double volume_element(std::size_t k) const noexcept { return factor_[k]; }

  [[nodiscard]] double area() const noexcept {
    double s = 0.0;
    for (double w : factor_) s += w;
    return s * grid().hx() * grid().hy();
  }

 private:
  ScalarField phi_;
  std::vector<double> factor_;
  std::vector<double> inverse_factor_;
};

struct Covector {
  ScalarField dx;
  ScalarField dy;
};

inline Covector gradient(const ScalarField& f) {
  const Grid2D& g = f.grid();
  const double ihx = 1.0 / (2.0 * g.hx());
  const double ihy = 1.0 / (2.0 * g.hy());
  std::vector<double> dx(g.size());
  std::vector<double> dy(g.size());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      dx[k] = (f(i + 1, j) - f(i - 1, j)) * ihx;
      dy[k] = (f(i, j + 1) - f(i, j - 1)) * ihy;
    }
  }
  return {ScalarField(g, std::move(dx)), ScalarField(g, std::move(dy))};
}

/// gamma^{ij} f_,i f_,j (squared norm of df).
inline ScalarField grad_norm_sq_gamma(const ScalarField& f, const ConformalMetric2D& gamma) {
  ScalarField::require_same_grid(f.grid(), gamma.grid());
  const Covector df = gradient(f);
  std::vector<double> v(f.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = gamma.inverse_factor(k) * (df.dx[k] * df.dx[k] + df.dy[k] * df.dy[k]);
  }
  return ScalarField(f.grid(), std::move(v));
}

/// Standard 5-point periodic Laplacian in the flat chart, written as differences of
/// neighbour differences so an exactly representable shift f + c gives identical bits.
inline ScalarField flat_laplacian(const ScalarField& f) {
  const Grid2D& g = f.grid();
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  std::vector<double> v(g.size());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double c = f(i, j);
      v[g.index(i, j)] =
          ((f(i + 1, j) - c) - (c - f(i - 1, j))) * ihx2 + ((f(i, j + 1) - c) - (c - f(i, j - 1))) * ihy2;
    }
  }
  return ScalarField(g, std::move(v));
}

/// Delta_gamma f = exp(-2 phi) Delta_flat f, exact in two dimensions because
/// sqrt(det gamma) gamma^{ij} = delta^{ij}.
inline ScalarField laplace_beltrami(const ScalarField& f, const ConformalMetric2D& gamma) {
  ScalarField::require_same_grid(f.grid(), gamma.grid());
  const ScalarField flat = flat_laplacian(f);
  std::vector<double> v(f.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = gamma.inverse_factor(k) * flat[k];
  return ScalarField(f.grid(), std::move(v));
}

/// Rectangle rule for the integral of f dV_gamma over the torus.
inline double integrate_volume(const ScalarField& f, const ConformalMetric2D& gamma) {
  ScalarField::require_same_grid(f.grid(), gamma.grid());
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * gamma.volume_element(k);
  return s * f.grid().hx() * f.grid().hy();
}

}  // namespace twistcmc

#pragma once

// Small numeric building blocks shared across the library:
// bisection, golden-section minimization, integer powers, a tridiagonal
// solver, and a monotone cubic (PCHIP) interpolant on a uniform grid.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmweak {

inline double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// Root of f on [lo, hi]; f(lo) and f(hi) must have opposite (or zero) signs.
// Converges to |hi-lo| <= tol_x; no derivative needed.
inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, double tol_x, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::invalid_argument("bisect: endpoints do not bracket a root");
  for (int it = 0; it < max_iter && (hi - lo) > tol_x; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Minimizer of f on [lo, hi] by golden-section search.
inline double golden_min(const std::function<double(double)>& f, double lo,
                         double hi, double tol_x, int max_iter = 200) {
  static const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > tol_x; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Solves a tridiagonal system in place (Thomas algorithm).
// lower[i] couples row i to i-1, upper[i] couples row i to i+1.
inline void solve_tridiagonal(std::vector<double>& lower,
                              std::vector<double>& diag,
                              std::vector<double>& upper,
                              std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;)
    rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Shape-preserving cubic interpolant (Fritsch-Carlson slopes) on the
// uniform grid x_k = x0 + k*h. Evaluation clamps to the table range.
class UniformPchip {
 public:
  UniformPchip() = default;
  UniformPchip(double x0, double h, std::vector<double> y)
      : x0_(x0), h_(h), y_(std::move(y)) {
    if (y_.size() < 2) throw std::invalid_argument("UniformPchip: need >= 2 samples");
    build_slopes();
  }

  double x_min() const { return x0_; }
  double x_max() const { return x0_ + h_ * static_cast<double>(y_.size() - 1); }
  double step() const { return h_; }
  const std::vector<double>& samples() const { return y_; }

  double value(double x) const {
    auto [k, u] = locate(x);
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    double h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u);
    double h11 = u * u * (u - 1);
    return h00 * y_[k] + h10 * h_ * d_[k] + h01 * y_[k + 1] + h11 * h_ * d_[k + 1];
  }

  double deriv(double x) const {
    auto [k, u] = locate(x);
    double g00 = 6 * u * (u - 1);
    double g10 = (1 - u) * (1 - 3 * u);
    double g01 = -g00;
    double g11 = u * (3 * u - 2);
    return (g00 * y_[k] + g01 * y_[k + 1]) / h_ + g10 * d_[k] + g11 * d_[k + 1];
  }

 private:
  std::pair<std::size_t, double> locate(double x) const {
    double u = (x - x0_) / h_;
    if (u <= 0.0) return {0, 0.0};
    double last = static_cast<double>(y_.size() - 1);
    if (u >= last) return {y_.size() - 2, 1.0};
    auto k = static_cast<std::size_t>(u);
    if (k >= y_.size() - 1) k = y_.size() - 2;
    return {k, u - static_cast<double>(k)};
  }

  void build_slopes() {
    const std::size_t n = y_.size();
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / h_;
    d_.assign(n, 0.0);
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0)
        d_[i] = 0.0;
      else
        d_[i] = 2.0 * delta[i - 1] * delta[i] / (delta[i - 1] + delta[i]);
    }
    // Fritsch-Carlson limiter keeps the interpolant shape-preserving.
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (delta[i] == 0.0) {
        d_[i] = 0.0;
        d_[i + 1] = 0.0;
        continue;
      }
      double alpha = d_[i] / delta[i];
      double beta = d_[i + 1] / delta[i];
      double norm2 = alpha * alpha + beta * beta;
      if (norm2 > 9.0) {
        double tau = 3.0 / std::sqrt(norm2);
        d_[i] = tau * alpha * delta[i];
        d_[i + 1] = tau * beta * delta[i];
      }
    }
  }

  double x0_ = 0.0;
  double h_ = 1.0;
  std::vector<double> y_;
  std::vector<double> d_;
};

// Deterministic 64-bit mix used to derive per-stage RNG seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace pmweak

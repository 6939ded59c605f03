#pragma once

// Conservative finite-difference solver for the uniformly parabolic radial
// Neumann problem
//   (s^m v)_t = (s^m f(v_s))_s   on (0,R) x (0,T),  m = n-1,
//   v_s(0,t) = v_s(R,t) = 0,     v(s,0) = v0(s),
// with f a monotone slope flux (the sigma* continuation downstream).
//
// Finite-volume node weights w_i = integral of s^m over the dual cell give
// exact discrete conservation of sum w_i v_i with zero boundary flux; the
// face flux is s^m f(pbar) at the implicit-midpoint gradient (Crank-Nicolson
// in time), solved per step by damped Newton on the tridiagonal system.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmweak/numeric.hpp"

namespace pmweak {

struct ClassicalSolution {
  int n = 1;
  double R = 1.0, T = 1.0;
  int Ns = 0, Nt = 0;  // cells; grids hold (Ns+1) x (Nt+1) nodes
  // Row-major [j * (Ns+1) + i], time index j outer.
  std::vector<double> v, phi, vs, vt, phit;
  std::vector<double> node_weight;  // integral of s^m over dual cells
  double M = 0.0;                   // max |v_s| at t = 0
  double delta0 = 0.0;
  double l0 = 0.0;
  double phit_crosscheck = 0.0;  // max |phit - time difference of phi|

  double ds() const { return R / Ns; }
  double dt() const { return T / Nt; }
  double s_of(int i) const { return R * static_cast<double>(i) / Ns; }
  double t_of(int j) const { return T * static_cast<double>(j) / Nt; }
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * (Ns + 1) + i;
  }
  double mass(int j) const {
    double total = 0.0;
    for (int i = 0; i <= Ns; ++i) total += node_weight[i] * v[idx(i, j)];
    return total;
  }
};

// Slope-flux concept: value(p) and deriv(p). Adapts plain callables for the
// linear test cases.
struct AffineSlopeFlux {
  double slope = 1.0;
  double operator()(double p) const { return slope * p; }
  double deriv(double) const { return slope; }
};

template <class Flux>
ClassicalSolution solve_classical(const Flux& flux,
                                  const std::function<double(double)>& v0,
                                  int n, double R, double T, int Ns, int Nt) {
  if (n < 1 || R <= 0.0 || T <= 0.0 || Ns < 4 || Nt < 1)
    throw std::invalid_argument("solve_classical: bad grid parameters");
  const int m = n - 1;
  ClassicalSolution sol;
  sol.n = n;
  sol.R = R;
  sol.T = T;
  sol.Ns = Ns;
  sol.Nt = Nt;
  const int nn = Ns + 1;
  const double h = R / Ns;
  const double dt = T / Nt;
  sol.v.assign(static_cast<std::size_t>(nn) * (Nt + 1), 0.0);

  // Dual-cell weights: integral of s^m over [s_i - h/2, s_i + h/2] clipped
  // to [0, R]; the s = 0 singular factor is absorbed exactly.
  sol.node_weight.resize(nn);
  for (int i = 0; i < nn; ++i) {
    double lo = std::max(0.0, sol.s_of(i) - 0.5 * h);
    double hi = std::min(R, sol.s_of(i) + 0.5 * h);
    sol.node_weight[i] = (ipow(hi, m + 1) - ipow(lo, m + 1)) / (m + 1);
  }
  std::vector<double> face(nn);  // s^m at interior faces i+1/2
  for (int i = 0; i < Ns; ++i) face[i] = ipow(sol.s_of(i) + 0.5 * h, m);

  for (int i = 0; i < nn; ++i) sol.v[i] = v0(sol.s_of(i));

  // Implicit midpoint step: the face flux is s^m f(pbar) at the midpoint
  // gradient pbar = ((vn+vo)_{i+1} - (vn+vo)_i)/(2h). Solved by Newton with
  // tridiagonal Jacobian; f' >= c_lo > 0 keeps the system diagonally
  // dominant. Far from the solution a full step can 2-cycle when f' varies
  // steeply, so each step is backtracked on the residual 2-norm.
  std::vector<double> lower(nn), diag(nn), upper(nn), res(nn), vnew(nn),
      vold(nn), trial(nn), fface(nn), dface(nn);
  auto residual_norm = [&](const std::vector<double>& v) {
    for (int i = 0; i < Ns; ++i) {
      double pbar = 0.5 * ((v[i + 1] + vold[i + 1]) - (v[i] + vold[i])) / h;
      fface[i] = face[i] * flux(pbar);
    }
    double total = 0.0;
    for (int i = 0; i < nn; ++i) {
      double fl = (i > 0) ? fface[i - 1] : 0.0;
      double fr = (i < Ns) ? fface[i] : 0.0;
      double r = sol.node_weight[i] * (v[i] - vold[i]) / dt - (fr - fl);
      total += r * r;
    }
    return std::sqrt(total);
  };
  for (int j = 0; j < Nt; ++j) {
    for (int i = 0; i < nn; ++i) vold[i] = sol.v[sol.idx(i, j)];
    vnew = vold;
    bool converged = false;
    for (int it = 0; it < 80; ++it) {
      for (int i = 0; i < Ns; ++i) {
        double pbar =
            0.5 * ((vnew[i + 1] + vold[i + 1]) - (vnew[i] + vold[i])) / h;
        fface[i] = face[i] * flux(pbar);
        dface[i] = face[i] * flux.deriv(pbar) * 0.5 / h;
      }
      double scale = 1.0;
      double norm0 = 0.0;
      for (int i = 0; i < nn; ++i) {
        double fl = (i > 0) ? fface[i - 1] : 0.0;
        double fr = (i < Ns) ? fface[i] : 0.0;
        double cl = (i > 0) ? dface[i - 1] : 0.0;
        double cr = (i < Ns) ? dface[i] : 0.0;
        res[i] = sol.node_weight[i] * (vnew[i] - vold[i]) / dt - (fr - fl);
        norm0 += res[i] * res[i];
        lower[i] = -cl;
        upper[i] = -cr;
        diag[i] = sol.node_weight[i] / dt + cl + cr;
        scale = std::max(scale, std::abs(vnew[i]));
      }
      norm0 = std::sqrt(norm0);
      solve_tridiagonal(lower, diag, upper, res);
      double step = 0.0;
      for (int i = 0; i < nn; ++i) step = std::max(step, std::abs(res[i]));
      if (step <= 1e-12 * scale) {
        converged = true;
        break;
      }
      double alpha = 1.0;
      for (int bt = 0; bt < 40; ++bt) {
        for (int i = 0; i < nn; ++i) trial[i] = vnew[i] - alpha * res[i];
        if (residual_norm(trial) < (1.0 - 1e-4 * alpha) * norm0) break;
        alpha *= 0.5;
      }
      for (int i = 0; i < nn; ++i) vnew[i] -= alpha * res[i];
      if (alpha * step <= 1e-13 * scale) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw std::runtime_error("solve_classical: Newton stall at step " +
                               std::to_string(j));
    for (int i = 0; i < nn; ++i) sol.v[sol.idx(i, j + 1)] = vnew[i];
  }

  // Gradient grids. Neumann rows are exactly zero at s = 0 and s = R.
  sol.vs.assign(sol.v.size(), 0.0);
  sol.vt.assign(sol.v.size(), 0.0);
  for (int j = 0; j <= Nt; ++j) {
    for (int i = 1; i < Ns; ++i)
      sol.vs[sol.idx(i, j)] =
          (sol.v[sol.idx(i + 1, j)] - sol.v[sol.idx(i - 1, j)]) / (2.0 * h);
  }
  for (int i = 0; i <= Ns; ++i) {
    for (int j = 0; j <= Nt; ++j) {
      double d;
      if (j == 0)
        d = (-3.0 * sol.v[sol.idx(i, 0)] + 4.0 * sol.v[sol.idx(i, 1)] -
             sol.v[sol.idx(i, 2)]) / (2.0 * dt);
      else if (j == Nt)
        d = (3.0 * sol.v[sol.idx(i, Nt)] - 4.0 * sol.v[sol.idx(i, Nt - 1)] +
             sol.v[sol.idx(i, Nt - 2)]) / (2.0 * dt);
      else
        d = (sol.v[sol.idx(i, j + 1)] - sol.v[sol.idx(i, j - 1)]) / (2.0 * dt);
      sol.vt[sol.idx(i, j)] = d;
    }
  }
  for (int i = 0; i <= Ns; ++i) sol.M = std::max(sol.M, std::abs(sol.vs[i]));
  return sol;
}

// Fills phi (trapezoidal cumulative integral of s^m v per row) and phit
// (= s^m f(v_s) per the stream relation), cross-checking phit against
// centered time differences of phi.
template <class Flux>
void stream_function(ClassicalSolution& sol, const Flux& flux) {
  const int m = sol.n - 1;
  const double h = sol.ds();
  sol.phi.assign(sol.v.size(), 0.0);
  sol.phit.assign(sol.v.size(), 0.0);
  for (int j = 0; j <= sol.Nt; ++j) {
    double acc = 0.0;
    double prev = 0.0;  // s^m v at s = 0 (zero when m >= 1)
    prev = ipow(sol.s_of(0), m) * sol.v[sol.idx(0, j)];
    sol.phi[sol.idx(0, j)] = 0.0;
    for (int i = 1; i <= sol.Ns; ++i) {
      double cur = ipow(sol.s_of(i), m) * sol.v[sol.idx(i, j)];
      acc += 0.5 * h * (prev + cur);
      sol.phi[sol.idx(i, j)] = acc;
      prev = cur;
    }
    for (int i = 0; i <= sol.Ns; ++i)
      sol.phit[sol.idx(i, j)] =
          ipow(sol.s_of(i), m) * flux(sol.vs[sol.idx(i, j)]);
  }
  double worst = 0.0;
  const double dt = sol.dt();
  for (int j = 1; j < sol.Nt; ++j)
    for (int i = 0; i <= sol.Ns; ++i) {
      double fd = (sol.phi[sol.idx(i, j + 1)] - sol.phi[sol.idx(i, j - 1)]) /
                  (2.0 * dt);
      worst = std::max(worst, std::abs(fd - sol.phit[sol.idx(i, j)]));
    }
  sol.phit_crosscheck = worst;
}

// Largest grid-aligned boundary strip width delta0 <= cap_fraction * R on
// which |v_s| stays below lambda_minus for all times.
inline double select_delta0(const ClassicalSolution& sol, double lambda_minus,
                            double cap_fraction = 0.45) {
  int cap = static_cast<int>(std::floor(cap_fraction * sol.Ns));
  auto strip_ok = [&](int d) {
    for (int j = 0; j <= sol.Nt; ++j)
      for (int i = 0; i <= sol.Ns; ++i) {
        if (i > d && i < sol.Ns - d) continue;
        if (std::abs(sol.vs[sol.idx(i, j)]) > lambda_minus) return false;
      }
    return true;
  };
  for (int d = cap; d >= 2; --d)
    if (strip_ok(d)) return sol.ds() * d;
  throw std::runtime_error("select_delta0: no qualifying strip of >= 2 cells");
}

inline double select_l0(const ClassicalSolution& sol) {
  double worst = 0.0;
  for (double x : sol.vt) worst = std::max(worst, std::abs(x));
  return worst + 1.0;
}

struct MaxPrincipleReport {
  double excess = 0.0;  // max |v_s| over grid minus M
  double tolerance = 0.0;
  bool pass = false;
};

inline MaxPrincipleReport check_max_principle(const ClassicalSolution& sol) {
  double worst = 0.0;
  for (double x : sol.vs) worst = std::max(worst, std::abs(x));
  MaxPrincipleReport rep;
  rep.excess = worst - sol.M;
  rep.tolerance = 1e-6 * (1.0 + sol.M);
  rep.pass = rep.excess <= rep.tolerance;
  return rep;
}

// Natural cubic spline through CSV-style samples with clamped zero slope at
// both ends (Neumann compatibility projection for v0).
class ClampedSpline {
 public:
  ClampedSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || n != y_.size())
      throw std::invalid_argument("ClampedSpline: need matching samples >= 2");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i]))
        throw std::invalid_argument("ClampedSpline: x not increasing");
    // Solve for slopes with d_0 = d_{n-1} = 0 (clamped ends).
    std::vector<double> lower(n, 0.0), diag(n, 1.0), upper(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      double hl = x_[i] - x_[i - 1];
      double hr = x_[i + 1] - x_[i];
      lower[i] = hr;
      diag[i] = 2.0 * (hl + hr);
      upper[i] = hl;
      rhs[i] = 3.0 * (hr * (y_[i] - y_[i - 1]) / hl + hl * (y_[i + 1] - y_[i]) / hr);
    }
    solve_tridiagonal(lower, diag, upper, rhs);
    d_ = rhs;
    d_.front() = 0.0;
    d_.back() = 0.0;
  }

  double operator()(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    std::size_t lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (x_[mid] <= x) lo = mid;
      else hi = mid;
    }
    double h = x_[lo + 1] - x_[lo];
    double u = (x - x_[lo]) / h;
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    double h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u);
    double h11 = u * u * (u - 1);
    return h00 * y_[lo] + h10 * h * d_[lo] + h01 * y_[lo + 1] + h11 * h * d_[lo + 1];
  }

 private:
  std::vector<double> x_, y_, d_;
};

}  // namespace pmweak

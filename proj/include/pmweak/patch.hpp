#pragma once

// Diamond sawtooth patches: the root curve stilde of the weighted-moment
// equation, the piecewise-affine bump, its closed-form gradients, and the
// weighted moment integral used to extend the stream function.
//
// Diamond D(s01, s02, t0, L): for |t - t0| <= L the s-extent is
// [s1(t), s2(t)] with affine s1, s2, s1 + s2 = s01 + s02, collapsing to the
// midpoint at the tips. On each t-slice the bump descends with slope -a on
// [s1, stilde1], rises with slope b on [stilde1, stilde2] through the root
// stilde, and descends with slope -a on [stilde2, s2]; stilde is chosen so
// the integral of tau^m vtilde over the slice vanishes.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmweak/numeric.hpp"

namespace pmweak {

// Unique root in (s1, s2) of
//   (a s1 + b x)^{m+2} - a (a+b)^{m+1} s1^{m+2}
//   - (a s2 + b x)^{m+2} + a (a+b)^{m+1} s2^{m+2} = 0.
// The left side is strictly decreasing in x, positive at s1, negative at s2.
inline double solve_stilde(double a, double b, int m, double s1, double s2) {
  if (!(0.0 < s1 && s1 < s2))
    throw std::invalid_argument("solve_stilde: need 0 < s1 < s2");
  if (!(a > 0.0 && b > 0.0))
    throw std::invalid_argument("solve_stilde: need a, b > 0");
  if (s2 - s1 < 1e-15 * s2) return 0.5 * (s1 + s2);
  // Factoring out a*(s2 - s1) via x^k - y^k = (x - y) sum x^i y^{k-1-i}
  // leaves G(x) = a (s2 - s1) (P - Q(x)). The raw power form cancels
  // catastrophically when s2 - s1 is many orders below s1.
  double P = 0.0;
  {
    double u = (a + b) * s1, w = (a + b) * s2;
    for (int i = 0; i <= m + 1; ++i) P += ipow(w, i) * ipow(u, m + 1 - i);
  }
  auto G = [&](double x) {
    double u = a * s1 + b * x, w = a * s2 + b * x;
    double Q = 0.0;
    for (int i = 0; i <= m + 1; ++i) Q += ipow(w, i) * ipow(u, m + 1 - i);
    return P - Q;
  };
  double g1 = G(s1), g2 = G(s2);
  if (!(g1 > 0.0 && g2 < 0.0))
    throw std::invalid_argument("solve_stilde: degenerate bracket");
  double r = bisect(G, s1, s2, 1e-15 * s2, 300);
  // The residual contract is on G itself; tighten with a secant polish.
  double h = 0.25 * (s2 - s1);
  double gr = G(r);
  double slope = (G(std::min(r + h, s2)) - G(std::max(r - h, s1))) /
                 (std::min(r + h, s2) - std::max(r - h, s1));
  if (std::abs(slope) > 0.0) r -= gr / slope;
  return std::clamp(r, s1, s2);
}

enum class PatchRegion {
  outside = 0,
  d1_plus, d2_plus, d3_plus,  // t >= t0 half
  d1_minus, d2_minus, d3_minus
};

struct AuxiliaryPatch {
  double a = 0.0, b = 0.0;    // down/up slope magnitudes
  double s01 = 0.0, s02 = 0.0;  // apex abscissae, 0 < s01 < s02
  double t0 = 0.0, L = 0.0;   // center time, half-height
  int m = 0;
  UniformPchip stilde;        // stilde(tau) on tau in [0, L]

  double s0() const { return 0.5 * (s01 + s02); }
  double s1_slope() const { return (s02 - s01) / (2.0 * L); }

  // Slice boundaries; defined for |t - t0| <= L.
  double s1(double t) const { return s01 + s1_slope() * std::abs(t - t0); }
  double s2(double t) const { return s02 - s1_slope() * std::abs(t - t0); }
  double stilde_at(double t) const { return stilde.value(std::abs(t - t0)); }
  double stilde1(double t) const {
    return (a * s1(t) + b * stilde_at(t)) / (a + b);
  }
  double stilde2(double t) const {
    return (a * s2(t) + b * stilde_at(t)) / (a + b);
  }

  // Signed time derivatives (odd about t0 by the even reflection).
  double s1_dt(double t) const {
    return (t >= t0 ? 1.0 : -1.0) * s1_slope();
  }
  double stilde_dt(double t) const {
    return (t >= t0 ? 1.0 : -1.0) * stilde.deriv(std::abs(t - t0));
  }

  bool contains(double s, double t) const {
    double tau = std::abs(t - t0);
    if (tau >= L) return false;
    return s > s1(t) && s < s2(t);
  }

  double area() const { return (s02 - s01) * L; }
};

inline AuxiliaryPatch build_patch(double a, double b, double s01, double s02,
                                  double t0, double L, int m,
                                  int samples = 257) {
  if (!(0.0 < s01 && s01 < s02))
    throw std::invalid_argument("build_patch: need 0 < s01 < s02");
  if (!(a > 0.0 && b > 0.0 && L > 0.0))
    throw std::invalid_argument("build_patch: need a, b, L > 0");
  if (samples < 5) throw std::invalid_argument("build_patch: samples < 5");

  AuxiliaryPatch p;
  p.a = a;
  p.b = b;
  p.s01 = s01;
  p.s02 = s02;
  p.t0 = t0;
  p.L = L;
  p.m = m;

  const double slope = (s02 - s01) / (2.0 * L);
  std::vector<double> table(samples);
  double h = L / static_cast<double>(samples - 1);
  for (int k = 0; k < samples; ++k) {
    double tau = h * static_cast<double>(k);
    double lo = s01 + slope * tau;
    double hi = s02 - slope * tau;
    table[k] = (k == samples - 1) ? p.s0() : solve_stilde(a, b, m, lo, hi);
  }
  p.stilde = UniformPchip(0.0, h, std::move(table));

  // Root-curve slope bound: |stilde'| <= (1 + (s02/s01)^m) |s1'|, checked
  // on table finite differences with 1% slack.
  double bound = (1.0 + ipow(s02 / s01, m)) * slope;
  for (int k = 0; k + 1 < samples; ++k) {
    double tau0 = h * static_cast<double>(k);
    double fd = (p.stilde.value(tau0 + h) - p.stilde.value(tau0)) / h;
    if (std::abs(fd) > 1.01 * bound)
      throw std::runtime_error("build_patch: stilde slope bound violated");
  }
  return p;
}

struct PatchEval {
  double value = 0.0;
  double ds = 0.0;
  double dt = 0.0;
  PatchRegion region = PatchRegion::outside;
};

// Regions are assigned left-closed in s: [s1, st1) -> D1, [st1, st2) -> D2,
// [st2, s2] -> D3; the t >= t0 half takes the plus tag.
inline PatchEval eval_patch(const AuxiliaryPatch& p, double s, double t) {
  PatchEval e;
  double tau = std::abs(t - p.t0);
  if (tau >= p.L) return e;
  double x1 = p.s1(t), x2 = p.s2(t);
  if (s < x1 || s > x2) return e;
  double st = p.stilde_at(t);
  double st1 = (p.a * x1 + p.b * st) / (p.a + p.b);
  double st2 = (p.a * x2 + p.b * st) / (p.a + p.b);
  bool plus = t >= p.t0;
  double sd1 = p.s1_dt(t);             // s2' = -s1'
  double std_ = p.stilde_dt(t);
  if (s < st1) {
    e.value = -p.a * (s - x1);
    e.ds = -p.a;
    e.dt = p.a * sd1;
    e.region = plus ? PatchRegion::d1_plus : PatchRegion::d1_minus;
  } else if (s < st2) {
    e.value = p.b * (s - st);
    e.ds = p.b;
    e.dt = -p.b * std_;
    e.region = plus ? PatchRegion::d2_plus : PatchRegion::d2_minus;
  } else {
    e.value = -p.a * (s - x2);
    e.ds = -p.a;
    e.dt = -p.a * sd1;
    e.region = plus ? PatchRegion::d3_plus : PatchRegion::d3_minus;
  }
  return e;
}

namespace detail {
// Antiderivative of tau^m (c1 tau + c0).
inline double moment_poly(int m, double c0, double c1, double x) {
  return c1 * ipow(x, m + 2) / static_cast<double>(m + 2) +
         c0 * ipow(x, m + 1) / static_cast<double>(m + 1);
}
}  // namespace detail

// Integral of tau^m vtilde(tau, t) from s1(t) to min(s, s2(t)); closed-form
// piecewise polynomial, exact up to the stilde root/interpolation tolerance.
inline double patch_moment(const AuxiliaryPatch& p, double s, double t) {
  double tau = std::abs(t - p.t0);
  if (tau >= p.L) return 0.0;
  double x1 = p.s1(t), x2 = p.s2(t);
  if (s <= x1) return 0.0;
  double st = p.stilde_at(t);
  double st1 = (p.a * x1 + p.b * st) / (p.a + p.b);
  double st2 = (p.a * x2 + p.b * st) / (p.a + p.b);
  double up = std::min(s, x2);
  double total = 0.0;
  // Region 1: vtilde = -a (tau - x1).
  {
    double hi = std::min(up, st1);
    if (hi > x1)
      total += detail::moment_poly(p.m, p.a * x1, -p.a, hi) -
               detail::moment_poly(p.m, p.a * x1, -p.a, x1);
  }
  // Region 2: vtilde = b (tau - st).
  if (up > st1) {
    double hi = std::min(up, st2);
    total += detail::moment_poly(p.m, -p.b * st, p.b, hi) -
             detail::moment_poly(p.m, -p.b * st, p.b, st1);
  }
  // Region 3: vtilde = -a (tau - x2).
  if (up > st2) {
    total += detail::moment_poly(p.m, p.a * x2, -p.a, up) -
             detail::moment_poly(p.m, p.a * x2, -p.a, st2);
  }
  return total;
}

// Time derivative of patch_moment at fixed s (differentiation under the
// integral; the time derivative of vtilde is constant per region).
inline double patch_moment_dt(const AuxiliaryPatch& p, double s, double t) {
  double tau = std::abs(t - p.t0);
  if (tau >= p.L) return 0.0;
  double x1 = p.s1(t), x2 = p.s2(t);
  if (s <= x1) return 0.0;
  double st = p.stilde_at(t);
  double st1 = (p.a * x1 + p.b * st) / (p.a + p.b);
  double st2 = (p.a * x2 + p.b * st) / (p.a + p.b);
  double up = std::min(s, x2);
  double sd1 = p.s1_dt(t);
  double std_ = p.stilde_dt(t);
  auto seg = [&](double lo, double hi) {
    return (ipow(hi, p.m + 1) - ipow(lo, p.m + 1)) /
           static_cast<double>(p.m + 1);
  };
  double total = 0.0;
  {
    double hi = std::min(up, st1);
    if (hi > x1) total += p.a * sd1 * seg(x1, hi);
  }
  if (up > st1) total += -p.b * std_ * seg(st1, std::min(up, st2));
  if (up > st2) total += -p.a * sd1 * seg(st2, up);
  return total;
}

struct PatchReport {
  bool boundary_zero = true;        // (a)
  bool gradient_consistent = true;  // (b)
  bool slope_values = true;         // (c)
  bool dt_bound = true;             // (d)
  bool moment_derivative = true;    // (e)
  bool moment_zero = true;          // (f)
  bool sup_value = true;            // (g)
  bool sup_moment = true;           // (h)
  double worst = 0.0;
  bool pass() const {
    return boundary_zero && gradient_consistent && slope_values && dt_bound &&
           moment_derivative && moment_zero && sup_value && sup_moment;
  }
};

inline PatchReport verify_patch(const AuxiliaryPatch& p, double tol) {
  PatchReport rep;
  const int nt = 41, ns = 41;
  double scale = (p.a + p.b) * (p.s02 - p.s01);
  double dt_bound = std::max(p.a, p.b) * (1.0 + ipow(p.s02 / p.s01, p.m)) *
                    (p.s02 - p.s01) / (2.0 * p.L);
  double sup_v = 0.25 * (p.a + p.b) * (p.s02 - p.s01);
  double sup_m = 0.25 * (p.a + p.b) * ipow(p.s02, p.m) *
                 (p.s02 - p.s01) * (p.s02 - p.s01);
  auto note = [&](double err, bool& flag, double limit) {
    if (err > limit) {
      flag = false;
      rep.worst = std::max(rep.worst, err);
    }
  };
  for (int j = 0; j <= nt; ++j) {
    double t = p.t0 - p.L + 2.0 * p.L * static_cast<double>(j) / nt;
    double tau = std::abs(t - p.t0);
    if (tau >= p.L) continue;
    double x1 = p.s1(t), x2 = p.s2(t);
    // (a) boundary zero.
    note(std::abs(eval_patch(p, x1, t).value), rep.boundary_zero, tol + 1e-12 * scale);
    note(std::abs(eval_patch(p, x2, t).value), rep.boundary_zero, tol + 1e-12 * scale);
    // (f) full slice moment vanishes.
    note(std::abs(patch_moment(p, x2, t)),
         rep.moment_zero, tol + 1e-10 * sup_m + 1e-14);
    for (int i = 1; i < ns; ++i) {
      double s = x1 + (x2 - x1) * static_cast<double>(i) / ns;
      PatchEval e = eval_patch(p, s, t);
      // (c) slope values.
      double slope_err = std::min(std::abs(e.ds + p.a), std::abs(e.ds - p.b));
      note(slope_err, rep.slope_values, tol);
      // (d) time-derivative bound.
      note(std::abs(e.dt) - dt_bound * (1.0 + 1e-9), rep.dt_bound, tol);
      // (g) sup bound.
      note(std::abs(e.value) - sup_v * (1.0 + 1e-12), rep.sup_value, tol);
      // (h) moment bound.
      note(std::abs(patch_moment(p, s, t)) - sup_m * (1.0 + 1e-12),
           rep.sup_moment, tol);
      // (b) gradient consistency away from region boundaries.
      double hs = 1e-7 * (p.s02 - p.s01);
      double ht = 1e-7 * p.L;
      PatchEval ea = eval_patch(p, s - hs, t);
      PatchEval eb = eval_patch(p, s + hs, t);
      if (ea.region == e.region && eb.region == e.region) {
        double fd = (eb.value - ea.value) / (2.0 * hs);
        note(std::abs(fd - e.ds), rep.gradient_consistent,
             tol + 1e-6 * (1.0 + std::abs(e.ds)));
      }
      PatchEval ta = eval_patch(p, s, t - ht);
      PatchEval tb = eval_patch(p, s, t + ht);
      if (ta.region == e.region && tb.region == e.region) {
        double fd = (tb.value - ta.value) / (2.0 * ht);
        note(std::abs(fd - e.dt), rep.gradient_consistent,
             tol + 2e-5 * (1.0 + std::abs(e.dt)));
        // (e) differentiation under the integral.
        double md = (patch_moment(p, s, t + ht) - patch_moment(p, s, t - ht)) /
                    (2.0 * ht);
        note(std::abs(md - patch_moment_dt(p, s, t)), rep.moment_derivative,
             tol + 2e-5 * (1.0 + std::abs(md)));
      }
    }
  }
  return rep;
}

}  // namespace pmweak

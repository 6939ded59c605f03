#pragma once

// Target set K (the flux curve), its open relaxation U, the interval I,
// membership tests, and the distance reductions used by the density step.
//
// Planar sets at radius s (m = n-1):
//   K(s)  = {(p, s^m sigma(p)) : |p| <= lambda}
//   U+(s) = {(p, q') : s^m sigma(lambda) < q' < s^m sigma(p),
//            lambda_minus < p < lambda}, U-(s) its odd reflection.
// Matrix samples carry (p, l; r21, q') with the row condition r21 = s^m v;
// the l coordinate enters K with |l| <= l0 and U with |l| < l0.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pmweak/flux.hpp"
#include "pmweak/numeric.hpp"

namespace pmweak {

struct InclusionSpec {
  FluxModel flux;
  double lambda = 0.0;
  double lambda_minus = 0.0;
  double l0 = 0.0;
  int m = 0;

  double sigma_lambda = 0.0;  // sigma(lambda)
  double sigma_one = 0.0;     // sigma(1), the peak value

  // Dense curve table over [-lambda, lambda] shared by distance queries.
  std::vector<double> curve_p;
  std::vector<double> curve_sigma;

  static InclusionSpec make(FluxModel flux, double lambda, double l0, int m,
                            int curve_samples = 4096) {
    InclusionSpec s;
    s.flux = std::move(flux);
    s.lambda = lambda;
    s.lambda_minus = pmweak::lambda_minus(s.flux, lambda);
    s.l0 = l0;
    s.m = m;
    s.sigma_lambda = s.flux.sigma(lambda);
    s.sigma_one = s.flux.sigma(1.0);
    s.curve_p.resize(curve_samples + 1);
    s.curve_sigma.resize(curve_samples + 1);
    for (int k = 0; k <= curve_samples; ++k) {
      double p = -lambda + 2.0 * lambda * static_cast<double>(k) / curve_samples;
      s.curve_p[k] = p;
      s.curve_sigma[k] = s.flux.sigma(p);
    }
    return s;
  }
};

struct GradientSample {
  double p = 0.0;        // v_s
  double l = 0.0;        // v_t
  double r21 = 0.0;      // phi_s, must equal s^m v
  double q_prime = 0.0;  // phi_t
  double s = 0.0;
  double v = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;
  bool contains(double x) const { return !empty && lo < x && x < hi; }
};

inline Interval interval_I(const InclusionSpec& spec, double s, double p) {
  if (!(s > 0.0)) throw std::invalid_argument("interval_I: s <= 0");
  double w = ipow(s, spec.m);
  if (p > spec.lambda_minus && p < spec.lambda)
    return {w * spec.sigma_lambda, w * spec.flux.sigma(p), false};
  if (p > -spec.lambda && p < -spec.lambda_minus)
    return {w * spec.flux.sigma(p), -w * spec.sigma_lambda, false};
  return {};
}

inline void require_row_condition(const GradientSample& g, int m) {
  double target = ipow(g.s, m) * g.v;
  if (std::abs(g.r21 - target) > 1e-8 * (1.0 + std::abs(target)))
    throw std::invalid_argument("gradient sample violates phi_s = s^m v");
}

inline bool in_U(const InclusionSpec& spec, const GradientSample& g) {
  require_row_condition(g, spec.m);
  if (!(std::abs(g.l) < spec.l0)) return false;
  return interval_I(spec, g.s, g.p).contains(g.q_prime);
}

namespace detail {
// Distance from (p, q') to {(p', s^m sigma(p')) : p' in [p_lo, p_hi]},
// dense scan on the shared table followed by golden-section refinement.
inline double arc_distance(const InclusionSpec& spec, double s, double p,
                           double q_prime, double p_lo, double p_hi) {
  double w = ipow(s, spec.m);
  double best = std::numeric_limits<double>::infinity();
  double best_p = p_lo;
  const std::size_t n = spec.curve_p.size();
  double step = 2.0 * spec.lambda / static_cast<double>(n - 1);
  auto k_lo = static_cast<std::size_t>(
      std::max(0.0, std::floor((p_lo + spec.lambda) / step)));
  auto k_hi = static_cast<std::size_t>(
      std::min(static_cast<double>(n - 1),
               std::ceil((p_hi + spec.lambda) / step)));
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    double pc = std::clamp(spec.curve_p[k], p_lo, p_hi);
    double qc = (pc == spec.curve_p[k]) ? w * spec.curve_sigma[k]
                                        : w * spec.flux.sigma(pc);
    double d2 = (p - pc) * (p - pc) + (q_prime - qc) * (q_prime - qc);
    if (d2 < best) {
      best = d2;
      best_p = pc;
    }
  }
  auto obj = [&](double pc) {
    double qc = w * spec.flux.sigma(pc);
    return (p - pc) * (p - pc) + (q_prime - qc) * (q_prime - qc);
  };
  double lo = std::max(p_lo, best_p - step);
  double hi = std::min(p_hi, best_p + step);
  double refined = golden_min(obj, lo, hi, 1e-12);
  return std::sqrt(std::min(best, obj(refined)));
}

// Distance from (p, q') to the horizontal segment q = q0, p in [p_lo, p_hi].
inline double segment_distance(double p, double q_prime, double p_lo,
                               double p_hi, double q0) {
  double dp = 0.0;
  if (p < p_lo) dp = p_lo - p;
  else if (p > p_hi) dp = p - p_hi;
  double dq = q_prime - q0;
  return std::sqrt(dp * dp + dq * dq);
}

// Distance in the (p, q') plane to the boundary of U(s) (both signs).
inline double boundary_U_distance(const InclusionSpec& spec, double s, double p,
                                  double q_prime) {
  double w = ipow(s, spec.m);
  // Positive component: curve cap over [lambda_minus, lambda] plus the
  // bottom segment at q' = s^m sigma(lambda).
  auto one_side = [&](double pp, double qq) {
    double cap = arc_distance(spec, s, pp, qq, spec.lambda_minus, spec.lambda);
    double base = segment_distance(pp, qq, spec.lambda_minus, spec.lambda,
                                   w * spec.sigma_lambda);
    return std::min(cap, base);
  };
  return std::min(one_side(p, q_prime), one_side(-p, -q_prime));
}

// True iff (p, q'/s^m) lies in the open planar set U+(s) or U-(s).
inline bool planar_in_U(const InclusionSpec& spec, double s, double p,
                        double q_prime) {
  return interval_I(spec, s, p).contains(q_prime);
}
}  // namespace detail

// Planar distance from (p, q') to the full curve K(s).
inline double curve_distance(const InclusionSpec& spec, double s,
                             double p, double q_prime) {
  if (!(s > 0.0)) throw std::invalid_argument("curve_distance: s <= 0");
  return detail::arc_distance(spec, s, p, q_prime, -spec.lambda, spec.lambda);
}

// Matrix distance to K reduces to the planar curve distance when |l| <= l0.
inline double matrix_distance_K(const InclusionSpec& spec,
                                const GradientSample& g) {
  require_row_condition(g, spec.m);
  if (std::abs(g.l) > spec.l0 * (1.0 + 1e-12))
    throw std::invalid_argument("matrix_distance_K: |l| > l0");
  return curve_distance(spec, g.s, g.p, g.q_prime);
}

// Distance components behind the gauge; exposed for the density step, which
// needs the K part and the boundary-of-U part separately.
struct GaugeParts {
  double dist_K = 0.0;        // to K(s, 0) in W-coordinates
  double dist_boundary_U = 0.0;  // to the relative boundary of U(s, 0)
  bool in_U_planar = false;   // planar membership of (p, q') with |l| < l0
};

inline GaugeParts gauge_parts(const InclusionSpec& spec,
                              const GradientSample& g) {
  if (!(g.s > 0.0)) throw std::invalid_argument("gauge_parts: s <= 0");
  double l_excess = std::max(0.0, std::abs(g.l) - spec.l0);
  double l_gap = std::abs(std::abs(g.l) - spec.l0);

  double planar_K = curve_distance(spec, g.s, g.p, g.q_prime);
  double planar_bd = detail::boundary_U_distance(spec, g.s, g.p, g.q_prime);
  bool inside = detail::planar_in_U(spec, g.s, g.p, g.q_prime);
  // Distance to the closure of the planar U set: zero inside, else to its
  // boundary.
  double planar_cl = inside ? 0.0 : planar_bd;

  GaugeParts parts;
  parts.dist_K = std::hypot(planar_K, l_excess);
  // Boundary of the (p, l, q') cylinder over U: side walls and end caps.
  double side = std::hypot(planar_bd, l_excess);
  double caps = std::hypot(planar_cl, l_gap);
  parts.dist_boundary_U = std::min(side, caps);
  parts.in_U_planar = inside && std::abs(g.l) < spec.l0;
  return parts;
}

// Gauge distance of Lemma form: P_W projection (drop the (2,1) entry) then
// distance to K(s,0) united with the relative boundary of U(s,0). Depends
// only on (p, l, q'), hence exactly translation invariant in v.
inline double gauge_d(const InclusionSpec& spec, const GradientSample& g) {
  GaugeParts parts = gauge_parts(spec, g);
  return std::min(parts.dist_K, parts.dist_boundary_U);
}

}  // namespace pmweak

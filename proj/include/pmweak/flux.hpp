#pragma once

// Nonmonotone flux models sigma(p) = a(p^2) p, branch inversion, and the
// monotone continuation sigma* used by the uniformly parabolic seed solve.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmweak/numeric.hpp"

namespace pmweak {

struct FluxModel {
  std::function<double(double)> a;        // diffusivity a(p), p >= 0
  std::function<double(double)> a_prime;  // a'(p)
  std::string label;
  std::optional<double> lambda_bar;

  // sigma(p) = a(p^2) p, odd in p.
  double sigma(double p) const { return a(p * p) * p; }

  // sigma'(p) = a(p^2) + 2 p^2 a'(p^2); even in p.
  double sigma_prime(double p) const {
    double q = p * p;
    return a(q) + 2.0 * q * a_prime(q);
  }
};

inline FluxModel make_flux_model(const std::string& name) {
  if (name == "pm_rational") {
    FluxModel f;
    f.a = [](double p) { return 1.0 / (1.0 + p); };
    f.a_prime = [](double p) { return -1.0 / ((1.0 + p) * (1.0 + p)); };
    f.label = "pm_rational";
    return f;
  }
  if (name == "pm_gaussian") {
    FluxModel f;
    f.a = [](double p) { return std::exp(-0.5 * p); };
    f.a_prime = [](double p) { return -0.5 * std::exp(-0.5 * p); };
    f.label = "pm_gaussian";
    return f;
  }
  throw std::invalid_argument("unknown flux model: " + name);
}

inline double eval_sigma(const FluxModel& model, double p) {
  if (!std::isfinite(p)) throw std::domain_error("eval_sigma: non-finite input");
  return model.sigma(p);
}

struct AdmissibilityReport {
  bool positivity_ok = true;   // a > 0 on samples
  bool sign_ok = true;         // 2p a'(p) + a(p) has the +/0/- sign pattern
  bool decay_ok = true;        // sigma(p) -> 0 for large p
  double worst_p = 0.0;
  double worst_value = 0.0;
  bool pass() const { return positivity_ok && sign_ok && decay_ok; }
};

// Samples 2p a'(p) + a(p); it must be positive for p < 1, zero at p = 1 and
// negative for p > 1. Also checks that sigma decays toward zero.
inline AdmissibilityReport check_admissible(const FluxModel& model,
                                            int sample_count) {
  if (sample_count < 10)
    throw std::invalid_argument("check_admissible: sample_count < 10");
  AdmissibilityReport rep;
  const double p_max = 50.0;
  auto expr = [&](double p) { return 2.0 * p * model.a_prime(p) + model.a(p); };
  for (int k = 0; k <= sample_count; ++k) {
    double p = p_max * static_cast<double>(k) / sample_count;
    double av = model.a(p);
    if (!(av > 0.0) && rep.positivity_ok) {
      rep.positivity_ok = false;
      rep.worst_p = p;
      rep.worst_value = av;
    }
    double e = expr(p);
    bool ok;
    if (p < 1.0 - 1e-9)
      ok = e > 0.0;
    else if (p > 1.0 + 1e-9)
      ok = e < 0.0;
    else
      ok = std::abs(e) <= 1e-8 * (1.0 + model.a(1.0));
    if (!ok && rep.sign_ok) {
      rep.sign_ok = false;
      rep.worst_p = p;
      rep.worst_value = e;
    }
  }
  // Exact sample at the sign change.
  double e1 = expr(1.0);
  if (std::abs(e1) > 1e-8 * (1.0 + model.a(1.0))) {
    rep.sign_ok = false;
    rep.worst_p = 1.0;
    rep.worst_value = e1;
  }
  double tail = std::abs(model.sigma(1e4));
  if (tail > 0.1 * std::abs(model.sigma(1.0))) {
    rep.decay_ok = false;
    rep.worst_p = 1e4;
    rep.worst_value = tail;
  }
  return rep;
}

struct BranchRoots {
  double p_minus;  // in (0, 1)
  double p_plus;   // in (1, inf)
};

// Roots of sigma(p) = q on the rising and falling branches, q in (0, sigma(1)).
inline BranchRoots invert_sigma(const FluxModel& model, double q) {
  double peak = model.sigma(1.0);
  if (!(q > 0.0 && q < peak))
    throw std::range_error("invert_sigma: q outside (0, sigma(1))");
  auto f = [&](double p) { return model.sigma(p) - q; };
  double p_minus = bisect(f, 0.0, 1.0, 1e-14, 400);
  double cap = 2.0;
  int guard = 0;
  while (model.sigma(cap) >= q) {
    cap *= 2.0;
    if (++guard > 200)
      throw std::runtime_error("invert_sigma: upper bracket search exhausted");
  }
  double p_plus = bisect(f, 1.0, cap, 1e-13 * cap, 400);
  // Polish both roots to the 1e-12 residual contract via local Newton steps.
  for (double* r : {&p_minus, &p_plus}) {
    for (int it = 0; it < 4; ++it) {
      double d = model.sigma_prime(*r);
      if (std::abs(d) < 1e-14) break;
      *r -= (model.sigma(*r) - q) / d;
    }
  }
  return {p_minus, p_plus};
}

// Lower branch root of sigma(p) = sigma(lambda) for lambda > 1.
inline double lambda_minus(const FluxModel& model, double lambda) {
  if (!(lambda > 1.0)) throw std::invalid_argument("lambda_minus: lambda <= 1");
  return invert_sigma(model, model.sigma(lambda)).p_minus;
}

// sup |sigma'| over [-2 lambda, 2 lambda] by dense sampling plus refinement.
inline double lipschitz_sigma(const FluxModel& model, double lambda) {
  const int n = 4096;
  const double hi = 2.0 * lambda;  // |sigma'| is even, sample [0, hi]
  double best = 0.0, best_p = 0.0;
  for (int k = 0; k <= n; ++k) {
    double p = hi * static_cast<double>(k) / n;
    double v = std::abs(model.sigma_prime(p));
    if (v > best) {
      best = v;
      best_p = p;
    }
  }
  double lo = std::max(0.0, best_p - hi / n);
  double up = std::min(hi, best_p + hi / n);
  double refined = golden_min(
      [&](double p) { return -std::abs(model.sigma_prime(p)); }, lo, up, 1e-12);
  return std::max(best, std::abs(model.sigma_prime(refined)));
}

// Odd C^2 monotone continuation of sigma:
//   sigma on [0, lambda_minus], a quintic blend on [lambda_minus, join],
//   then affine with slope c_lo. Satisfies sigma* < sigma(M) and
//   sigma* < sigma on (lambda_minus, M], with c_lo <= (sigma*)' <= C_hi.
class SigmaStar {
 public:
  SigmaStar() = default;

  double operator()(double p) const {
    if (p < 0.0) return -eval_pos(-p);
    return eval_pos(p);
  }
  double deriv(double p) const { return deriv_pos(std::abs(p)); }

  double lambda() const { return lambda_; }
  double lambda_minus() const { return lam_minus_; }
  double M() const { return M_; }
  double c_lo() const { return c_lo_; }
  double C_hi() const { return C_hi_; }
  double blend_lo() const { return lam_minus_; }
  double blend_hi() const { return join_; }
  const FluxModel& base() const { return base_; }

  friend SigmaStar build_sigma_star(const FluxModel&, double, double);

 private:
  double eval_pos(double p) const {
    if (p <= lam_minus_) return base_.sigma(p);
    if (p <= join_) {
      double x = p - lam_minus_;
      double r = 0.0;
      for (int k = 5; k >= 0; --k) r = r * x + coef_[k];
      return r;
    }
    return tail_value_ + c_lo_ * (p - join_);
  }

  double deriv_pos(double p) const {
    if (p <= lam_minus_) return base_.sigma_prime(p);
    if (p <= join_) {
      double x = p - lam_minus_;
      double r = 0.0;
      for (int k = 5; k >= 1; --k) r = r * x + static_cast<double>(k) * coef_[k];
      return r;
    }
    return c_lo_;
  }

  FluxModel base_;
  double lambda_ = 0.0, lam_minus_ = 0.0, M_ = 0.0;
  double join_ = 0.0, tail_value_ = 0.0;
  double c_lo_ = 0.0, C_hi_ = 0.0;
  std::array<double, 6> coef_{};
};

namespace detail {
// Quintic with f(0)=v0, f'(0)=d0, f''(0)=dd0, f(w)=v1, f'(w)=d1, f''(w)=dd1.
inline std::array<double, 6> quintic_hermite(double w, double v0, double d0,
                                             double dd0, double v1, double d1,
                                             double dd1) {
  std::array<double, 6> c{};
  c[0] = v0;
  c[1] = d0;
  c[2] = 0.5 * dd0;
  double w2 = w * w, w3 = w2 * w, w4 = w3 * w, w5 = w4 * w;
  double r0 = v1 - (c[0] + c[1] * w + c[2] * w2);
  double r1 = d1 - (c[1] + 2.0 * c[2] * w);
  double r2 = dd1 - 2.0 * c[2];
  // Solve for c3, c4, c5 from the 3x3 system at x = w.
  c[3] = (10.0 * r0 - 4.0 * r1 * w + 0.5 * r2 * w2) / w3;
  c[4] = (-15.0 * r0 + 7.0 * r1 * w - r2 * w2) / w4;
  c[5] = (6.0 * r0 - 3.0 * r1 * w + 0.5 * r2 * w2) / w5;
  return c;
}
}  // namespace detail

inline SigmaStar build_sigma_star(const FluxModel& model, double lambda,
                                  double M) {
  if (!(lambda > 1.0)) throw std::invalid_argument("build_sigma_star: lambda <= 1");
  double lm = lambda_minus(model, lambda);
  if (!(lm < M && M < lambda))
    throw std::invalid_argument("build_sigma_star: need lambda_minus < M < lambda");

  const double s0 = model.sigma(lm);
  const double d1 = model.sigma_prime(lm);
  const double h = 1e-5;
  const double dd1 =
      (model.sigma_prime(lm + h) - model.sigma_prime(lm - h)) / (2.0 * h);
  const double budget = model.sigma(M) - s0;  // > 0 since sigma(lambda) < sigma(M)
  if (!(budget > 0.0))
    throw std::runtime_error("build_sigma_star: sigma(M) <= sigma(lambda)");

  double c_lo = std::min(model.sigma_prime(0.5 * lm), d1) / 4.0;
  // Keep the affine tail shallow enough that sigma* stays below sigma(M) at M.
  c_lo = std::min(c_lo, 0.25 * budget / (M - lm));
  if (!(c_lo > 0.0))
    throw std::runtime_error("build_sigma_star: nonpositive tail slope");

  double w = std::min(0.5 * (M - lm), 0.5 * budget / (d1 + c_lo));
  std::string last_fail;
  for (int attempt = 0; attempt < 24; ++attempt, w *= 0.5) {
    SigmaStar out;
    out.base_ = model;
    out.lambda_ = lambda;
    out.lam_minus_ = lm;
    out.M_ = M;
    out.join_ = lm + w;
    out.c_lo_ = c_lo;
    double v_end = s0 + 0.5 * (d1 + c_lo) * w;
    out.coef_ = detail::quintic_hermite(w, s0, d1, dd1, v_end, c_lo, 0.0);
    out.tail_value_ = v_end;

    // Verify slope bounds, sigma* < sigma(M) and sigma* < sigma on the
    // supercritical range; shrink the blend window on failure.
    double c_hi = 0.0;
    bool ok = true;
    const int nv = 4000;
    double p_hi = std::max(3.0 * lambda, M);
    for (int k = 0; k <= nv && ok; ++k) {
      double p = p_hi * static_cast<double>(k) / nv;
      double dp = out.deriv_pos(p);
      c_hi = std::max(c_hi, dp);
      if (dp < 0.999 * c_lo) {
        ok = false;
        last_fail = "slope below c_lo";
      }
    }
    for (int k = 1; k <= nv && ok; ++k) {
      double p = lm + (M - lm) * static_cast<double>(k) / nv;
      double v = out.eval_pos(p);
      if (!(v < model.sigma(M))) {
        ok = false;
        last_fail = "sigma* >= sigma(M)";
      }
      if (!(v < model.sigma(p))) {
        ok = false;
        last_fail = "sigma* >= sigma";
      }
    }
    if (ok) {
      out.C_hi_ = c_hi;
      return out;
    }
  }
  throw std::runtime_error("build_sigma_star: verification failed (" +
                           last_fail + ")");
}

}  // namespace pmweak

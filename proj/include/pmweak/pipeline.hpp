#pragma once

// End-to-end pipeline: choose lambda from the initial gradient bound, build
// the monotone continuation, solve the classical seed, assemble the patched
// field, iterate density steps with a geometric epsilon/eta schedule, and
// evaluate the solution-property diagnostics (weak residual, strip identity,
// initial condition, Neumann edge, gradient bound, mass conservation).

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmweak/density.hpp"
#include "pmweak/field.hpp"
#include "pmweak/flux.hpp"
#include "pmweak/geometry.hpp"
#include "pmweak/parabolic.hpp"

namespace pmweak {

// lambda = M + epsilon when M >= 1; otherwise the upper branch root of
// sigma(p) = sigma(M) plus one, so that sigma(lambda) < sigma(M) holds in
// both cases and lambda_minus < M < lambda always.
inline double choose_lambda(double M, double epsilon, const FluxModel& flux) {
  if (!(M > 0.0)) throw std::invalid_argument("choose_lambda: M <= 0");
  if (M >= 1.0) return M + epsilon;
  return invert_sigma(flux, flux.sigma(M)).p_plus + 1.0;
}

struct RunConfig {
  int n = 2;
  double R = 1.0, T = 0.5;
  int Ns = 200, Nt = 200;
  std::string flux_name = "pm_rational";
  FluxModel flux_model;  // overrides flux_name when populated (custom table flux)
  std::function<double(double)> v0;
  double epsilon0 = 0.2;
  double eta0 = 0.05;
  int iterations = 2;
  std::uint64_t seed = 1;
  DensityOptions density;
};

inline FluxModel resolve_flux(const RunConfig& cfg) {
  return cfg.flux_model.a ? cfg.flux_model : make_flux_model(cfg.flux_name);
}

struct RunResult {
  PatchedField field;
  std::vector<DefectReport> reports;
  double M = 0.0, lambda = 0.0, lambda_minus = 0.0;
  double delta0 = 0.0, l0 = 0.0;
};

// Seed stage: classical solve with sigma*, stream function, strip width,
// time-derivative bound, and the sampled seed inclusion check (gradient in
// K on the strips, in K union U inside).
inline PatchedField build_seed_field(const RunConfig& cfg, RunResult& out) {
  if (!cfg.v0) throw std::invalid_argument("build_seed_field: missing v0");
  FluxModel flux = resolve_flux(cfg);

  double M = 0.0;
  const int fine = 4096;
  for (int k = 0; k < fine; ++k) {
    double s = cfg.R * (k + 0.5) / fine;
    double h = 0.5 * cfg.R / fine;
    M = std::max(M, std::abs(cfg.v0(s + h) - cfg.v0(s - h)) / (2.0 * h));
  }
  if (!(M > 0.0))
    throw std::invalid_argument("build_seed_field: constant initial data");
  double lambda = choose_lambda(M, cfg.epsilon0, flux);
  SigmaStar sstar = build_sigma_star(flux, lambda, M);

  ClassicalSolution sol =
      solve_classical(sstar, cfg.v0, cfg.n, cfg.R, cfg.T, cfg.Ns, cfg.Nt);
  stream_function(sol, sstar);
  double lam_minus = lambda_minus(flux, lambda);
  sol.delta0 = select_delta0(sol, lam_minus);
  sol.l0 = select_l0(sol);

  PatchedField field;
  field.spec = InclusionSpec::make(flux, lambda, sol.l0, cfg.n - 1);
  field.seed_flux = sstar;
  field.delta0 = sol.delta0;
  field.seed = std::move(sol);
  field.rebuild_index();

  // Sampled seed inclusion: every gradient sample must lie in K (to grid
  // tolerance) or in U; a failure means lambda and sigma* are inconsistent.
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x73656564u));
  std::uniform_real_distribution<double> us(1e-6 * cfg.R, cfg.R);
  std::uniform_real_distribution<double> ut(0.0, cfg.T);
  for (int k = 0; k < 2000; ++k) {
    GradientSample g = field.sample(us(rng), ut(rng));
    GaugeParts parts = gauge_parts(field.spec, g);
    bool ok = parts.dist_K <= 1e-6 ||
              (parts.in_U_planar && std::abs(g.l) < field.spec.l0);
    if (!ok)
      throw std::runtime_error("build_seed_field: seed escapes K union U");
  }

  out.M = M;
  out.lambda = lambda;
  out.lambda_minus = lam_minus;
  out.delta0 = field.delta0;
  out.l0 = field.spec.l0;
  return field;
}

inline RunResult run_pipeline(const RunConfig& cfg) {
  RunResult result;
  result.field = build_seed_field(cfg, result);
  for (int k = 0; k < cfg.iterations; ++k) {
    DensityOptions opt = cfg.density;
    opt.seed = mix_seed(cfg.seed, 0x69746572u + static_cast<unsigned>(k));
    auto [next, rep] = density_step(result.field, cfg.epsilon0 / ipow(2.0, k),
                                    cfg.eta0 / ipow(2.0, k), opt);
    result.field = std::move(next);
    result.reports.push_back(std::move(rep));
  }
  return result;
}

// Radial lift u(x,t) = v(|x|,t); |Du| = |v_s| away from the origin.
struct RadialSample {
  double r = 0.0, t = 0.0;
  double u = 0.0;
  double du_mag = 0.0;
};

inline RadialSample lift_radial(const PatchedField& field, double r, double t) {
  if (!(r >= 0.0 && r <= field.seed.R))
    throw std::invalid_argument("lift_radial: |x| outside [0, R]");
  FieldPoint f = field.at(r, t);
  RadialSample out;
  out.r = r;
  out.t = t;
  out.u = f.v;
  out.du_mag = r > 0.0 ? std::abs(f.vs) : 0.0;
  return out;
}

// Surface area of the unit sphere in R^n, for the polar mass identity
// integral of u over the ball = sphere_area(n) * integral of s^{n-1} v.
inline double sphere_area(int n) {
  return 2.0 * std::pow(std::acos(-1.0), 0.5 * n) / std::tgamma(0.5 * n);
}

// Mass at time t: the seed stream value at s = R plus the full-slice patch
// moments (each vanishes up to the root tolerance).
inline double field_mass(const PatchedField& field, double t) {
  int j = static_cast<int>(std::lround(t / field.seed.dt()));
  double total;
  if (std::abs(field.seed.t_of(j) - t) < 1e-12 * field.seed.T) {
    total = field.seed.phi[field.seed.idx(field.seed.Ns, j)];
  } else {
    total = field.at(field.seed.R, t).phi;
  }
  for (const auto& gen : field.generations)
    for (const AuxiliaryPatch& p : gen)
      if (std::abs(t - p.t0) < p.L) total += patch_moment(p, p.s02, t);
  return total;
}

struct TestFunction {
  std::string label;
  std::function<double(double, double)> xi, xi_s, xi_t;
};

// Battery of smooth test functions: polynomials in s times smooth time
// profiles, with analytic derivatives.
inline std::vector<TestFunction> default_battery(double R, double T) {
  std::vector<TestFunction> out;
  auto poly = [R](int k) {
    return std::pair<std::function<double(double)>,
                     std::function<double(double)>>(
        [R, k](double s) { return ipow(s / R, k); },
        [R, k](double s) {
          return k == 0 ? 0.0 : k * ipow(s / R, k - 1) / R;
        });
  };
  auto cosp = std::pair<std::function<double(double)>,
                        std::function<double(double)>>(
      [R](double s) { return std::cos(std::acos(-1.0) * s / R); },
      [R](double s) {
        double pi = std::acos(-1.0);
        return -pi / R * std::sin(pi * s / R);
      });
  auto tprof = [T](int k) {
    return std::pair<std::function<double(double)>,
                     std::function<double(double)>>(
        [T, k](double t) { return ipow(t / T, k); },
        [T, k](double t) {
          return k == 0 ? 0.0 : k * ipow(t / T, k - 1) / T;
        });
  };
  auto bump = std::pair<std::function<double(double)>,
                        std::function<double(double)>>(
      [T](double t) {
        double u = 2.0 * t / T - 1.0;
        return std::exp(-4.0 * u * u);
      },
      [T](double t) {
        double u = 2.0 * t / T - 1.0;
        return std::exp(-4.0 * u * u) * (-8.0 * u) * 2.0 / T;
      });
  struct SpacePart {
    std::string tag;
    std::pair<std::function<double(double)>, std::function<double(double)>> f;
  };
  std::vector<SpacePart> space = {
      {"1", poly(0)}, {"s", poly(1)}, {"s2", poly(2)}, {"coss", cosp}};
  std::vector<SpacePart> time = {{"1", tprof(0)}, {"t", tprof(1)}, {"bump", bump}};
  for (const auto& sp : space)
    for (const auto& tp : time) {
      if (out.size() >= 10) break;
      TestFunction tf;
      tf.label = sp.tag + "*" + tp.tag;
      auto sf = sp.f, tfp = tp.f;
      tf.xi = [sf, tfp](double s, double t) {
        return sf.first(s) * tfp.first(t);
      };
      tf.xi_s = [sf, tfp](double s, double t) {
        return sf.second(s) * tfp.first(t);
      };
      tf.xi_t = [sf, tfp](double s, double t) {
        return sf.first(s) * tfp.second(t);
      };
      out.push_back(std::move(tf));
    }
  return out;
}

struct ResidualResult {
  std::string label;
  double residual = 0.0;
  double bound = 0.0;  // a-priori: flux defect + mass variation + quadrature
  bool pass = false;
};

namespace detail {

// Tensor trapezoid of the weak-form functional and its bound ingredients at
// one resolution.
struct WeakQuad {
  double residual = 0.0;
  double flux_defect = 0.0;  // integral of |s^m sigma(v_s) - phi_t|
  double edge_sup = 0.0;     // sup |xi(R, t)|
  double grad_sup = 0.0;     // sup |xi_s|
};

inline WeakQuad weak_quadrature(const PatchedField& field,
                                const FluxModel& flux, const TestFunction& tf,
                                int qs, int qt) {
  const double R = field.seed.R, T = field.seed.T;
  const int m = field.spec.m;
  const double hs = R / qs, ht = T / qt;
  WeakQuad out;
  auto wq = [&](int k, int nq) { return (k == 0 || k == nq) ? 0.5 : 1.0; };

  double endpoints = 0.0;
  for (int i = 0; i <= qs; ++i) {
    double s = hs * i;
    double w = wq(i, qs) * hs * ipow(s, m);
    endpoints += w * (field.at(s, T).v * tf.xi(s, T) -
                      field.at(s, 0.0).v * tf.xi(s, 0.0));
  }
  double interior = 0.0;
  for (int j = 0; j <= qt; ++j) {
    double t = ht * j;
    double wt = wq(j, qt) * ht;
    out.edge_sup = std::max(out.edge_sup, std::abs(tf.xi(R, t)));
    for (int i = 0; i <= qs; ++i) {
      double s = hs * i;
      double w = wt * wq(i, qs) * hs;
      FieldPoint f = field.at(s, t);
      double smv = ipow(s, m);
      interior += w * (smv * f.v * tf.xi_t(s, t) -
                       smv * flux.sigma(f.vs) * tf.xi_s(s, t));
      out.flux_defect += w * std::abs(smv * flux.sigma(f.vs) - f.phit);
      out.grad_sup = std::max(out.grad_sup, std::abs(tf.xi_s(s, t)));
    }
  }
  out.residual = endpoints - interior;
  return out;
}

}  // namespace detail

// Total variation of the mass curve on a uniform time grid.
inline double mass_variation(const PatchedField& field, int qt) {
  double total = 0.0;
  double prev = field_mass(field, 0.0);
  for (int j = 1; j <= qt; ++j) {
    double cur = field_mass(field, field.seed.T * j / qt);
    total += std::abs(cur - prev);
    prev = cur;
  }
  return total;
}

// Weak residual of the field against one test function, with the identity
//   residual = integral of mass'(t) xi(R,t) + integral of
//              (s^m sigma(v_s) - phi_t) xi_s
// supplying the a-priori bound; the quadrature term is the Richardson gap
// between the coarse and halved grids.
inline ResidualResult weak_residual(const PatchedField& field,
                                    const FluxModel& flux,
                                    const TestFunction& tf, int qs, int qt,
                                    double mass_var = -1.0) {
  detail::WeakQuad coarse = detail::weak_quadrature(field, flux, tf, qs, qt);
  detail::WeakQuad fine =
      detail::weak_quadrature(field, flux, tf, 2 * qs, 2 * qt);
  if (mass_var < 0.0) mass_var = mass_variation(field, 2 * qt);
  ResidualResult out;
  out.label = tf.label;
  out.residual = fine.residual;
  double quad = 3.0 * std::abs(fine.residual - coarse.residual) +
                std::abs(fine.flux_defect - coarse.flux_defect);
  out.bound = fine.grad_sup * fine.flux_defect + fine.edge_sup * mass_var +
              quad + 1e-10;
  out.pass = std::abs(out.residual) <= out.bound;
  return out;
}

struct Diagnostics {
  std::vector<ResidualResult> residuals;
  double max_residual = 0.0;
  bool pass_residual = true;      // (a)
  bool strips_equal_seed = true;  // (b)
  bool initial_exact = true;      // (c)
  double neumann_edge = 0.0;
  bool pass_neumann = true;       // (d)
  double grad_sup = 0.0;
  double grad_limit = 0.0;
  bool pass_gradient = true;      // (e)
  double mass_drift_rel = 0.0;
  bool pass_mass = true;          // (f)
  bool pass() const {
    return pass_residual && strips_equal_seed && initial_exact &&
           pass_neumann && pass_gradient && pass_mass;
  }
};

inline Diagnostics diagnostics(const RunResult& result, const RunConfig& cfg,
                               int qs = 200, int qt = 100) {
  Diagnostics diag;
  const PatchedField& field = result.field;
  FluxModel flux = resolve_flux(cfg);

  double mass_var = mass_variation(field, 2 * qt);
  for (const TestFunction& tf : default_battery(cfg.R, cfg.T)) {
    ResidualResult rr = weak_residual(field, flux, tf, qs, qt, mass_var);
    diag.max_residual = std::max(diag.max_residual, std::abs(rr.residual));
    if (!rr.pass) diag.pass_residual = false;
    diag.residuals.push_back(std::move(rr));
  }

  // (b) strips: the field must coincide with the seed interpolant on the
  // delta0 strips, exactly.
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x64696167u));
  std::uniform_real_distribution<double> ut(0.0, cfg.T);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    double t = ut(rng);
    double s = pick(rng) < 0.5 ? pick(rng) * field.delta0
                               : cfg.R - pick(rng) * field.delta0;
    FieldPoint f = field.at(s, t);
    for (int id : f.patch_of_generation)
      if (id >= 0) diag.strips_equal_seed = false;
  }

  // (c) t = 0: no patch touches the initial row (they live in open time
  // intervals) and the seed row reproduces the initial samples exactly.
  for (int i = 0; i <= field.seed.Ns; ++i) {
    double s = field.seed.s_of(i);
    if (field.inside_any_patch(s, 0.0)) diag.initial_exact = false;
    if (cfg.v0 && field.seed.v[field.seed.idx(i, 0)] != cfg.v0(s))
      diag.initial_exact = false;
  }

  // (d) Neumann edge: v_s(R, t) = 0 on the seed grid.
  for (int j = 0; j <= field.seed.Nt; ++j)
    diag.neumann_edge = std::max(
        diag.neumann_edge,
        std::abs(field.seed.vs[field.seed.idx(field.seed.Ns, j)]));
  diag.pass_neumann = diag.neumann_edge == 0.0;

  // (e) gradient bound |v_s| <= M + epsilon (supercritical statement).
  std::uniform_real_distribution<double> us(0.0, cfg.R);
  for (int k = 0; k < 100000; ++k)
    diag.grad_sup =
        std::max(diag.grad_sup, std::abs(field.at(us(rng), ut(rng)).vs));
  diag.grad_limit = result.M + cfg.epsilon0 + 1e-6;
  diag.pass_gradient = result.M < 1.0 || diag.grad_sup <= diag.grad_limit;

  // (f) mass conservation.
  double m0 = field_mass(field, 0.0);
  double scale = std::max(std::abs(m0), 1e-12);
  for (int j = 0; j <= 64; ++j) {
    double drift = std::abs(field_mass(field, cfg.T * j / 64.0) - m0) / scale;
    diag.mass_drift_rel = std::max(diag.mass_drift_rel, drift);
  }
  diag.pass_mass = diag.mass_drift_rel <= 1e-4;
  return diag;
}

}  // namespace pmweak

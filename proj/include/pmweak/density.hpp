#pragma once

// One density step: split the field into C1 pieces, pick the distance
// threshold delta_i per piece, cover the far-from-K part by squares and each
// square by diamonds, glue one sawtooth patch per diamond, and account for
// everything that was not covered. The output bound reads
//   defect <= epsilon |J*_T| + sum of N-weighted uncovered charges,
// with every charge recorded in the report.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pmweak/covering.hpp"
#include "pmweak/field.hpp"
#include "pmweak/flux.hpp"
#include "pmweak/geometry.hpp"
#include "pmweak/numeric.hpp"
#include "pmweak/patch.hpp"

namespace pmweak {

struct DeltaSelection {
  int piece = 0;
  double delta_i = 0.0;
  double N_i = 0.0;        // max distance to K over the piece samples
  double area_K2 = 0.0;    // on K
  double area_K3a = 0.0;   // in U, close to K
  double area_K3b = 0.0;   // in U, close to the boundary of U
  double ghat_fraction = 0.0;  // fraction of the piece with d_i > delta_i
  bool satisfied = false;
  bool pathological = false;
};

struct DensityOptions {
  int mc_samples = 4000;        // per piece, delta selection
  int defect_samples = 100000;  // final report
  int lip_samples = 200;
  double square_coverage = 0.98;
  double diamond_coverage = 0.95;
  std::size_t max_pieces = 64;
  std::size_t max_squares_per_piece = 64;
  std::size_t max_diamonds_per_square = 1024;
  std::size_t max_patches = 200000;
  int table_samples = 17;  // stilde table per patch
  std::uint64_t seed = 1;
  double inclusion_band = 1e-6;
  double inclusion_tolerance = 1e-6;
};

struct DefectReport {
  double epsilon = 0.0, eta = 0.0;
  double strip_area = 0.0;
  double defect_estimate = 0.0;  // Monte-Carlo integral of dist(grad, K)
  double defect_stderr = 0.0;
  double uncovered_area = 0.0;
  double uncovered_charge = 0.0;  // N-weighted area missed by the covers
  double defect_bound = 0.0;      // epsilon * strip_area + uncovered_charge
  double N_max = 0.0;
  double sup_displacement = 0.0;  // analytic per-patch bound, max over patches
  double sampled_displacement = 0.0;
  double inclusion_pass_fraction = 0.0;
  double vt_max_patch = 0.0;  // max |v_t| sampled inside new patches
  double patch_inclusion_fraction = 1.0;  // stratified census over patches
  double l0 = 0.0;
  std::size_t pieces_processed = 0, pieces_total = 0;
  std::size_t squares_total = 0;
  std::vector<std::size_t> generation_counts;
  std::vector<DeltaSelection> selections;
  bool capped = false;  // some budget (pieces/squares/diamonds/patches) hit
  bool pass_defect = false, pass_displacement = false;
  bool pass_inclusion = false, pass_vt = false;
  bool pass() const {
    return pass_defect && pass_displacement && pass_inclusion && pass_vt;
  }
};

namespace detail {

// Worst distance any admissible gradient can have to K: used to charge
// regions that were never sampled (skipped or pathological pieces).
inline double distance_ceiling(const InclusionSpec& spec, double R) {
  double q_span = 2.0 * ipow(R, spec.m) * spec.sigma_one;
  return std::hypot(2.0 * spec.lambda, q_span) + spec.l0;
}

inline std::pair<double, double> uniform_in(std::mt19937_64& rng, double lo,
                                            double hi, double lo2,
                                            double hi2) {
  std::uniform_real_distribution<double> dx(lo, hi), dy(lo2, hi2);
  double x = dx(rng);
  double y = dy(rng);
  return {x, y};
}

// Rejection-sample points of a piece; returns false when the piece looks
// empty (acceptance below ~1/max_tries_per_point).
inline bool sample_piece(const PatchedField& field, const Piece& piece,
                         int count, std::mt19937_64& rng,
                         std::vector<std::pair<double, double>>& out) {
  out.clear();
  out.reserve(count);
  long tries = 0;
  const long cap = 200L * count;
  while (static_cast<int>(out.size()) < count && tries < cap) {
    ++tries;
    auto [s, t] = uniform_in(rng, piece.x0, piece.x1, piece.y0, piece.y1);
    if (piece.contains(field, s, t)) out.emplace_back(s, t);
  }
  return static_cast<int>(out.size()) == count;
}

}  // namespace detail

// Halve delta from epsilon/4 until
//   delta |J*_T| + N_i |K3b(delta)| <= epsilon / 2^{i+1} |J*_T|
// holds with Monte-Carlo measures, then jitter delta so the level set
// {d_i = delta} carries no sample mass.
inline DeltaSelection select_delta_i(const PatchedField& field,
                                     const Piece& piece, double epsilon, int i,
                                     int samples, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("select_delta_i: epsilon");
  DeltaSelection sel;
  sel.piece = i;
  std::mt19937_64 rng(mix_seed(seed, 0x64656c74u + static_cast<unsigned>(i)));
  std::vector<std::pair<double, double>> pts;
  if (!detail::sample_piece(field, piece, samples, rng, pts)) {
    sel.pathological = true;
    return sel;
  }
  struct Probe {
    double dist_K, dist_bd;
    bool in_u;
  };
  std::vector<Probe> probes;
  probes.reserve(pts.size());
  for (auto [s, t] : pts) {
    GradientSample g = field.sample(s, t);
    GaugeParts parts = gauge_parts(field.spec, g);
    probes.push_back({parts.dist_K, parts.dist_boundary_U, parts.in_U_planar});
    sel.N_i = std::max(sel.N_i, parts.dist_K);
  }
  const double strip = field.strip_area();
  const double budget = epsilon / std::pow(2.0, i + 1) * strip;
  const double per_pt = piece.area / static_cast<double>(probes.size());
  double delta = epsilon / 4.0;
  for (int halvings = 0; halvings < 64; ++halvings) {
    double k2 = 0.0, k3a = 0.0, k3b = 0.0, ghat = 0.0;
    for (const Probe& pr : probes) {
      double d = std::min(pr.dist_K, pr.dist_bd);
      if (d > delta) ghat += 1.0;
      if (!pr.in_u) {
        if (pr.dist_K <= 1e-12) k2 += per_pt;
        continue;
      }
      if (pr.dist_K <= delta) k3a += per_pt;
      if (pr.dist_bd <= delta) k3b += per_pt;
    }
    if (delta * strip + sel.N_i * k3b <= budget) {
      sel.delta_i = delta;
      sel.area_K2 = k2;
      sel.area_K3a = k3a;
      sel.area_K3b = k3b;
      sel.ghat_fraction = ghat / static_cast<double>(probes.size());
      sel.satisfied = true;
      break;
    }
    delta *= 0.5;
    if (delta < 1e-14) {
      sel.pathological = true;
      return sel;
    }
  }
  // Nudge off any sampled level set so {d_i = delta_i} has zero measure.
  std::uniform_real_distribution<double> jit(1.0, 1.0 + 1e-9);
  sel.delta_i /= jit(rng);
  return sel;
}

// Lipschitz estimate of the gradient map over a piece by finite differences
// at sampled interior points, skipping stencils that cross patch regions.
inline double lipschitz_gradient(const PatchedField& field, const Piece& piece,
                                 int samples, std::mt19937_64& rng) {
  std::vector<std::pair<double, double>> pts;
  if (!detail::sample_piece(field, piece, samples, rng, pts)) return 0.0;
  double diag = std::hypot(piece.x1 - piece.x0, piece.y1 - piece.y0);
  double h = 1e-4 * diag;
  double worst = 0.0;
  auto grad = [&](double s, double t) {
    FieldPoint f = field.at(s, t);
    return std::array<double, 3>{f.vs, f.vt, f.phit};
  };
  for (auto [s, t] : pts) {
    for (int axis = 0; axis < 2; ++axis) {
      double sa = s + (axis == 0 ? h : 0.0), ta = t + (axis == 1 ? h : 0.0);
      if (!piece.contains(field, sa, ta)) continue;
      auto ga = grad(s, t), gb = grad(sa, ta);
      double d = 0.0;
      for (int c = 0; c < 3; ++c) d += (gb[c] - ga[c]) * (gb[c] - ga[c]);
      worst = std::max(worst, std::sqrt(d) / h);
    }
  }
  return worst;
}

// Side bound for the squares covering G_hat: min of eta_i/sqrt(2), the two
// displacement terms, and the s^m-inhomogeneity term delta_i/(12 M_g sigma(1)).
inline double square_side_bound(const PatchedField& field, const Piece& piece,
                                double delta_i, double eta, double lip_est) {
  const InclusionSpec& spec = field.spec;
  const double R = field.seed.R;
  double gap = spec.lambda - spec.lambda_minus;
  double m_sigma = lipschitz_sigma(spec.flux, 2.0 * spec.lambda);
  double rho = 0.99 * std::min(1.0 / 6.0,
                               1.0 / (12.0 * ipow(R, spec.m) * m_sigma));
  double eta_i = lip_est > 0.0
                     ? rho * delta_i / lip_est
                     : std::hypot(piece.x1 - piece.x0, piece.y1 - piece.y0);
  double t1 = eta_i / std::sqrt(2.0);
  double t2 = 4.0 * eta / (std::sqrt(2.0) * gap);
  double t3 = std::sqrt(4.0 * eta / (std::sqrt(2.0) * gap * ipow(R, spec.m)));
  double m_g = spec.m * ipow(R, std::max(0, spec.m - 1));  // max of the
  // divided difference of s^m over [-R, R]^2; zero when m = 0
  double t4 = spec.m == 0 ? std::numeric_limits<double>::infinity()
                          : delta_i / (12.0 * m_g * spec.sigma_one);
  return std::min(std::min(t1, t2), std::min(t3, t4));
}

// Sawtooth amplitudes at a square center: a, b > 0 with the displaced
// points (p - a, q') and (p + b, q') at planar distance delta_i/2 from the
// curve and still inside U.
inline std::pair<double, double> amplitudes(const InclusionSpec& spec,
                                            const GradientSample& center,
                                            double delta_i) {
  double s = center.s;
  double sign = center.p >= 0.0 ? 1.0 : -1.0;
  double p = sign * center.p;
  double q = sign * center.q_prime;
  double w = ipow(s, spec.m);
  double ratio = q / w;
  if (!(ratio > 0.0 && ratio < spec.sigma_one))
    throw std::invalid_argument("amplitudes: center level off the branch");
  BranchRoots roots = invert_sigma(spec.flux, ratio);
  double h0 = curve_distance(spec, s, p, q);
  if (!(h0 > 0.5 * delta_i))
    throw std::invalid_argument("amplitudes: center too close to the curve");
  auto solve = [&](double reach, double dir) {
    auto f = [&](double x) {
      return curve_distance(spec, s, p + dir * x, q) - 0.5 * delta_i;
    };
    return bisect(f, 0.0, reach, 1e-13, 200);
  };
  double a = solve(p - roots.p_minus, -1.0);
  double b = solve(roots.p_plus - p, +1.0);
  if (!(detail::planar_in_U(spec, s, sign * (p - a), sign * q) &&
        detail::planar_in_U(spec, s, sign * (p + b), sign * q)))
    throw std::runtime_error("amplitudes: displaced points escaped U");
  return {a, b};
}

// Diamond aspect bound combining both inhomogeneity terms.
inline double xi_bound(double delta_i, const InclusionSpec& spec,
                       double delta0, double R) {
  if (!(delta_i > 0.0 && delta0 > 0.0 && delta0 < 0.5 * R))
    throw std::invalid_argument("xi_bound: bad inputs");
  double gap = spec.lambda - spec.lambda_minus;
  double bracket = 1.0 + ipow((R - delta0) / delta0, spec.m);
  double t1 = delta_i / (2.0 * gap * bracket);
  double t2 = delta_i /
              (6.0 * (R - 2.0 * delta0) * ipow(R - delta0, spec.m) * gap *
               bracket);
  return std::min(t1, t2);
}

inline std::pair<PatchedField, DefectReport> density_step(
    const PatchedField& field, double epsilon, double eta,
    const DensityOptions& opt = {}) {
  DefectReport rep;
  rep.epsilon = epsilon;
  rep.eta = eta;
  rep.strip_area = field.strip_area();
  rep.l0 = field.spec.l0;
  const double ceiling = detail::distance_ceiling(field.spec, field.seed.R);

  std::vector<Piece> pieces = decompose_pieces(field);
  rep.pieces_total = pieces.size();
  std::stable_sort(pieces.begin(), pieces.end(),
                   [](const Piece& a, const Piece& b) { return a.area > b.area; });

  std::vector<AuxiliaryPatch> fresh;
  bool patch_budget_hit = false;
  for (std::size_t ord = 0; ord < pieces.size(); ++ord) {
    const Piece& piece = pieces[ord];
    if (!(piece.area > 0.0)) continue;
    const int i = static_cast<int>(ord) + 1;
    if (ord >= opt.max_pieces || patch_budget_hit) {
      rep.uncovered_area += piece.area;
      rep.uncovered_charge += piece.area * ceiling;
      rep.capped = true;
      continue;
    }
    DeltaSelection sel =
        select_delta_i(field, piece, epsilon, i, opt.mc_samples, opt.seed);
    rep.selections.push_back(sel);
    rep.N_max = std::max(rep.N_max, sel.N_i);
    ++rep.pieces_processed;
    if (sel.pathological) {
      rep.uncovered_area += piece.area;
      rep.uncovered_charge += piece.area * ceiling;
      continue;
    }
    if (sel.ghat_fraction <= 0.0) continue;  // K-hat covers the piece

    std::mt19937_64 rng(mix_seed(opt.seed, 0x6c697000u + ord));
    double lip = lipschitz_gradient(field, piece, opt.lip_samples, rng);
    double side = square_side_bound(field, piece, sel.delta_i, eta, lip);
    double delta_i = sel.delta_i;

    Region ghat;
    ghat.x0 = piece.x0;
    ghat.y0 = piece.y0;
    ghat.x1 = piece.x1;
    ghat.y1 = piece.y1;
    ghat.area = sel.ghat_fraction * piece.area;
    ghat.contains = [&field, &piece, delta_i](double s, double t) {
      if (!piece.contains(field, s, t)) return false;
      GradientSample g = field.sample(s, t);
      GaugeParts parts = gauge_parts(field.spec, g);
      return parts.in_U_planar &&
             std::min(parts.dist_K, parts.dist_boundary_U) > delta_i;
    };
    SquareCoverOptions sq_opt;
    sq_opt.max_elements = opt.max_squares_per_piece;
    CoverPlan squares =
        cover_squares(ghat, side, opt.square_coverage, sq_opt);
    rep.uncovered_area += squares.uncovered_area;
    rep.uncovered_charge += squares.uncovered_area * sel.N_i;
    if (squares.shortfall) rep.capped = true;
    rep.squares_total += squares.elements.size();

    double xi = xi_bound(delta_i, field.spec, field.delta0, field.seed.R);
    for (const CoverElement& sq : squares.elements) {
      double sq_area = sq.scale * sq.scale;
      GradientSample center = field.sample(sq.cx, sq.cy);
      GaugeParts parts = gauge_parts(field.spec, center);
      if (!(parts.in_U_planar &&
            std::min(parts.dist_K, parts.dist_boundary_U) > delta_i)) {
        rep.uncovered_area += sq_area;
        rep.uncovered_charge += sq_area * sel.N_i;
        continue;
      }
      auto [a, b] = amplitudes(field.spec, center, delta_i);
      // amplitudes works on the mirrored (positive-branch) point; on the
      // negative branch the down/up roles of the sawtooth slopes swap.
      if (center.p < 0.0) std::swap(a, b);
      DiamondCoverOptions dia_opt;
      dia_opt.max_elements = opt.max_diamonds_per_square;
      CoverPlan diamonds = cover_diamonds(sq.cx, sq.cy, sq.scale, xi,
                                          opt.diamond_coverage, dia_opt);
      rep.uncovered_area += diamonds.uncovered_area;
      rep.uncovered_charge += diamonds.uncovered_area * sel.N_i;
      if (diamonds.shortfall) rep.capped = true;
      for (const CoverElement& d : diamonds.elements) {
        if (fresh.size() >= opt.max_patches) {
          patch_budget_hit = true;
          rep.capped = true;
          // Remaining area of this square's cover is charged wholesale.
          rep.uncovered_area += diamonds.covered_area;
          rep.uncovered_charge += diamonds.covered_area * sel.N_i;
          break;
        }
        fresh.push_back(build_patch(a, b, d.cx - d.scale * xi,
                                    d.cx + d.scale * xi, d.cy, d.scale,
                                    field.spec.m, opt.table_samples));
        double sup_v = 0.25 * (a + b) * 2.0 * d.scale * xi;
        double sup_m = 0.25 * (a + b) * ipow(d.cx + d.scale * xi, field.spec.m) *
                       (2.0 * d.scale * xi) * (2.0 * d.scale * xi);
        rep.sup_displacement =
            std::max(rep.sup_displacement, std::hypot(sup_v, sup_m));
      }
      if (patch_budget_hit) break;
    }
  }

  PatchedField next = field;
  next.rebuild_index();
  next.add_generation(std::move(fresh));
  for (const auto& gen : next.generations)
    rep.generation_counts.push_back(gen.size());

  // Final Monte-Carlo audit over the whole strip.
  std::mt19937_64 rng(mix_seed(opt.seed, 0x61756469u));
  std::uniform_real_distribution<double> us(next.s_lo(), next.s_hi());
  std::uniform_real_distribution<double> ut(0.0, next.seed.T);
  double sum = 0.0, sum2 = 0.0;
  long checked = 0, passed = 0;
  const std::size_t g_new = next.generations.size() - 1;
  auto region_tag = [&](double s, double t) {
    long tag = 0;
    for (std::size_t g = 0; g < next.generations.size(); ++g) {
      int k = next.patch_at(g, s, t);
      int r = k < 0 ? 0
                    : static_cast<int>(
                          eval_patch(next.generations[g][k], s, t).region);
      tag = tag * 1315423911L + (k + 2) * 7 + r;
    }
    return tag;
  };
  for (int k = 0; k < opt.defect_samples; ++k) {
    double s = us(rng), t = ut(rng);
    GradientSample g = next.sample(s, t);
    GaugeParts parts = gauge_parts(next.spec, g);
    sum += parts.dist_K;
    sum2 += parts.dist_K * parts.dist_K;
    FieldPoint now = next.at(s, t);
    FieldPoint before = field.at(s, t);
    rep.sampled_displacement =
        std::max(rep.sampled_displacement,
                 std::hypot(now.v - before.v, now.phi - before.phi));
    if (now.patch_of_generation[g_new] >= 0)
      rep.vt_max_patch = std::max(rep.vt_max_patch, std::abs(now.vt));
    // Inclusion census, excluding a thin band around region boundaries.
    long tag = region_tag(s, t);
    if (tag == region_tag(s - opt.inclusion_band, t) &&
        tag == region_tag(s + opt.inclusion_band, t) &&
        tag == region_tag(s, t - opt.inclusion_band) &&
        tag == region_tag(s, t + opt.inclusion_band)) {
      ++checked;
      if (parts.dist_K <= opt.inclusion_tolerance ||
          (parts.in_U_planar && std::abs(g.l) < next.spec.l0))
        ++passed;
    }
  }
  // Stratified census over the new patches: the uniform audit above almost
  // never lands inside them when their total area is microscopic.
  {
    const auto& fresh_gen = next.generations[g_new];
    std::size_t census = std::min<std::size_t>(fresh_gen.size(), 2000);
    std::size_t stride = fresh_gen.empty() ? 1 : fresh_gen.size() / std::max<std::size_t>(census, 1);
    long pchecked = 0, ppassed = 0;
    for (std::size_t k = 0; k < census; ++k) {
      const AuxiliaryPatch& p = fresh_gen[k * stride];
      std::uniform_real_distribution<double> ps(p.s01, p.s02);
      std::uniform_real_distribution<double> pt(p.t0 - p.L, p.t0 + p.L);
      for (int q = 0; q < 5; ++q) {
        double s = ps(rng), t = pt(rng);
        if (!p.contains(s, t)) continue;
        FieldPoint now = next.at(s, t);
        FieldPoint before = field.at(s, t);
        rep.sampled_displacement =
            std::max(rep.sampled_displacement,
                     std::hypot(now.v - before.v, now.phi - before.phi));
        rep.vt_max_patch = std::max(rep.vt_max_patch, std::abs(now.vt));
        GradientSample g = next.sample(s, t);
        GaugeParts parts = gauge_parts(next.spec, g);
        // Band exclusion in units of the patch, not the strip.
        double band_s = 1e-6 * (p.s02 - p.s01);
        double band_t = 1e-6 * p.L;
        PatchRegion r0 = eval_patch(p, s, t).region;
        if (eval_patch(p, s - band_s, t).region != r0 ||
            eval_patch(p, s + band_s, t).region != r0 ||
            eval_patch(p, s, t - band_t).region != r0 ||
            eval_patch(p, s, t + band_t).region != r0)
          continue;
        ++pchecked;
        if (parts.dist_K <= opt.inclusion_tolerance ||
            (parts.in_U_planar && std::abs(g.l) < next.spec.l0))
          ++ppassed;
      }
    }
    if (pchecked > 0)
      rep.patch_inclusion_fraction =
          static_cast<double>(ppassed) / pchecked;
  }

  double nmc = static_cast<double>(opt.defect_samples);
  double mean = sum / nmc;
  double var = std::max(0.0, sum2 / nmc - mean * mean);
  rep.defect_estimate = mean * rep.strip_area;
  rep.defect_stderr = std::sqrt(var / nmc) * rep.strip_area;
  rep.inclusion_pass_fraction =
      checked > 0 ? static_cast<double>(passed) / checked : 1.0;
  rep.defect_bound = epsilon * rep.strip_area + rep.uncovered_charge;
  rep.pass_defect =
      rep.defect_estimate <= rep.defect_bound + 3.0 * rep.defect_stderr;
  rep.pass_displacement = rep.sup_displacement <= eta &&
                          rep.sampled_displacement <= eta * (1.0 + 1e-9);
  rep.pass_inclusion = rep.inclusion_pass_fraction >= 0.999 &&
                       rep.patch_inclusion_fraction >= 0.999;
  rep.pass_vt = rep.vt_max_patch < rep.l0;
  return {std::move(next), rep};
}

}  // namespace pmweak

#pragma once

// Patched field: the classical seed plus generations of disjoint sawtooth
// patches. Evaluation is seed interpolant + at most one patch contribution
// per generation; the stream row condition phi_s = s^m v holds exactly
// because the phi perturbation is the closed-form patch moment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pmweak/flux.hpp"
#include "pmweak/geometry.hpp"
#include "pmweak/parabolic.hpp"
#include "pmweak/patch.hpp"

namespace pmweak {

// Uniform-bucket lookup for one generation of pairwise disjoint patches.
// Cell sizes track the largest patch extent so a query touches one cell.
class GenerationIndex {
 public:
  GenerationIndex() = default;

  GenerationIndex(const std::vector<AuxiliaryPatch>& patches, double s_lo,
                  double s_hi, double t_lo, double t_hi) {
    s0_ = s_lo;
    t0_ = t_lo;
    if (patches.empty()) return;
    double ws = 0.0, wt = 0.0;
    for (const AuxiliaryPatch& p : patches) {
      ws = std::max(ws, p.s02 - p.s01);
      wt = std::max(wt, 2.0 * p.L);
    }
    double span_s = std::max(s_hi - s_lo, 1e-300);
    double span_t = std::max(t_hi - t_lo, 1e-300);
    // Cap the grid so tiny patches cannot blow up the cell count.
    cw_s_ = std::max(ws, span_s / 2048.0);
    cw_t_ = std::max(wt, span_t / 2048.0);
    ns_ = static_cast<int>(std::ceil(span_s / cw_s_)) + 1;
    nt_ = static_cast<int>(std::ceil(span_t / cw_t_)) + 1;
    cells_.resize(static_cast<std::size_t>(ns_) * nt_);
    for (std::size_t k = 0; k < patches.size(); ++k) {
      const AuxiliaryPatch& p = patches[k];
      int ia = cell_s(p.s01), ib = cell_s(p.s02);
      int ja = cell_t(p.t0 - p.L), jb = cell_t(p.t0 + p.L);
      for (int j = ja; j <= jb; ++j)
        for (int i = ia; i <= ib; ++i)
          cells_[static_cast<std::size_t>(j) * ns_ + i].push_back(
              static_cast<std::uint32_t>(k));
    }
  }

  // Index of the containing patch, or -1.
  int find(const std::vector<AuxiliaryPatch>& patches, double s,
           double t) const {
    if (cells_.empty()) return -1;
    int i = cell_s(s), j = cell_t(t);
    if (i < 0 || i >= ns_ || j < 0 || j >= nt_) return -1;
    for (std::uint32_t k : cells_[static_cast<std::size_t>(j) * ns_ + i])
      if (patches[k].contains(s, t)) return static_cast<int>(k);
    return -1;
  }

 private:
  int cell_s(double s) const {
    return static_cast<int>(std::floor((s - s0_) / cw_s_));
  }
  int cell_t(double t) const {
    return static_cast<int>(std::floor((t - t0_) / cw_t_));
  }
  double s0_ = 0.0, t0_ = 0.0, cw_s_ = 1.0, cw_t_ = 1.0;
  int ns_ = 0, nt_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

struct FieldPoint {
  double v = 0.0, vs = 0.0, vt = 0.0;
  double phi = 0.0, phit = 0.0;
  // Containing patch per generation (-1 where the field equals the seed).
  std::vector<int> patch_of_generation;
};

class PatchedField {
 public:
  InclusionSpec spec;
  SigmaStar seed_flux;  // the monotone continuation driving the seed
  ClassicalSolution seed;
  double delta0 = 0.0;
  std::vector<std::vector<AuxiliaryPatch>> generations;

  double s_lo() const { return delta0; }
  double s_hi() const { return seed.R - delta0; }
  double strip_area() const { return (seed.R - 2.0 * delta0) * seed.T; }

  void rebuild_index() {
    indices_.clear();
    for (const auto& gen : generations)
      indices_.emplace_back(gen, 0.0, seed.R, 0.0, seed.T);
  }

  void add_generation(std::vector<AuxiliaryPatch> patches) {
    generations.push_back(std::move(patches));
    indices_.emplace_back(generations.back(), 0.0, seed.R, 0.0, seed.T);
  }

  // Containing patch of (s,t) in generation g, or -1.
  int patch_at(std::size_t g, double s, double t) const {
    return indices_[g].find(generations[g], s, t);
  }

  bool inside_any_patch(double s, double t) const {
    for (std::size_t g = 0; g < generations.size(); ++g)
      if (patch_at(g, s, t) >= 0) return true;
    return false;
  }

  FieldPoint at(double s, double t) const {
    if (indices_.size() != generations.size())
      throw std::logic_error("PatchedField: index out of date");
    FieldPoint f;
    f.v = bilinear(seed.v, s, t);
    f.vs = bilinear(seed.vs, s, t);
    f.vt = bilinear(seed.vt, s, t);
    f.phi = bilinear(seed.phi, s, t);
    // The seed satisfies phi_t = s^m f(v_s) pointwise; evaluating the flux
    // on the interpolated gradient keeps the seed inclusion exact between
    // grid nodes (interpolating the phit grid would not).
    f.phit = ipow(s, spec.m) * seed_flux(f.vs);
    f.patch_of_generation.assign(generations.size(), -1);
    for (std::size_t g = 0; g < generations.size(); ++g) {
      int k = patch_at(g, s, t);
      f.patch_of_generation[g] = k;
      if (k < 0) continue;
      const AuxiliaryPatch& p = generations[g][k];
      PatchEval e = eval_patch(p, s, t);
      f.v += e.value;
      f.vs += e.ds;
      f.vt += e.dt;
      f.phi += patch_moment(p, s, t);
      f.phit += patch_moment_dt(p, s, t);
    }
    return f;
  }

  GradientSample sample(double s, double t) const {
    FieldPoint f = at(s, t);
    GradientSample g;
    g.s = s;
    g.v = f.v;
    g.p = f.vs;
    g.l = f.vt;
    g.q_prime = f.phit;
    g.r21 = ipow(s, spec.m) * f.v;  // row condition by construction
    return g;
  }

  std::size_t patch_count() const {
    std::size_t total = 0;
    for (const auto& gen : generations) total += gen.size();
    return total;
  }

 private:
  double bilinear(const std::vector<double>& grid, double s, double t) const {
    double x = std::clamp(s / seed.ds(), 0.0, static_cast<double>(seed.Ns));
    double y = std::clamp(t / seed.dt(), 0.0, static_cast<double>(seed.Nt));
    int i = std::min(static_cast<int>(x), seed.Ns - 1);
    int j = std::min(static_cast<int>(y), seed.Nt - 1);
    double u = x - i, w = y - j;
    return (1 - u) * (1 - w) * grid[seed.idx(i, j)] +
           u * (1 - w) * grid[seed.idx(i + 1, j)] +
           (1 - u) * w * grid[seed.idx(i, j + 1)] +
           u * w * grid[seed.idx(i + 1, j + 1)];
  }

  std::vector<GenerationIndex> indices_;
};

// A C1 piece of the field: the unpatched remainder of the strip, or one of
// the six subregions of a patch minus any later-generation patches inside.
struct Piece {
  int generation = -1;  // -1: remainder piece
  int patch_index = -1;
  PatchRegion subregion = PatchRegion::outside;
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // bbox (s, t)
  double area = 0.0;  // estimate, used for budgets and charges

  bool contains(const PatchedField& field, double s, double t) const {
    if (!(s > field.s_lo() && s < field.s_hi() && t > 0.0 && t < field.seed.T))
      return false;
    if (generation < 0) return !field.inside_any_patch(s, t);
    const auto g = static_cast<std::size_t>(generation);
    int k = field.patch_at(g, s, t);
    if (k != patch_index) return false;
    if (eval_patch(field.generations[g][k], s, t).region != subregion)
      return false;
    for (std::size_t h = g + 1; h < field.generations.size(); ++h)
      if (field.patch_at(h, s, t) >= 0) return false;
    return true;
  }
};

// Remainder piece plus six subregion pieces per patch of every generation.
inline std::vector<Piece> decompose_pieces(const PatchedField& field) {
  std::vector<Piece> pieces;
  Piece rem;
  rem.x0 = field.s_lo();
  rem.x1 = field.s_hi();
  rem.y0 = 0.0;
  rem.y1 = field.seed.T;
  double patched = 0.0;
  for (const auto& gen : field.generations)
    for (const AuxiliaryPatch& p : gen) patched += p.area();
  rem.area = std::max(0.0, field.strip_area() - patched);
  pieces.push_back(rem);

  const PatchRegion tags[6] = {PatchRegion::d1_plus,  PatchRegion::d2_plus,
                               PatchRegion::d3_plus,  PatchRegion::d1_minus,
                               PatchRegion::d2_minus, PatchRegion::d3_minus};
  for (std::size_t g = 0; g < field.generations.size(); ++g)
    for (std::size_t k = 0; k < field.generations[g].size(); ++k) {
      const AuxiliaryPatch& p = field.generations[g][k];
      // Half-patch area split across D1/D2/D3 by the slice-width ratios
      // (D2 width is a/(a+b) of the slice; D1 and D3 share the rest).
      double half = 0.5 * p.area();
      double frac[3] = {0.5 * p.b / (p.a + p.b), p.a / (p.a + p.b),
                        0.5 * p.b / (p.a + p.b)};
      for (int r = 0; r < 6; ++r) {
        Piece piece;
        piece.generation = static_cast<int>(g);
        piece.patch_index = static_cast<int>(k);
        piece.subregion = tags[r];
        piece.x0 = p.s01;
        piece.x1 = p.s02;
        bool plus = r < 3;
        piece.y0 = plus ? p.t0 : p.t0 - p.L;
        piece.y1 = plus ? p.t0 + p.L : p.t0;
        piece.area = half * frac[r % 3];
        pieces.push_back(piece);
      }
    }
  return pieces;
}

}  // namespace pmweak

#pragma once

// Vitali-type covers with quantified coverage: greedy dyadic squares inside
// an arbitrary region, and greedy multi-scale lattice packing of scaled
// diamonds inside a square. Both are deterministic (lexicographic order)
// and report the uncovered remainder instead of chasing measure zero.

#include <algorithm>
#include <cmath>

#include <functional>
#include <stdexcept>
#include <vector>

namespace pmweak {

// Axis-aligned bounding box plus a containment predicate; `area` is the
// caller's estimate of the region measure (used for coverage accounting).
struct Region {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  std::function<bool(double, double)> contains;
  double area = 0.0;
};

enum class CoverShape { square, diamond };

struct CoverElement {
  double cx = 0.0, cy = 0.0;
  double scale = 0.0;  // square: side; diamond: half-diagonal in y
};

struct CoverPlan {
  std::vector<CoverElement> elements;
  CoverShape shape = CoverShape::square;
  double xi = 0.0;  // diamond aspect; unused for squares
  double covered_area = 0.0;
  double covered_fraction = 0.0;
  double uncovered_area = 0.0;
  bool shortfall = false;
};

struct SquareCoverOptions {
  int min_side_exponent = 8;   // floor = max_side / 2^exponent
  std::size_t max_elements = 0;  // 0 = unlimited
  int containment_grid = 4;    // (k+1)^2 sample points per candidate cell
};

// Greedy dyadic subdivision. The root cell spans the bounding box; a cell
// fully inside the region is accepted once its side is <= max_side (larger
// interior cells subdivide), a partially inside cell subdivides down to the
// side floor. Depth-first lexicographic order makes the plan deterministic
// and lets element caps terminate early.
inline CoverPlan cover_squares(const Region& region, double max_side,
                               double coverage_goal,
                               const SquareCoverOptions& opt = {}) {
  if (!(max_side > 0.0)) throw std::invalid_argument("cover_squares: max_side <= 0");
  if (!(coverage_goal > 0.0 && coverage_goal < 1.0))
    throw std::invalid_argument("cover_squares: goal outside (0,1)");
  CoverPlan plan;
  plan.shape = CoverShape::square;
  if (!(region.area > 0.0)) {
    plan.shortfall = true;
    return plan;
  }
  const double floor_side =
      max_side / static_cast<double>(1u << opt.min_side_exponent);
  const int k = std::max(1, opt.containment_grid);

  auto classify = [&](double cx, double cy, double side) {
    int inside = 0, total = 0;
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) {
        double x = cx - 0.5 * side + side * static_cast<double>(i) / k;
        double y = cy - 0.5 * side + side * static_cast<double>(j) / k;
        ++total;
        if (region.contains(x, y)) ++inside;
      }
    if (inside == total) return 1;
    if (inside > 0) return -1;
    return 0;
  };

  struct Cell {
    double cx, cy, side;
  };
  double span = std::max(region.x1 - region.x0, region.y1 - region.y0);
  if (!(span > 0.0)) {
    plan.shortfall = true;
    return plan;
  }
  bool done = false;
  auto accept = [&](const Cell& c) {
    if (opt.max_elements && plan.elements.size() >= opt.max_elements) {
      plan.shortfall = true;
      done = true;
      return;
    }
    plan.elements.push_back({c.cx, c.cy, c.side});
    plan.covered_area += c.side * c.side;
    if (plan.covered_area >= coverage_goal * region.area) done = true;
  };
  auto push_children = [](std::vector<Cell>& st, const Cell& c) {
    double h = 0.5 * c.side;
    double q = 0.25 * c.side;
    // Reverse lexicographic push so pops come out lexicographic.
    st.push_back({c.cx + q, c.cy + q, h});
    st.push_back({c.cx - q, c.cy + q, h});
    st.push_back({c.cx + q, c.cy - q, h});
    st.push_back({c.cx - q, c.cy - q, h});
  };

  // Pass 1: tile-size squares only. Boundary-straddling tiles are deferred
  // so the element budget goes to full-size interior squares first. Cells
  // above the pruning scale are always subdivided: probe grids on coarse
  // cells can miss a thin region entirely, and a false empty verdict there
  // would silently drop everything inside.
  const double prune_side = std::max(8.0 * max_side, span / 128.0);
  std::vector<Cell> stack;
  std::vector<Cell> partial_tiles;
  stack.push_back({region.x0 + 0.5 * span, region.y0 + 0.5 * span, span});
  while (!stack.empty() && !done) {
    Cell c = stack.back();
    stack.pop_back();
    if (c.side > prune_side) {
      push_children(stack, c);
      continue;
    }
    int cls = classify(c.cx, c.cy, c.side);
    if (cls == 0) continue;
    if (c.side <= max_side) {
      if (cls == 1)
        accept(c);
      else
        partial_tiles.push_back(c);
      continue;
    }
    push_children(stack, c);
  }

  // Pass 2: refine boundary tiles down to the side floor.
  for (std::size_t t = 0; t < partial_tiles.size() && !done; ++t) {
    std::vector<Cell> st;
    push_children(st, partial_tiles[t]);
    while (!st.empty() && !done) {
      Cell c = st.back();
      st.pop_back();
      int cls = classify(c.cx, c.cy, c.side);
      if (cls == 0) continue;
      if (cls == 1) {
        accept(c);
        continue;
      }
      if (0.5 * c.side >= floor_side) push_children(st, c);
    }
  }
  plan.covered_fraction = plan.covered_area / region.area;
  plan.uncovered_area = std::max(0.0, region.area - plan.covered_area);
  if (plan.covered_fraction < coverage_goal) plan.shortfall = true;
  return plan;
}

struct DiamondCoverOptions {
  int min_scale_exponent = 8;
  std::size_t max_elements = 0;
};

// Packs scaled copies of the diamond D = hull{(0,+-1),(+-xi,0)} (area 2 xi
// per unit scale squared) into the square. Scales descend dyadically from
// the largest inscribable one; at each scale both sublattices of the rhombus
// tiling are offered in lexicographic order; a candidate is accepted when it
// fits in the square and does not overlap earlier diamonds. Overlap is exact
// in the diamond norm |dx|/xi + |dy| (homothetic symmetric bodies).
inline CoverPlan cover_diamonds(double cx, double cy, double side, double xi,
                                double coverage_goal,
                                const DiamondCoverOptions& opt = {}) {
  if (!(side > 0.0 && xi > 0.0))
    throw std::invalid_argument("cover_diamonds: bad side/xi");
  if (!(coverage_goal > 0.0 && coverage_goal < 1.0))
    throw std::invalid_argument("cover_diamonds: goal outside (0,1)");
  CoverPlan plan;
  plan.shape = CoverShape::diamond;
  plan.xi = xi;
  const double area = side * side;
  const double qx = cx - 0.5 * side, qy = cy - 0.5 * side;
  const double eps_max = std::min(0.5 * side, 0.5 * side / xi);
  const double eps_floor =
      eps_max / static_cast<double>(1u << opt.min_scale_exponent);

  // Column index over x for overlap queries: two diamonds overlap only if
  // their x-extents overlap, hence they share a column. Columns stay short
  // because large-scale diamonds are tall and thin.
  const double colw = std::max(xi * eps_max, 1e-300);
  const int ncol = static_cast<int>(std::ceil(side / colw)) + 2;
  std::vector<std::vector<std::size_t>> columns(ncol);
  auto col_range = [&](double x, double eps) {
    int lo = static_cast<int>(std::floor((x - xi * eps - qx) / colw));
    int hi = static_cast<int>(std::floor((x + xi * eps - qx) / colw));
    return std::pair<int, int>(std::clamp(lo, 0, ncol - 1),
                               std::clamp(hi, 0, ncol - 1));
  };
  auto overlaps = [&](double x, double y, double eps) {
    auto [lo, hi] = col_range(x, eps);
    for (int c = lo; c <= hi; ++c)
      for (std::size_t idx : columns[c]) {
        const CoverElement& e = plan.elements[idx];
        double norm = std::abs(x - e.cx) / xi + std::abs(y - e.cy);
        if (norm < (eps + e.scale) * (1.0 - 1e-12)) return true;
      }
    return false;
  };
  auto register_element = [&](double x, double eps, std::size_t idx) {
    auto [lo, hi] = col_range(x, eps);
    for (int c = lo; c <= hi; ++c) columns[c].push_back(idx);
  };

  bool goal_met = false;
  double tol = 1e-12 * side;
  for (double eps = eps_max; eps >= eps_floor && !goal_met; eps *= 0.5) {
    double wx = xi * eps;  // half-diagonal in x
    // Two sublattices of the rhombus tiling anchored at the square corner.
    for (int sub = 0; sub < 2 && !goal_met; ++sub) {
      double ox = qx + wx + (sub ? wx : 0.0);
      double oy = qy + eps + (sub ? eps : 0.0);
      int ni = static_cast<int>(std::floor((qx + side - wx - ox) / (2.0 * wx) + 1e-9)) + 1;
      int nj = static_cast<int>(std::floor((qy + side - eps - oy) / (2.0 * eps) + 1e-9)) + 1;
      for (int j = 0; j < nj && !goal_met; ++j) {
        double y = oy + 2.0 * eps * j;
        if (y - eps < qy - tol || y + eps > qy + side + tol) continue;
        for (int i = 0; i < ni && !goal_met; ++i) {
          double x = ox + 2.0 * wx * i;
          if (x - wx < qx - tol || x + wx > qx + side + tol) continue;
          if (overlaps(x, y, eps)) continue;
          if (opt.max_elements && plan.elements.size() >= opt.max_elements) {
            plan.shortfall = true;
            goal_met = true;
            break;
          }
          register_element(x, eps, plan.elements.size());
          plan.elements.push_back({x, y, eps});
          plan.covered_area += 2.0 * xi * eps * eps;
          if (plan.covered_area >= coverage_goal * area) goal_met = true;
        }
      }
    }
  }
  plan.covered_fraction = plan.covered_area / area;
  plan.uncovered_area = std::max(0.0, area - plan.covered_area);
  if (plan.covered_fraction < coverage_goal) plan.shortfall = true;
  return plan;
}

}  // namespace pmweak

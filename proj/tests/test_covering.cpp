#include "catch2/catch_amalgamated.hpp"

#include <cmath>

#include "pmweak/covering.hpp"

using namespace pmweak;

namespace {
Region disk(double cx, double cy, double r) {
  Region reg;
  reg.x0 = cx - r;
  reg.y0 = cy - r;
  reg.x1 = cx + r;
  reg.y1 = cy + r;
  reg.area = std::acos(-1.0) * r * r;
  reg.contains = [cx, cy, r](double x, double y) {
    return (x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r;
  };
  return reg;
}
}  // namespace

TEST_CASE("square cover of a disk meets the coverage goal") {
  Region reg = disk(0.3, -0.2, 1.0);
  CoverPlan plan = cover_squares(reg, 0.1, 0.95);
  CHECK_FALSE(plan.shortfall);
  CHECK(plan.covered_fraction >= 0.95);
  CHECK(plan.covered_area + plan.uncovered_area ==
        Catch::Approx(reg.area).margin(1e-12));

  SECTION("every accepted square lies inside the region") {
    for (const CoverElement& e : plan.elements) {
      CHECK(e.scale <= 0.1 * (1.0 + 1e-12));
      for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j)
          CHECK(reg.contains(e.cx + e.scale * (i / 4.0 - 0.5),
                             e.cy + e.scale * (j / 4.0 - 0.5)));
    }
  }
  SECTION("squares are pairwise disjoint") {
    for (std::size_t i = 0; i < plan.elements.size(); ++i)
      for (std::size_t j = i + 1; j < plan.elements.size(); ++j) {
        const CoverElement& a = plan.elements[i];
        const CoverElement& b = plan.elements[j];
        double half = 0.5 * (a.scale + b.scale);
        bool overlap = std::abs(a.cx - b.cx) < half * (1.0 - 1e-9) &&
                       std::abs(a.cy - b.cy) < half * (1.0 - 1e-9);
        CHECK_FALSE(overlap);
      }
  }
}

TEST_CASE("square cover is deterministic") {
  Region reg = disk(0.0, 0.0, 0.7);
  CoverPlan a = cover_squares(reg, 0.05, 0.9);
  CoverPlan b = cover_squares(reg, 0.05, 0.9);
  REQUIRE(a.elements.size() == b.elements.size());
  for (std::size_t k = 0; k < a.elements.size(); ++k) {
    CHECK(a.elements[k].cx == b.elements[k].cx);
    CHECK(a.elements[k].cy == b.elements[k].cy);
    CHECK(a.elements[k].scale == b.elements[k].scale);
  }
}

TEST_CASE("square cover finds a thin diagonal band") {
  // A band much thinner than the root cell: a coarse probe grid sees no
  // points inside, so the first pass must subdivide blindly, not prune.
  Region band;
  band.x0 = 0.0;
  band.y0 = 0.0;
  band.x1 = 1.0;
  band.y1 = 1.0;
  const double w = 0.004;
  band.contains = [w](double x, double y) { return std::abs(y - x) < w; };
  band.area = 2.0 * w - w * w;  // unit square minus the two corner triangles
  CoverPlan plan = cover_squares(band, 0.002, 0.5);
  CHECK(plan.covered_fraction >= 0.5);
}

TEST_CASE("square cover honors the element cap") {
  Region reg = disk(0.0, 0.0, 1.0);
  SquareCoverOptions opt;
  opt.max_elements = 5;
  CoverPlan plan = cover_squares(reg, 0.05, 0.99, opt);
  CHECK(plan.elements.size() <= 5);
  CHECK(plan.shortfall);
}

TEST_CASE("square cover rejects bad arguments") {
  Region reg = disk(0.0, 0.0, 1.0);
  CHECK_THROWS_AS(cover_squares(reg, 0.0, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(cover_squares(reg, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("diamond cover accounting and disjointness") {
  const double xi = 0.3;
  CoverPlan plan = cover_diamonds(0.5, 0.5, 0.2, xi, 0.9);
  CHECK_FALSE(plan.shortfall);
  CHECK(plan.covered_fraction >= 0.9);

  SECTION("areas add up") {
    double total = 0.0;
    for (const CoverElement& e : plan.elements)
      total += 2.0 * xi * e.scale * e.scale;
    CHECK(total == Catch::Approx(plan.covered_area).margin(1e-12));
  }
  SECTION("every diamond fits in the square") {
    for (const CoverElement& e : plan.elements) {
      CHECK(e.cx - xi * e.scale >= 0.4 - 1e-9);
      CHECK(e.cx + xi * e.scale <= 0.6 + 1e-9);
      CHECK(e.cy - e.scale >= 0.4 - 1e-9);
      CHECK(e.cy + e.scale <= 0.6 + 1e-9);
    }
  }
  SECTION("pairwise disjoint in the diamond norm") {
    for (std::size_t i = 0; i < plan.elements.size(); ++i)
      for (std::size_t j = i + 1; j < plan.elements.size(); ++j) {
        const CoverElement& a = plan.elements[i];
        const CoverElement& b = plan.elements[j];
        double norm = std::abs(a.cx - b.cx) / xi + std::abs(a.cy - b.cy);
        CHECK(norm >= (a.scale + b.scale) * (1.0 - 1e-9));
      }
  }
}

TEST_CASE("diamond cover is deterministic and respects caps") {
  CoverPlan a = cover_diamonds(0.0, 0.0, 1.0, 0.1, 0.8);
  CoverPlan b = cover_diamonds(0.0, 0.0, 1.0, 0.1, 0.8);
  REQUIRE(a.elements.size() == b.elements.size());
  for (std::size_t k = 0; k < a.elements.size(); ++k) {
    CHECK(a.elements[k].cx == b.elements[k].cx);
    CHECK(a.elements[k].cy == b.elements[k].cy);
  }
  DiamondCoverOptions opt;
  opt.max_elements = 3;
  CoverPlan capped = cover_diamonds(0.0, 0.0, 1.0, 0.1, 0.8, opt);
  CHECK(capped.elements.size() <= 3);
  CHECK(capped.shortfall);
}

TEST_CASE("diamond cover with extreme aspect ratios") {
  for (double xi : {1e-3, 0.5, 2.0}) {
    CoverPlan plan = cover_diamonds(0.0, 0.0, 0.1, xi, 0.7);
    CHECK(plan.covered_fraction >= 0.7);
  }
}

TEST_CASE("diamond cover rejects bad arguments") {
  CHECK_THROWS_AS(cover_diamonds(0.0, 0.0, 0.0, 0.1, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(cover_diamonds(0.0, 0.0, 1.0, 0.1, 0.0),
                  std::invalid_argument);
}

#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "pmweak/geometry.hpp"

using namespace pmweak;

namespace {
InclusionSpec make_spec(double lambda = 2.0, double l0 = 1.5, int m = 1) {
  return InclusionSpec::make(make_flux_model("pm_rational"), lambda, l0, m);
}

GradientSample sample_at(const InclusionSpec& spec, double s, double p,
                         double l, double q_prime, double v) {
  GradientSample g;
  g.s = s;
  g.p = p;
  g.l = l;
  g.q_prime = q_prime;
  g.v = v;
  g.r21 = ipow(s, spec.m) * v;
  return g;
}

// Independent brute-force planar distance to the curve: dense uniform scan,
// no table reuse, no golden refinement.
double brute_curve_distance(const InclusionSpec& spec, double s, double p,
                            double q_prime) {
  double w = ipow(s, spec.m);
  double best = std::numeric_limits<double>::infinity();
  const int n = 400000;
  for (int k = 0; k <= n; ++k) {
    double pc = -spec.lambda + 2.0 * spec.lambda * k / static_cast<double>(n);
    double qc = w * spec.flux.sigma(pc);
    best = std::min(best, std::hypot(p - pc, q_prime - qc));
  }
  return best;
}
}  // namespace

TEST_CASE("interval I closed forms") {
  InclusionSpec spec = make_spec();
  // At s = 1, m = 1: I(p) = (sigma(2), sigma(p)) on the positive branch.
  Interval i = interval_I(spec, 1.0, 1.0);
  REQUIRE_FALSE(i.empty);
  CHECK(i.lo == Catch::Approx(0.4).margin(1e-15));
  CHECK(i.hi == 0.5);
  // Odd reflection on the negative branch.
  Interval in = interval_I(spec, 1.0, -1.0);
  REQUIRE_FALSE(in.empty);
  CHECK(in.lo == -0.5);
  CHECK(in.hi == Catch::Approx(-0.4).margin(1e-15));
  // Empty outside (lambda_minus, lambda) in |p|.
  CHECK(interval_I(spec, 1.0, 0.3).empty);
  CHECK(interval_I(spec, 1.0, 2.5).empty);
  CHECK(interval_I(spec, 1.0, 0.5).empty);  // endpoints excluded
  // s^m scaling.
  Interval is = interval_I(spec, 0.5, 1.0);
  CHECK(is.lo == Catch::Approx(0.2).margin(1e-15));
  CHECK(is.hi == 0.25);
}

TEST_CASE("row condition is enforced") {
  InclusionSpec spec = make_spec();
  GradientSample g = sample_at(spec, 0.7, 1.0, 0.0, 0.45 * 0.7, 0.2);
  g.r21 += 1.0;  // break phi_s = s^m v
  CHECK_THROWS_AS(in_U(spec, g), std::invalid_argument);
  CHECK_THROWS_AS(matrix_distance_K(spec, g), std::invalid_argument);
}

TEST_CASE("membership in U") {
  InclusionSpec spec = make_spec();
  // q' strictly between s^m sigma(lambda) and s^m sigma(p).
  CHECK(in_U(spec, sample_at(spec, 1.0, 1.0, 0.0, 0.45, 0.3)));
  CHECK_FALSE(in_U(spec, sample_at(spec, 1.0, 1.0, 0.0, 0.55, 0.3)));
  CHECK_FALSE(in_U(spec, sample_at(spec, 1.0, 0.3, 0.0, 0.45, 0.3)));
  // |l| < l0 strictly.
  CHECK_FALSE(in_U(spec, sample_at(spec, 1.0, 1.0, 1.5, 0.45, 0.3)));
  CHECK(in_U(spec, sample_at(spec, 1.0, 1.0, 1.499, 0.45, 0.3)));
}

TEST_CASE("curve distance matches an independent brute-force scan") {
  InclusionSpec spec = make_spec();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> us(0.2, 1.0), up(-3.0, 3.0),
      uq(-0.8, 0.8);
  for (int k = 0; k < 60; ++k) {
    double s = us(rng), p = up(rng), q = uq(rng);
    double fast = curve_distance(spec, s, p, q);
    double brute = brute_curve_distance(spec, s, p, q);
    CHECK(std::abs(fast - brute) < 1e-6);
  }
}

TEST_CASE("matrix distance reduces to the planar distance and is exactly "
          "v-translation invariant") {
  InclusionSpec spec = make_spec();
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> us(0.2, 1.0), up(-3.0, 3.0),
      uq(-0.8, 0.8), ul(-1.4, 1.4), uv(-5.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    double s = us(rng);
    GradientSample g = sample_at(spec, s, up(rng), ul(rng), uq(rng), uv(rng));
    double d = matrix_distance_K(spec, g);
    CHECK(d == curve_distance(spec, g.s, g.p, g.q_prime));
    // Shift v (and r21 consistently): distances and gauge are unchanged
    // bitwise because they only read (s, p, l, q').
    GradientSample h = g;
    h.v = uv(rng);
    h.r21 = ipow(s, spec.m) * h.v;
    CHECK(matrix_distance_K(spec, h) == d);
    CHECK(gauge_d(spec, h) == gauge_d(spec, g));
    GaugeParts pg = gauge_parts(spec, g), ph = gauge_parts(spec, h);
    CHECK(pg.dist_K == ph.dist_K);
    CHECK(pg.dist_boundary_U == ph.dist_boundary_U);
    CHECK(pg.in_U_planar == ph.in_U_planar);
  }
}

TEST_CASE("matrix distance rejects |l| beyond l0") {
  InclusionSpec spec = make_spec();
  GradientSample g = sample_at(spec, 1.0, 1.0, 1.6, 0.45, 0.0);
  CHECK_THROWS_AS(matrix_distance_K(spec, g), std::invalid_argument);
}

TEST_CASE("gauge parts are consistent with membership") {
  InclusionSpec spec = make_spec();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> us(0.2, 1.0), up(-3.0, 3.0),
      uq(-0.8, 0.8), ul(-1.4, 1.4);
  for (int k = 0; k < 500; ++k) {
    GradientSample g =
        sample_at(spec, us(rng), up(rng), ul(rng), uq(rng), 0.0);
    GaugeParts parts = gauge_parts(spec, g);
    CHECK(parts.in_U_planar == in_U(spec, g));
    CHECK(parts.dist_K >= 0.0);
    CHECK(parts.dist_boundary_U >= 0.0);
    CHECK(gauge_d(spec, g) ==
          std::min(parts.dist_K, parts.dist_boundary_U));
    if (parts.in_U_planar) {
      // Interior points of U sit strictly off the curve and off the boundary.
      CHECK(parts.dist_K > 0.0);
      CHECK(parts.dist_boundary_U > 0.0);
    }
  }
}

TEST_CASE("points on the curve have zero distance") {
  InclusionSpec spec = make_spec();
  for (double p : {-1.8, -0.9, 0.0, 0.4, 1.0, 1.9}) {
    double s = 0.8;
    double q = ipow(s, spec.m) * spec.flux.sigma(p);
    CHECK(curve_distance(spec, s, p, q) < 1e-9);
  }
}

TEST_CASE("definitional membership agrees with the interval test on a large "
          "random census") {
  InclusionSpec spec = make_spec();
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> us(0.2, 1.0), up(-3.0, 3.0),
      uq(-0.8, 0.8), ul(-1.6, 1.6);
  int disagreements = 0;
  for (int k = 0; k < 10000; ++k) {
    double s = us(rng), p = up(rng), q = uq(rng), l = ul(rng);
    GradientSample g = sample_at(spec, s, p, l, q, 0.0);
    // Definitional check, written out from the set definition.
    double w = ipow(s, spec.m);
    bool expected = std::abs(l) < spec.l0;
    if (p > spec.lambda_minus && p < spec.lambda)
      expected = expected && q > w * spec.sigma_lambda &&
                 q < w * spec.flux.sigma(p);
    else if (-p > spec.lambda_minus && -p < spec.lambda)
      expected = expected && -q > w * spec.sigma_lambda &&
                 -q < w * spec.flux.sigma(-p);
    else
      expected = false;
    if (in_U(spec, g) != expected) ++disagreements;
  }
  CHECK(disagreements == 0);
}

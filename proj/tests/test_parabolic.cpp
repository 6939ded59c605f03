#include "catch2/catch_amalgamated.hpp"

#include <cmath>

#include "pmweak/flux.hpp"
#include "pmweak/parabolic.hpp"

using namespace pmweak;

namespace {
const double kPi = std::acos(-1.0);

// Separated heat solution on (0,1) with Neumann ends:
//   v(s,t) = exp(-pi^2 t) cos(pi s) solves v_t = v_ss, v_s(0)=v_s(1)=0.
double heat_exact(double s, double t) {
  return std::exp(-kPi * kPi * t) * std::cos(kPi * s);
}

double heat_linf_error(int N) {
  ClassicalSolution sol = solve_classical(
      AffineSlopeFlux{1.0}, [](double s) { return std::cos(kPi * s); }, 1, 1.0,
      0.1, N, N);
  double worst = 0.0;
  for (int j = 0; j <= sol.Nt; ++j)
    for (int i = 0; i <= sol.Ns; ++i)
      worst = std::max(worst, std::abs(sol.v[sol.idx(i, j)] -
                                       heat_exact(sol.s_of(i), sol.t_of(j))));
  return worst;
}
}  // namespace

TEST_CASE("heat equation accuracy and second-order refinement") {
  double coarse = heat_linf_error(50);
  double fine = heat_linf_error(100);
  CHECK(heat_linf_error(200) <= 1e-3);
  CHECK(coarse / fine >= 1.8);  // implicit midpoint is O(h^2 + dt^2)
}

TEST_CASE("discrete conservation is exact for the heat run") {
  ClassicalSolution sol = solve_classical(
      AffineSlopeFlux{1.0}, [](double s) { return std::cos(kPi * s); }, 1, 1.0,
      0.1, 100, 100);
  double m0 = sol.mass(0);
  for (int j = 1; j <= sol.Nt; ++j)
    CHECK(std::abs(sol.mass(j) - m0) <= 1e-12 * (1.0 + std::abs(m0)));
}

TEST_CASE("radial (n = 2) linear diffusion conserves weighted mass") {
  ClassicalSolution sol = solve_classical(
      AffineSlopeFlux{1.0},
      [](double s) { return 1.0 + std::cos(kPi * s); }, 2, 1.0, 0.2, 80, 80);
  double m0 = sol.mass(0);
  CHECK(m0 > 0.0);
  for (int j = 1; j <= sol.Nt; ++j)
    CHECK(std::abs(sol.mass(j) - m0) <= 1e-10 * m0);
  // Neumann edges are exact zeros of the gradient grid.
  for (int j = 0; j <= sol.Nt; ++j) {
    CHECK(sol.vs[sol.idx(0, j)] == 0.0);
    CHECK(sol.vs[sol.idx(sol.Ns, j)] == 0.0);
  }
}

TEST_CASE("maximum principle check on the heat run") {
  ClassicalSolution sol = solve_classical(
      AffineSlopeFlux{1.0}, [](double s) { return std::cos(kPi * s); }, 1, 1.0,
      0.1, 100, 100);
  MaxPrincipleReport rep = check_max_principle(sol);
  CHECK(rep.pass);
  CHECK(rep.excess <= 1e-6 * (1.0 + sol.M));
}

TEST_CASE("nonlinear sigma* seed solve stays stable on steep data") {
  FluxModel flux = make_flux_model("pm_rational");
  SigmaStar sstar = build_sigma_star(flux, 2.2, 2.0);
  auto v0 = [](double s) {
    if (s < 0.3) return 0.0;
    if (s > 0.7) return -0.4;
    double u = (s - 0.3) / 0.4;
    return -0.8 * (u / 2.0 - std::sin(2.0 * kPi * u) / (4.0 * kPi));
  };
  ClassicalSolution sol = solve_classical(sstar, v0, 2, 1.0, 0.5, 120, 120);
  CHECK(sol.M == Catch::Approx(2.0).margin(5e-3));
  double m0 = sol.mass(0);
  for (int j = 1; j <= sol.Nt; ++j)
    CHECK(std::abs(sol.mass(j) - m0) <= 1e-10 * (1.0 + std::abs(m0)));

  stream_function(sol, sstar);
  SECTION("stream row condition phi_s = s^m v via centered differences") {
    double h = sol.ds();
    double worst = 0.0;
    for (int j = 0; j <= sol.Nt; ++j)
      for (int i = 1; i < sol.Ns; ++i) {
        double fd =
            (sol.phi[sol.idx(i + 1, j)] - sol.phi[sol.idx(i - 1, j)]) /
            (2.0 * h);
        worst = std::max(
            worst, std::abs(fd - sol.s_of(i) * sol.v[sol.idx(i, j)]));
      }
    CHECK(worst < 5e-3);  // quadrature/differencing gap at the steep front
  }
  SECTION("phit cross-check against time differences of phi") {
    // The gradient staircases at grid scale (the flux is nearly flat in the
    // supercritical range), so the pointwise cross-check saturates around
    // 0.2; the mean mismatch is small and shrinks under refinement, and the
    // weak-form diagnostics downstream are the converging statement.
    CHECK(sol.phit_crosscheck < 0.5);
    double sum = 0.0;
    long count = 0;
    const double dt = sol.dt();
    for (int j = 1; j < sol.Nt; ++j)
      for (int i = 0; i <= sol.Ns; ++i) {
        double fd = (sol.phi[sol.idx(i, j + 1)] - sol.phi[sol.idx(i, j - 1)]) /
                    (2.0 * dt);
        sum += std::abs(fd - sol.phit[sol.idx(i, j)]);
        ++count;
      }
    CHECK(sum / static_cast<double>(count) < 5e-3);
  }
  SECTION("strip and time-derivative selectors") {
    double d0 = select_delta0(sol, 1.0 / 2.2);
    CHECK(d0 >= 2.0 * sol.ds());
    CHECK(d0 <= 0.45);
    // All gradient samples on the selected strips are subcritical.
    int cells = static_cast<int>(std::lround(d0 / sol.ds()));
    for (int j = 0; j <= sol.Nt; ++j)
      for (int i = 0; i <= sol.Ns; ++i) {
        if (i > cells && i < sol.Ns - cells) continue;
        CHECK(std::abs(sol.vs[sol.idx(i, j)]) <= 1.0 / 2.2);
      }
    double l0 = select_l0(sol);
    for (double x : sol.vt) CHECK(std::abs(x) < l0);
  }
}

TEST_CASE("solver rejects bad grids") {
  CHECK_THROWS_AS(solve_classical(AffineSlopeFlux{1.0},
                                  [](double) { return 0.0; }, 1, 1.0, 1.0, 2,
                                  10),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_classical(AffineSlopeFlux{1.0},
                                  [](double) { return 0.0; }, 0, 1.0, 1.0, 10,
                                  10),
                  std::invalid_argument);
}

TEST_CASE("clamped spline interpolates with flat ends") {
  std::vector<double> x = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> y = {1.0, 0.8, 0.1, -0.3, -0.4};
  ClampedSpline f(x, y);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(f(x[k]) == y[k]);
  double h = 1e-7;
  CHECK(std::abs((f(0.0 + h) - f(0.0)) / h) < 1e-4);
  CHECK(std::abs((f(1.0) - f(1.0 - h)) / h) < 1e-4);
  CHECK(f(-1.0) == y.front());
  CHECK(f(2.0) == y.back());
}

TEST_CASE("clamped spline validates input") {
  CHECK_THROWS_AS(ClampedSpline({0.0, 0.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(ClampedSpline({0.0}, {1.0}), std::invalid_argument);
}

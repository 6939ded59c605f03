#include "catch2/catch_amalgamated.hpp"

#include <cmath>

#include "pmweak/pipeline.hpp"

using namespace pmweak;

namespace {
const double kPi = std::acos(-1.0);

RunConfig quick_config() {
  RunConfig cfg;
  cfg.n = 2;
  cfg.R = 1.0;
  cfg.T = 0.5;
  cfg.Ns = 200;
  cfg.Nt = 200;
  cfg.epsilon0 = 0.2;
  cfg.eta0 = 0.05;
  cfg.iterations = 2;
  cfg.v0 = [](double s) {
    if (s < 0.3) return 0.0;
    if (s > 0.7) return -0.4;
    double u = (s - 0.3) / 0.4;
    return -0.8 * (u / 2.0 - std::sin(2.0 * kPi * u) / (4.0 * kPi));
  };
  cfg.density.defect_samples = 20000;
  return cfg;
}

const RunResult& shared_run() {
  static RunResult result = run_pipeline(quick_config());
  return result;
}
}  // namespace

TEST_CASE("lambda selection") {
  FluxModel f = make_flux_model("pm_rational");
  CHECK(choose_lambda(2.0, 0.1, f) == 2.1);
  // Subcritical data: sigma(0.5) = 0.4, upper root 2, plus one.
  CHECK(choose_lambda(0.5, 0.1, f) == Catch::Approx(3.0).margin(1e-10));
  CHECK(f.sigma(3.0) == Catch::Approx(0.3).margin(1e-15));
  CHECK_THROWS_AS(choose_lambda(0.0, 0.1, f), std::invalid_argument);
}

TEST_CASE("sphere area closed forms") {
  CHECK(sphere_area(1) == Catch::Approx(2.0).margin(1e-12));
  CHECK(sphere_area(2) == Catch::Approx(2.0 * kPi).margin(1e-12));
  CHECK(sphere_area(3) == Catch::Approx(4.0 * kPi).margin(1e-12));
}

TEST_CASE("seed field construction reports consistent parameters") {
  RunConfig cfg = quick_config();
  RunResult out;
  PatchedField field = build_seed_field(cfg, out);
  CHECK(out.M == Catch::Approx(2.0).margin(5e-3));
  CHECK(out.lambda == out.M + cfg.epsilon0);
  CHECK(out.lambda_minus ==
        Catch::Approx(1.0 / out.lambda).margin(1e-10));
  CHECK(out.delta0 > 0.0);
  CHECK(out.delta0 < 0.5 * cfg.R);
  CHECK(out.l0 > 1.0);
  CHECK(field.generations.empty());
  // Initial row reproduces v0 bitwise (no projection on the seed grid).
  for (int i = 0; i <= field.seed.Ns; ++i)
    CHECK(field.seed.v[field.seed.idx(i, 0)] == cfg.v0(field.seed.s_of(i)));
}

TEST_CASE("two iterations yield passing defect reports") {
  const RunResult& result = shared_run();
  REQUIRE(result.reports.size() == 2);
  CHECK(result.reports[0].epsilon == 0.2);
  CHECK(result.reports[1].epsilon == 0.1);
  for (const DefectReport& rep : result.reports) {
    CHECK(rep.pass());
    CHECK(rep.defect_estimate <=
          rep.defect_bound + 3.0 * rep.defect_stderr);
  }
}

TEST_CASE("solution diagnostics pass after two iterations") {
  const RunResult& result = shared_run();
  RunConfig cfg = quick_config();
  Diagnostics diag = diagnostics(result, cfg);
  CHECK(diag.pass_residual);
  CHECK(diag.strips_equal_seed);
  CHECK(diag.initial_exact);
  CHECK(diag.pass_neumann);
  CHECK(diag.pass_gradient);
  CHECK(diag.grad_sup <= result.M + cfg.epsilon0 + 1e-6);
  CHECK(diag.pass_mass);
  CHECK(diag.mass_drift_rel <= 1e-4);
  for (const ResidualResult& rr : diag.residuals)
    CHECK(std::abs(rr.residual) <= rr.bound);
}

TEST_CASE("radial lift agrees with the profile") {
  const RunResult& result = shared_run();
  RadialSample rs = lift_radial(result.field, 0.5, 0.25);
  FieldPoint f = result.field.at(0.5, 0.25);
  CHECK(rs.u == f.v);
  CHECK(rs.du_mag == std::abs(f.vs));
  CHECK(lift_radial(result.field, 0.0, 0.1).du_mag == 0.0);
  CHECK_THROWS_AS(lift_radial(result.field, 2.0, 0.1),
                  std::invalid_argument);
}

TEST_CASE("mass is conserved along the run") {
  const RunResult& result = shared_run();
  double m0 = field_mass(result.field, 0.0);
  for (int j = 1; j <= 16; ++j) {
    double t = result.field.seed.T * j / 16.0;
    CHECK(field_mass(result.field, t) ==
          Catch::Approx(m0).margin(1e-4 * (1.0 + std::abs(m0))));
  }
  CHECK(mass_variation(result.field, 64) < 1e-3);
}

TEST_CASE("test-function battery has analytic derivatives") {
  std::vector<TestFunction> battery = default_battery(1.0, 0.5);
  CHECK(battery.size() == 10);
  for (const TestFunction& tf : battery) {
    for (double s : {0.2, 0.6, 0.9})
      for (double t : {0.1, 0.3, 0.45}) {
        double h = 1e-6;
        double fds = (tf.xi(s + h, t) - tf.xi(s - h, t)) / (2.0 * h);
        double fdt = (tf.xi(s, t + h) - tf.xi(s, t - h)) / (2.0 * h);
        CHECK(std::abs(fds - tf.xi_s(s, t)) < 1e-6);
        CHECK(std::abs(fdt - tf.xi_t(s, t)) < 1e-6);
      }
  }
}

TEST_CASE("weak residual honors its a-priori bound on the seed alone") {
  RunConfig cfg = quick_config();
  RunResult out;
  PatchedField field = build_seed_field(cfg, out);
  FluxModel flux = resolve_flux(cfg);
  for (const TestFunction& tf : default_battery(cfg.R, cfg.T)) {
    ResidualResult rr = weak_residual(field, flux, tf, 100, 50);
    CHECK(rr.pass);
  }
}

TEST_CASE("pipeline runs are deterministic in memory") {
  RunConfig cfg = quick_config();
  cfg.Ns = 100;
  cfg.Nt = 100;
  cfg.iterations = 1;
  cfg.density.defect_samples = 5000;
  RunResult a = run_pipeline(cfg);
  RunResult b = run_pipeline(cfg);
  CHECK(a.reports[0].defect_estimate == b.reports[0].defect_estimate);
  CHECK(a.field.patch_count() == b.field.patch_count());
  FieldPoint fa = a.field.at(0.437, 0.291);
  FieldPoint fb = b.field.at(0.437, 0.291);
  CHECK(fa.v == fb.v);
  CHECK(fa.phi == fb.phi);
}

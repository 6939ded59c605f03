// Command-line driver for the convex-integration engine.
//
//   run            seed solve + density iterations + diagnostics + exports
//   seed           classical seed solve only
//   step           continue density iterations on a saved field
//   verify         re-run the solution diagnostics on a saved field
//   dump-geometry  flux curves, target curve, relaxation boundary, heatmap
//
// All subcommands take --config <json>, --out <dir>, and optional --seed /
// --iterations overrides. Exit codes: 0 all checks pass, 2 diagnostic
// failures, 1 hard error. Identical config and seed give byte-identical
// output files.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "CLI11.hpp"

#include "pmweak/io.hpp"
#include "pmweak/pipeline.hpp"

namespace fs = std::filesystem;
using pmweak::io::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::int64_t seed_override = -1;
  int iterations_override = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* c = cmd->add_option("--config", args.config_path,
                            "run configuration (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed_override, "override the RNG seed");
  cmd->add_option("--iterations", args.iterations_override,
                  "override the density iteration count");
}

pmweak::io::LoadedConfig load_config(const CommonArgs& args) {
  json doc = json::parse(pmweak::io::read_text(args.config_path));
  pmweak::io::LoadedConfig lc = pmweak::io::parse_run_config(doc);
  if (args.seed_override >= 0)
    lc.cfg.seed = static_cast<std::uint64_t>(args.seed_override);
  if (args.iterations_override >= 0)
    lc.cfg.iterations = args.iterations_override;
  if (!lc.v0_csv.empty()) {
    fs::path p(lc.v0_csv);
    if (p.is_relative() && !fs::exists(p))
      p = fs::path(args.config_path).parent_path() / p;
    auto spline = std::make_shared<pmweak::ClampedSpline>(
        pmweak::io::read_v0_csv(p.string()));
    lc.cfg.v0 = [spline](double s) { return (*spline)(s); };
  }
  return lc;
}

std::string out_file(const CommonArgs& args, const std::string& name) {
  fs::create_directories(args.out_dir);
  return (fs::path(args.out_dir) / name).string();
}

void write_field_bundle(const CommonArgs& args, const pmweak::PatchedField& field,
                        const json& flux_spec) {
  pmweak::io::write_text(out_file(args, "field.json"),
                         pmweak::io::field_to_json(field, flux_spec).dump(2) + "\n");
  pmweak::io::write_text(out_file(args, "patches.json"),
                         pmweak::io::generations_to_json(field).dump(2) + "\n");
  pmweak::io::write_solution_csv(field, out_file(args, "solution.csv"));
}

void write_reports(const CommonArgs& args,
                   const std::vector<pmweak::DefectReport>& reports) {
  json arr = json::array();
  for (const pmweak::DefectReport& r : reports)
    arr.push_back(pmweak::io::report_to_json(r));
  pmweak::io::write_text(out_file(args, "defect_reports.json"),
                         arr.dump(2) + "\n");
}

int cmd_run(const CommonArgs& args) {
  pmweak::io::LoadedConfig lc = load_config(args);
  pmweak::RunResult result = pmweak::run_pipeline(lc.cfg);
  pmweak::Diagnostics diag = pmweak::diagnostics(result, lc.cfg);

  write_field_bundle(args, result.field, lc.flux_spec);
  write_reports(args, result.reports);
  pmweak::io::write_text(out_file(args, "diagnostics.json"),
                         pmweak::io::diagnostics_to_json(diag).dump(2) + "\n");
  pmweak::io::write_heatmap_csv(out_file(args, "heatmap.csv"), result.field,
                                64, 64);

  bool ok = diag.pass();
  for (const pmweak::DefectReport& r : result.reports) ok = ok && r.pass();
  std::printf("run: %zu patches, %d iterations, diagnostics %s\n",
              result.field.patch_count(), lc.cfg.iterations,
              ok ? "pass" : "FAIL");
  return ok ? 0 : 2;
}

int cmd_seed(const CommonArgs& args) {
  pmweak::io::LoadedConfig lc = load_config(args);
  pmweak::RunResult result;
  pmweak::PatchedField field = pmweak::build_seed_field(lc.cfg, result);
  pmweak::MaxPrincipleReport mp = pmweak::check_max_principle(field.seed);
  write_field_bundle(args, field, lc.flux_spec);
  std::printf("seed: M=%.6g lambda=%.6g delta0=%.6g l0=%.6g max principle %s\n",
              result.M, result.lambda, result.delta0, result.l0,
              mp.pass ? "pass" : "FAIL");
  return mp.pass ? 0 : 2;
}

int cmd_step(const CommonArgs& args) {
  pmweak::io::LoadedConfig lc = load_config(args);
  json fj = json::parse(pmweak::io::read_text(out_file(args, "field.json")));
  pmweak::PatchedField field = pmweak::io::field_from_json(fj);

  // Continue the epsilon/eta schedule where the saved field left off, with
  // the same per-iteration seeds as an uninterrupted run.
  int k0 = static_cast<int>(field.generations.size());
  int steps = lc.cfg.iterations > 0 ? lc.cfg.iterations : 1;
  if (args.iterations_override >= 0) steps = args.iterations_override;
  std::vector<pmweak::DefectReport> reports;
  for (int k = k0; k < k0 + steps; ++k) {
    pmweak::DensityOptions opt = lc.cfg.density;
    opt.seed =
        pmweak::mix_seed(lc.cfg.seed, 0x69746572u + static_cast<unsigned>(k));
    auto [next, rep] = pmweak::density_step(
        field, lc.cfg.epsilon0 / pmweak::ipow(2.0, k),
        lc.cfg.eta0 / pmweak::ipow(2.0, k), opt);
    field = std::move(next);
    reports.push_back(std::move(rep));
  }

  write_field_bundle(args, field, fj.at("flux"));
  write_reports(args, reports);
  bool ok = true;
  for (const pmweak::DefectReport& r : reports) ok = ok && r.pass();
  std::printf("step: %d iteration(s), now %zu patches, checks %s\n", steps,
              field.patch_count(), ok ? "pass" : "FAIL");
  return ok ? 0 : 2;
}

int cmd_verify(const CommonArgs& args) {
  pmweak::io::LoadedConfig lc = load_config(args);
  json fj = json::parse(pmweak::io::read_text(out_file(args, "field.json")));
  pmweak::RunResult result;
  result.field = pmweak::io::field_from_json(fj);
  result.M = result.field.seed_flux.M();
  result.lambda = result.field.seed_flux.lambda();
  result.lambda_minus = result.field.spec.lambda_minus;
  result.delta0 = result.field.delta0;
  result.l0 = result.field.spec.l0;
  pmweak::Diagnostics diag = pmweak::diagnostics(result, lc.cfg);
  pmweak::io::write_text(out_file(args, "diagnostics.json"),
                         pmweak::io::diagnostics_to_json(diag).dump(2) + "\n");
  std::printf("verify: max residual %.3g, diagnostics %s\n", diag.max_residual,
              diag.pass() ? "pass" : "FAIL");
  return diag.pass() ? 0 : 2;
}

int cmd_dump_geometry(const CommonArgs& args) {
  pmweak::io::LoadedConfig lc = load_config(args);
  pmweak::RunResult result;
  pmweak::PatchedField field = pmweak::build_seed_field(lc.cfg, result);
  pmweak::FluxModel flux = pmweak::resolve_flux(lc.cfg);
  pmweak::io::write_flux_csv(out_file(args, "flux.csv"), flux, field.seed_flux,
                             2.0 * result.lambda, 1024);
  pmweak::io::write_curve_csv(out_file(args, "curve_K.csv"), field.spec,
                              lc.cfg.R);
  pmweak::io::write_boundary_csv(out_file(args, "boundary_U.csv"), field.spec,
                                 lc.cfg.R);
  pmweak::io::write_heatmap_csv(out_file(args, "heatmap.csv"), field, 64, 64);
  std::printf("dump-geometry: wrote flux, curve, boundary, heatmap to %s\n",
              args.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex-integration engine for the radial Perona-Malik "
               "Neumann problem"};
  app.require_subcommand(1);

  CommonArgs run_args, seed_args, step_args, verify_args, geo_args;
  add_common(app.add_subcommand("run", "full pipeline with exports"), run_args,
             true);
  add_common(app.add_subcommand("seed", "classical seed solve only"),
             seed_args, true);
  add_common(app.add_subcommand("step", "continue iterations on a saved field"),
             step_args, true);
  add_common(app.add_subcommand("verify", "re-check a saved field"),
             verify_args, true);
  add_common(app.add_subcommand("dump-geometry", "export geometry curves"),
             geo_args, true);

  CLI11_PARSE(app, argc, argv);
  try {
    if (app.got_subcommand("run")) return cmd_run(run_args);
    if (app.got_subcommand("seed")) return cmd_seed(seed_args);
    if (app.got_subcommand("step")) return cmd_step(step_args);
    if (app.got_subcommand("verify")) return cmd_verify(verify_args);
    if (app.got_subcommand("dump-geometry")) return cmd_dump_geometry(geo_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

#pragma once

// Import/export layer. CSV output uses %.17g so doubles round-trip and
// identical runs produce byte-identical files; JSON goes through
// nlohmann::ordered_json (insertion order, shortest round-trip doubles),
// which is equally reproducible.
//
// A field file stores the rebuild recipe, not the derived objects: the flux
// spec, the sigma* parameters (lambda, M), the seed grids, and the patch
// generations. Loading reconstructs sigma* and the inclusion geometry with
// the same deterministic builders used by the pipeline.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "pmweak/density.hpp"
#include "pmweak/field.hpp"
#include "pmweak/flux.hpp"
#include "pmweak/geometry.hpp"
#include "pmweak/parabolic.hpp"
#include "pmweak/patch.hpp"
#include "pmweak/pipeline.hpp"

namespace pmweak::io {

using json = nlohmann::ordered_json;

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Flux models from JSON. Accepts either a builtin name ("pm_rational",
// "pm_gaussian") or a piecewise-polynomial table for the diffusivity a(p):
//   {"label": "...", "pieces": [{"lo": 0.0, "hi": 4.0, "coeffs": [c0, c1, ...]},
//                               ...]}
// Pieces must start at 0, be contiguous, and the last piece extends to
// infinity regardless of its "hi". Admissibility is re-checked on load.

struct TableFluxPiece {
  double lo = 0.0, hi = 0.0;
  std::vector<double> coeffs;  // a(p) = sum coeffs[k] p^k on [lo, hi)
};

inline FluxModel flux_from_json(const json& j) {
  if (j.is_string()) return make_flux_model(j.get<std::string>());
  if (!j.is_object() || !j.contains("pieces"))
    throw std::invalid_argument("flux spec: expected a name or a table object");
  std::vector<TableFluxPiece> pieces;
  for (const json& pj : j.at("pieces")) {
    TableFluxPiece p;
    p.lo = pj.at("lo").get<double>();
    p.hi = pj.at("hi").get<double>();
    p.coeffs = pj.at("coeffs").get<std::vector<double>>();
    if (p.coeffs.empty())
      throw std::invalid_argument("flux spec: empty coefficient list");
    pieces.push_back(std::move(p));
  }
  if (pieces.empty()) throw std::invalid_argument("flux spec: no pieces");
  if (pieces.front().lo != 0.0)
    throw std::invalid_argument("flux spec: pieces must start at p = 0");
  for (std::size_t k = 0; k + 1 < pieces.size(); ++k)
    if (pieces[k].hi != pieces[k + 1].lo)
      throw std::invalid_argument("flux spec: pieces not contiguous");

  FluxModel model;
  model.label = j.value("label", std::string("table"));
  model.a = [pieces](double p) {
    std::size_t k = pieces.size() - 1;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
      if (p < pieces[i].hi) {
        k = i;
        break;
      }
    double r = 0.0;
    const std::vector<double>& c = pieces[k].coeffs;
    for (std::size_t i = c.size(); i-- > 0;) r = r * p + c[i];
    return r;
  };
  model.a_prime = [pieces](double p) {
    std::size_t k = pieces.size() - 1;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
      if (p < pieces[i].hi) {
        k = i;
        break;
      }
    double r = 0.0;
    const std::vector<double>& c = pieces[k].coeffs;
    for (std::size_t i = c.size(); i-- > 1;)
      r = r * p + static_cast<double>(i) * c[i];
    return r;
  };
  AdmissibilityReport rep = check_admissible(model, 2000);
  if (!rep.pass())
    throw std::invalid_argument("flux spec: table fails admissibility at p = " +
                                fmt(rep.worst_p));
  return model;
}

// ---------------------------------------------------------------------------
// Initial data from CSV: two columns s,v0 with an optional header row.

inline ClampedSpline read_v0_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<double> x, y;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.back() == '\r') {
      if (!line.empty()) line.pop_back();
      if (line.empty()) continue;
    }
    std::istringstream row(line);
    std::string c0, c1;
    if (!std::getline(row, c0, ',') || !std::getline(row, c1, ',')) continue;
    try {
      std::size_t e0 = 0, e1 = 0;
      double a = std::stod(c0, &e0);
      double b = std::stod(c1, &e1);
      x.push_back(a);
      y.push_back(b);
    } catch (const std::exception&) {
      // header or comment row
    }
  }
  if (x.size() < 2)
    throw std::runtime_error("v0 csv has fewer than 2 numeric rows: " + path);
  return ClampedSpline(std::move(x), std::move(y));
}

inline void write_v0_csv(const std::string& path,
                         const std::function<double(double)>& v0, double R,
                         int samples) {
  std::string body = "s,v0\n";
  for (int k = 0; k <= samples; ++k) {
    double s = R * static_cast<double>(k) / samples;
    body += fmt(s) + "," + fmt(v0(s)) + "\n";
  }
  write_text(path, body);
}

// ---------------------------------------------------------------------------
// Solution export: the full field sampled on the seed grid.

inline void write_solution_csv(const PatchedField& field,
                               const std::string& path) {
  std::string body = "s,t,v,phi,vs,vt,phit\n";
  const ClassicalSolution& seed = field.seed;
  for (int j = 0; j <= seed.Nt; ++j)
    for (int i = 0; i <= seed.Ns; ++i) {
      double s = seed.s_of(i), t = seed.t_of(j);
      FieldPoint f = field.at(s, t);
      body += fmt(s) + "," + fmt(t) + "," + fmt(f.v) + "," + fmt(f.phi) + "," +
              fmt(f.vs) + "," + fmt(f.vt) + "," + fmt(f.phit) + "\n";
    }
  write_text(path, body);
}

// ---------------------------------------------------------------------------
// Patches and the full field as JSON.

inline json patch_to_json(const AuxiliaryPatch& p) {
  json j;
  j["a"] = p.a;
  j["b"] = p.b;
  j["s01"] = p.s01;
  j["s02"] = p.s02;
  j["t0"] = p.t0;
  j["L"] = p.L;
  j["m"] = p.m;
  j["stilde"] = {{"step", p.stilde.step()}, {"values", p.stilde.samples()}};
  return j;
}

inline AuxiliaryPatch patch_from_json(const json& j) {
  AuxiliaryPatch p;
  p.a = j.at("a").get<double>();
  p.b = j.at("b").get<double>();
  p.s01 = j.at("s01").get<double>();
  p.s02 = j.at("s02").get<double>();
  p.t0 = j.at("t0").get<double>();
  p.L = j.at("L").get<double>();
  p.m = j.at("m").get<int>();
  const json& st = j.at("stilde");
  p.stilde = UniformPchip(0.0, st.at("step").get<double>(),
                          st.at("values").get<std::vector<double>>());
  return p;
}

inline json generations_to_json(const PatchedField& field) {
  json gens = json::array();
  for (const auto& gen : field.generations) {
    json g = json::array();
    for (const AuxiliaryPatch& p : gen) g.push_back(patch_to_json(p));
    gens.push_back(std::move(g));
  }
  return gens;
}

// flux_spec is the JSON that produced the flux (a name or a table); it is
// stored verbatim so loading rebuilds the identical model.
inline json field_to_json(const PatchedField& field, const json& flux_spec) {
  const ClassicalSolution& seed = field.seed;
  json j;
  j["flux"] = flux_spec;
  j["lambda"] = field.seed_flux.lambda();
  j["M"] = field.seed_flux.M();
  j["l0"] = field.spec.l0;
  j["delta0"] = field.delta0;
  json sj;
  sj["n"] = seed.n;
  sj["R"] = seed.R;
  sj["T"] = seed.T;
  sj["Ns"] = seed.Ns;
  sj["Nt"] = seed.Nt;
  sj["M"] = seed.M;
  sj["delta0"] = seed.delta0;
  sj["l0"] = seed.l0;
  sj["phit_crosscheck"] = seed.phit_crosscheck;
  sj["v"] = seed.v;
  sj["phi"] = seed.phi;
  sj["vs"] = seed.vs;
  sj["vt"] = seed.vt;
  sj["phit"] = seed.phit;
  sj["node_weight"] = seed.node_weight;
  j["seed"] = std::move(sj);
  j["generations"] = generations_to_json(field);
  return j;
}

inline PatchedField field_from_json(const json& j) {
  FluxModel flux = flux_from_json(j.at("flux"));
  double lambda = j.at("lambda").get<double>();
  double M = j.at("M").get<double>();

  const json& sj = j.at("seed");
  ClassicalSolution seed;
  seed.n = sj.at("n").get<int>();
  seed.R = sj.at("R").get<double>();
  seed.T = sj.at("T").get<double>();
  seed.Ns = sj.at("Ns").get<int>();
  seed.Nt = sj.at("Nt").get<int>();
  seed.M = sj.at("M").get<double>();
  seed.delta0 = sj.at("delta0").get<double>();
  seed.l0 = sj.at("l0").get<double>();
  seed.phit_crosscheck = sj.at("phit_crosscheck").get<double>();
  seed.v = sj.at("v").get<std::vector<double>>();
  seed.phi = sj.at("phi").get<std::vector<double>>();
  seed.vs = sj.at("vs").get<std::vector<double>>();
  seed.vt = sj.at("vt").get<std::vector<double>>();
  seed.phit = sj.at("phit").get<std::vector<double>>();
  seed.node_weight = sj.at("node_weight").get<std::vector<double>>();
  const std::size_t nodes =
      static_cast<std::size_t>(seed.Ns + 1) * (seed.Nt + 1);
  if (seed.v.size() != nodes || seed.phi.size() != nodes ||
      seed.vs.size() != nodes || seed.vt.size() != nodes ||
      seed.phit.size() != nodes)
    throw std::runtime_error("field json: grid size mismatch");

  PatchedField field;
  field.seed_flux = build_sigma_star(flux, lambda, M);
  field.spec = InclusionSpec::make(flux, lambda, j.at("l0").get<double>(),
                                   seed.n - 1);
  field.delta0 = j.at("delta0").get<double>();
  field.seed = std::move(seed);
  for (const json& gj : j.at("generations")) {
    std::vector<AuxiliaryPatch> gen;
    for (const json& pj : gj) gen.push_back(patch_from_json(pj));
    field.generations.push_back(std::move(gen));
  }
  field.rebuild_index();
  return field;
}

// ---------------------------------------------------------------------------
// Reports and diagnostics.

inline json delta_selection_to_json(const DeltaSelection& s) {
  json j;
  j["piece"] = s.piece;
  j["delta_i"] = s.delta_i;
  j["N_i"] = s.N_i;
  j["area_on_curve"] = s.area_K2;
  j["area_near_curve"] = s.area_K3a;
  j["area_near_boundary"] = s.area_K3b;
  j["far_fraction"] = s.ghat_fraction;
  j["satisfied"] = s.satisfied;
  j["pathological"] = s.pathological;
  return j;
}

inline json report_to_json(const DefectReport& r) {
  json j;
  j["epsilon"] = r.epsilon;
  j["eta"] = r.eta;
  j["strip_area"] = r.strip_area;
  j["defect_estimate"] = r.defect_estimate;
  j["defect_stderr"] = r.defect_stderr;
  j["defect_bound"] = r.defect_bound;
  j["uncovered_area"] = r.uncovered_area;
  j["uncovered_charge"] = r.uncovered_charge;
  j["N_max"] = r.N_max;
  j["sup_displacement"] = r.sup_displacement;
  j["sampled_displacement"] = r.sampled_displacement;
  j["inclusion_pass_fraction"] = r.inclusion_pass_fraction;
  j["patch_inclusion_fraction"] = r.patch_inclusion_fraction;
  j["vt_max_patch"] = r.vt_max_patch;
  j["l0"] = r.l0;
  j["pieces_processed"] = r.pieces_processed;
  j["pieces_total"] = r.pieces_total;
  j["squares_total"] = r.squares_total;
  j["generation_counts"] = r.generation_counts;
  j["capped"] = r.capped;
  j["pass_defect"] = r.pass_defect;
  j["pass_displacement"] = r.pass_displacement;
  j["pass_inclusion"] = r.pass_inclusion;
  j["pass_vt"] = r.pass_vt;
  j["pass"] = r.pass();
  json sel = json::array();
  for (const DeltaSelection& s : r.selections)
    sel.push_back(delta_selection_to_json(s));
  j["selections"] = std::move(sel);
  return j;
}

inline json diagnostics_to_json(const Diagnostics& d) {
  json j;
  json res = json::array();
  for (const ResidualResult& r : d.residuals) {
    json rj;
    rj["label"] = r.label;
    rj["residual"] = r.residual;
    rj["bound"] = r.bound;
    rj["pass"] = r.pass;
    res.push_back(std::move(rj));
  }
  j["residuals"] = std::move(res);
  j["max_residual"] = d.max_residual;
  j["pass_residual"] = d.pass_residual;
  j["strips_equal_seed"] = d.strips_equal_seed;
  j["initial_exact"] = d.initial_exact;
  j["neumann_edge"] = d.neumann_edge;
  j["pass_neumann"] = d.pass_neumann;
  j["grad_sup"] = d.grad_sup;
  j["grad_limit"] = d.grad_limit;
  j["pass_gradient"] = d.pass_gradient;
  j["mass_drift_rel"] = d.mass_drift_rel;
  j["pass_mass"] = d.pass_mass;
  j["pass"] = d.pass();
  return j;
}

// ---------------------------------------------------------------------------
// Plotting exports: flux curves, the target curve and relaxation boundary,
// cover plans as polygon lists, and a defect heatmap.

inline void write_flux_csv(const std::string& path, const FluxModel& flux,
                           const SigmaStar& sstar, double p_max, int samples) {
  std::string body = "p,sigma,sigma_star\n";
  for (int k = 0; k <= samples; ++k) {
    double p = p_max * static_cast<double>(k) / samples;
    body += fmt(p) + "," + fmt(flux.sigma(p)) + "," + fmt(sstar(p)) + "\n";
  }
  write_text(path, body);
}

// The target curve K(s) in the (p, q') plane at a fixed radius s.
inline void write_curve_csv(const std::string& path, const InclusionSpec& spec,
                            double s) {
  double w = ipow(s, spec.m);
  std::string body = "p,q\n";
  for (std::size_t k = 0; k < spec.curve_p.size(); ++k)
    body += fmt(spec.curve_p[k]) + "," + fmt(w * spec.curve_sigma[k]) + "\n";
  write_text(path, body);
}

// Boundary of the planar relaxation U(s): for each sign, the curve cap over
// [lambda_minus, lambda] and the flat base at q' = s^m sigma(lambda).
inline void write_boundary_csv(const std::string& path,
                               const InclusionSpec& spec, double s,
                               int samples = 512) {
  double w = ipow(s, spec.m);
  std::string body = "piece,p,q\n";
  auto emit = [&](const std::string& tag, double sign) {
    for (int k = 0; k <= samples; ++k) {
      double p = spec.lambda_minus +
                 (spec.lambda - spec.lambda_minus) * static_cast<double>(k) /
                     samples;
      body += tag + "_cap," + fmt(sign * p) + "," +
              fmt(sign * w * spec.flux.sigma(p)) + "\n";
    }
    body += tag + "_base," + fmt(sign * spec.lambda_minus) + "," +
            fmt(sign * w * spec.sigma_lambda) + "\n";
    body += tag + "_base," + fmt(sign * spec.lambda) + "," +
            fmt(sign * w * spec.sigma_lambda) + "\n";
  };
  emit("plus", 1.0);
  emit("minus", -1.0);
  write_text(path, body);
}

inline void write_cover_plan_csv(const std::string& path,
                                 const CoverPlan& plan) {
  std::string body = "element,vertex,x,y\n";
  for (std::size_t k = 0; k < plan.elements.size(); ++k) {
    const CoverElement& e = plan.elements[k];
    double vx[4], vy[4];
    if (plan.shape == CoverShape::square) {
      double h = 0.5 * e.scale;
      vx[0] = e.cx - h; vy[0] = e.cy - h;
      vx[1] = e.cx + h; vy[1] = e.cy - h;
      vx[2] = e.cx + h; vy[2] = e.cy + h;
      vx[3] = e.cx - h; vy[3] = e.cy + h;
    } else {
      double wx = plan.xi * e.scale;
      vx[0] = e.cx - wx; vy[0] = e.cy;
      vx[1] = e.cx;      vy[1] = e.cy - e.scale;
      vx[2] = e.cx + wx; vy[2] = e.cy;
      vx[3] = e.cx;      vy[3] = e.cy + e.scale;
    }
    for (int v = 0; v < 4; ++v)
      body += std::to_string(k) + "," + std::to_string(v) + "," + fmt(vx[v]) +
              "," + fmt(vy[v]) + "\n";
  }
  write_text(path, body);
}

// Pointwise distance of the field gradient to the target curve on a uniform
// strip grid; the raw material for defect plots.
inline void write_heatmap_csv(const std::string& path,
                              const PatchedField& field, int nx, int ny) {
  std::string body = "s,t,dist_K,gauge\n";
  double s_lo = field.s_lo(), s_hi = field.s_hi(), T = field.seed.T;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double s = s_lo + (s_hi - s_lo) * (i + 0.5) / nx;
      double t = T * (j + 0.5) / ny;
      GradientSample g = field.sample(s, t);
      GaugeParts parts = gauge_parts(field.spec, g);
      double gd = std::min(parts.dist_K, parts.dist_boundary_U);
      body += fmt(s) + "," + fmt(t) + "," + fmt(parts.dist_K) + "," + fmt(gd) +
              "\n";
    }
  write_text(path, body);
}

// ---------------------------------------------------------------------------
// Run configuration from JSON. Schema (all keys optional unless noted):
//   n, R, T, Ns, Nt        problem and grid sizes
//   flux                   name or table object (see flux_from_json)
//   v0_csv                 path to two-column s,v0 samples (required by the
//                          CLI; tests may set cfg.v0 directly instead)
//   epsilon0, eta0         first-step budgets, halved each iteration
//   iterations, seed
//   density                subobject forwarded to DensityOptions

struct LoadedConfig {
  RunConfig cfg;
  json flux_spec = "pm_rational";
  std::string v0_csv;
};

inline LoadedConfig parse_run_config(const json& j) {
  LoadedConfig out;
  RunConfig& c = out.cfg;
  c.n = j.value("n", c.n);
  c.R = j.value("R", c.R);
  c.T = j.value("T", c.T);
  c.Ns = j.value("Ns", c.Ns);
  c.Nt = j.value("Nt", c.Nt);
  c.epsilon0 = j.value("epsilon0", c.epsilon0);
  c.eta0 = j.value("eta0", c.eta0);
  c.iterations = j.value("iterations", c.iterations);
  c.seed = j.value("seed", c.seed);
  if (j.contains("flux")) {
    out.flux_spec = j.at("flux");
    FluxModel flux = flux_from_json(out.flux_spec);
    c.flux_name = flux.label;
    if (!out.flux_spec.is_string()) c.flux_model = std::move(flux);
  }
  if (j.contains("v0_csv")) out.v0_csv = j.at("v0_csv").get<std::string>();
  if (j.contains("density")) {
    const json& d = j.at("density");
    DensityOptions& o = c.density;
    o.mc_samples = d.value("mc_samples", o.mc_samples);
    o.defect_samples = d.value("defect_samples", o.defect_samples);
    o.lip_samples = d.value("lip_samples", o.lip_samples);
    o.square_coverage = d.value("square_coverage", o.square_coverage);
    o.diamond_coverage = d.value("diamond_coverage", o.diamond_coverage);
    o.max_pieces = d.value("max_pieces", o.max_pieces);
    o.max_squares_per_piece =
        d.value("max_squares_per_piece", o.max_squares_per_piece);
    o.max_diamonds_per_square =
        d.value("max_diamonds_per_square", o.max_diamonds_per_square);
    o.max_patches = d.value("max_patches", o.max_patches);
    o.table_samples = d.value("table_samples", o.table_samples);
    o.inclusion_band = d.value("inclusion_band", o.inclusion_band);
    o.inclusion_tolerance =
        d.value("inclusion_tolerance", o.inclusion_tolerance);
  }
  return out;
}

}  // namespace pmweak::io

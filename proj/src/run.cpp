#include "spinlab/run.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "spinlab/cauchy.hpp"
#include "spinlab/clifford.hpp"
#include "spinlab/config.hpp"
#include "spinlab/edm.hpp"
#include "spinlab/grid_calculus.hpp"
#include "spinlab/pointwise_metric.hpp"
#include "spinlab/serialize.hpp"
#include "spinlab/spinor_fields.hpp"

namespace spinlab::run {
namespace {

using config::RunConfig;
using json = nlohmann::ordered_json;

void need(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError("options: " + msg);
}

int configure_threads() {
  long t = 1;
  if (const char* env = std::getenv("SPINLAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) t = std::min(v, 64L);
  }
  Eigen::setNbThreads(static_cast<int>(t));
  return static_cast<int>(t);
}

struct Context {
  RunConfig cfg;
  bool strict = false;
  json results = json::object();
  json checks = json::object();
  std::vector<std::pair<std::string, std::string>>* artifacts = nullptr;
  bool all_pass = true;

  double tol(double def, double str) const { return strict ? str : def; }

  void check(const std::string& name, double value, double tolerance) {
    bool ok = std::isfinite(value) && value <= tolerance;
    checks[name] = {{"value", value}, {"tolerance", tolerance}, {"pass", ok}};
    all_pass = all_pass && ok;
  }

  void emit(const std::string& name, std::string bytes) {
    artifacts->emplace_back(name, std::move(bytes));
  }

  void allow_options(const std::set<std::string>& keys) const {
    for (const auto& item : cfg.options.items())
      need(keys.count(item.key()) == 1, "unknown option '" + item.key() + "'");
  }
  bool opt_bool(const std::string& key, bool def) const {
    if (!cfg.options.contains(key)) return def;
    need(cfg.options[key].is_boolean(), "'" + key + "' must be a boolean");
    return cfg.options[key].get<bool>();
  }
  double opt_num(const std::string& key, double def) const {
    if (!cfg.options.contains(key)) return def;
    need(cfg.options[key].is_number(), "'" + key + "' must be a number");
    return cfg.options[key].get<double>();
  }
  long opt_int(const std::string& key, long def, bool required = false) const {
    if (!cfg.options.contains(key)) {
      need(!required, "missing required option '" + key + "'");
      return def;
    }
    need(cfg.options[key].is_number_integer(), "'" + key + "' must be an integer");
    return cfg.options[key].get<long>();
  }
  std::string opt_str(const std::string& key, const std::string& def) const {
    if (!cfg.options.contains(key)) return def;
    need(cfg.options[key].is_string(), "'" + key + "' must be a string");
    return cfg.options[key].get<std::string>();
  }
};

double sup_abs(const grid::ScalarField& f) {
  double v = 0.0;
  for (long p = 0; p < f.points(); ++p) {
    if (!std::isfinite(f.v[p])) return std::numeric_limits<double>::infinity();
    v = std::max(v, std::abs(f.v[p]));
  }
  return v;
}

template <class F>
double sup_abs_field(const F& f) {
  double v = 0.0;
  for (long p = 0; p < f.points(); ++p) {
    if (f.v[p].size() == 0) continue;
    if (!f.v[p].allFinite()) return std::numeric_limits<double>::infinity();
    v = std::max(v, f.v[p].cwiseAbs().maxCoeff());
  }
  return v;
}

void ensure_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericalError(what + " is not finite");
}

grid::MetricField main_metric(const Context& ctx, const grid::TorusGrid& g) {
  return config::build_metric(ctx.cfg.metric, g, ctx.cfg.r, ctx.cfg.s);
}

grid::MetricField option_metric(const Context& ctx, const char* key, const grid::TorusGrid& g) {
  need(ctx.cfg.options.contains(key), std::string("missing required option '") + key + "'");
  return config::build_metric(config::normalize_metric_spec(ctx.cfg.options[key]), g,
                              ctx.cfg.r, ctx.cfg.s);
}

std::vector<spinor::SpinorField> build_spinors(const Context& ctx, const grid::TorusGrid& g,
                                               const clifford::GammaRep& rep) {
  spinor::SpinStructureTwist tw = spinor::make_twist(ctx.cfg.twist);
  std::vector<spinor::SpinorField> out;
  for (const json& spec : ctx.cfg.spinors)
    out.push_back(config::build_spinor(spec, g, rep, tw));
  return out;
}

spinor::SpinorField single_spinor(const Context& ctx, const grid::TorusGrid& g,
                                  const clifford::GammaRep& rep, const char* cmd) {
  need(ctx.cfg.spinors.size() == 1, std::string(cmd) + " takes exactly one spinor");
  return config::build_spinor(ctx.cfg.spinors[0], g, rep,
                              spinor::make_twist(ctx.cfg.twist));
}

json complex_matrix_json(const CMat& M) {
  json rows = json::array();
  for (long i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < M.cols(); ++j)
      row.push_back(json::array({M(i, j).real(), M(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Deterministic low-harmonic perturbation direction for el-check: every
// scalar ingredient is a sum of cosine waves with integer frequencies in
// [-2, 2]^m drawn from the seeded generator.  Spinor perturbations carry the
// twist phase e^{i delta.x} so they are valid sections for any twist.
struct Wave {
  std::vector<int> k;
  double amp = 0.0;
  double phase = 0.0;
};

std::vector<Wave> draw_waves(std::mt19937& rng, int m, int count, double amp) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_int_distribution<int> K(-2, 2);
  std::vector<Wave> ws(static_cast<size_t>(count));
  for (Wave& w : ws) {
    w.k.resize(static_cast<size_t>(m));
    for (int d = 0; d < m; ++d) w.k[static_cast<size_t>(d)] = K(rng);
    w.amp = amp * U(rng);
    w.phase = kPi * U(rng);
  }
  return ws;
}

double eval_waves(const std::vector<Wave>& ws, const Vec& x) {
  double v = 0.0;
  for (const Wave& w : ws) {
    double arg = w.phase;
    for (int d = 0; d < x.size(); ++d) arg += w.k[static_cast<size_t>(d)] * x[d];
    v += w.amp * std::cos(arg);
  }
  return v;
}

edm::Direction make_direction(unsigned seed, const grid::TorusGrid& g,
                              const clifford::GammaRep& rep,
                              const spinor::SpinStructureTwist& tw, int nfields) {
  std::mt19937 rng(seed);
  const int m = g.dim();
  edm::Direction dir;
  std::vector<std::vector<Wave>> kw;
  for (int i = 0; i < m * m; ++i) kw.push_back(draw_waves(rng, m, 2, 0.1));
  dir.k = grid::MatrixField(g, Mat::Zero(m, m));
  for (long p = 0; p < g.points(); ++p) {
    Vec x = g.coords(p);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        double v = eval_waves(kw[static_cast<size_t>(i * m + j)], x);
        dir.k.v[p](i, j) = v;
        dir.k.v[p](j, i) = v;
      }
  }
  for (int f = 0; f < nfields; ++f) {
    std::vector<std::vector<Wave>> re, im;
    for (int c = 0; c < rep.N; ++c) {
      re.push_back(draw_waves(rng, m, 2, 0.3));
      im.push_back(draw_waves(rng, m, 2, 0.3));
    }
    spinor::SpinorField phi = spinor::make_spinor(g, rep, tw);
    for (long p = 0; p < g.points(); ++p) {
      Vec x = g.coords(p);
      double darg = 0.0;
      for (int d = 0; d < m; ++d) darg += tw.delta[static_cast<size_t>(d)] * x[d];
      complexd twphase = std::exp(complexd(0.0, darg));
      for (int c = 0; c < rep.N; ++c)
        phi.data.v[p][c] = twphase * complexd(eval_waves(re[static_cast<size_t>(c)], x),
                                              eval_waves(im[static_cast<size_t>(c)], x));
    }
    dir.phi.push_back(std::move(phi));
  }
  std::vector<std::vector<Wave>> aw;
  for (int a = 0; a < m; ++a) aw.push_back(draw_waves(rng, m, 2, 0.2));
  dir.a = grid::VectorField(g, Vec::Zero(m));
  for (long p = 0; p < g.points(); ++p) {
    Vec x = g.coords(p);
    for (int a = 0; a < m; ++a) dir.a.v[p][a] = eval_waves(aw[static_cast<size_t>(a)], x);
  }
  return dir;
}

// ---------------------------------------------------------------- commands

void handle_clifford_check(Context& ctx) {
  ctx.allow_options({"loop-check"});
  clifford::GammaRep rep = clifford::build_rep(ctx.cfg.r, ctx.cfg.s);
  const int m = rep.m;
  const CMat I = CMat::Identity(rep.N, rep.N);
  double anti = 0.0, adj = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      CMat res = rep.gamma[i] * rep.gamma[j] + rep.gamma[j] * rep.gamma[i];
      if (i == j) res += 2.0 * rep.eps[i] * I;
      anti = std::max(anti, res.cwiseAbs().maxCoeff());
    }
    double sgn = (rep.s % 2 == 1) ? 1.0 : -1.0;
    adj = std::max(adj, (rep.gamma[i].adjoint() * rep.B - sgn * rep.B * rep.gamma[i])
                            .cwiseAbs()
                            .maxCoeff());
  }
  double herm = (rep.B - rep.B.adjoint()).cwiseAbs().maxCoeff();
  ctx.results["spinor_dimension"] = rep.N;
  ctx.check("anticommutation_residual", anti, ctx.tol(1e-12, 1e-13));
  ctx.check("adjoint_relation_residual", adj, ctx.tol(1e-12, 1e-13));
  ctx.check("pairing_hermiticity_residual", herm, ctx.tol(1e-12, 1e-13));

  if (ctx.opt_bool("loop-check", false)) {
    int a0 = -1, a1 = -1;
    if (rep.r >= 2) {
      a0 = 0;
      a1 = 1;
    } else if (rep.s >= 2) {
      a0 = rep.r;
      a1 = rep.r + 1;
    }
    need(a0 >= 0, "loop-check needs two frame directions of equal sign");
    auto loop = [&](double t) {
      Mat O = Mat::Identity(m, m);
      double c = std::cos(2.0 * kPi * t), s = std::sin(2.0 * kPi * t);
      O(a0, a0) = c;
      O(a1, a1) = c;
      O(a0, a1) = -s;
      O(a1, a0) = s;
      return O;
    };
    CMat L = clifford::spin_lift_path(rep, loop, 64);
    double dist = (L + I).cwiseAbs().maxCoeff();
    ctx.check("rotation_loop_residual", dist, ctx.tol(1e-10, 1e-11));
  }
}

void handle_dirac_spectrum(Context& ctx) {
  ctx.allow_options({"count", "expect-half-integers", "expect", "expect-tolerance"});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  long count = ctx.opt_int("count", 16);
  need(count >= 1, "'count' must be positive");
  double asym = 0.0;
  std::vector<double> eigs = spinor::dirac_spectrum(
      gm, spinor::make_twist(ctx.cfg.twist), static_cast<int>(count), &asym);
  ctx.results["eigenvalues"] = eigs;
  ctx.check("spectrum_asymmetry", asym, ctx.tol(1e-9, 1e-10));
  if (ctx.opt_bool("expect-half-integers", false)) {
    double worst = 0.0;
    for (double e : eigs) worst = std::max(worst, std::abs(e - std::round(e - 0.5) - 0.5));
    ctx.check("half_integer_distance", worst, ctx.tol(5e-3, 5e-3));
  }
  if (ctx.cfg.options.contains("expect")) {
    const json& ex = ctx.cfg.options["expect"];
    need(ex.is_array() && ex.size() == eigs.size(),
         "'expect' must list one value per eigenvalue");
    double worst = 0.0;
    for (size_t i = 0; i < eigs.size(); ++i) {
      need(ex[i].is_number(), "'expect' entries must be numbers");
      worst = std::max(worst, std::abs(eigs[i] - ex[i].get<double>()));
    }
    ctx.check("expected_spectrum_distance", worst, ctx.opt_num("expect-tolerance", 5e-3));
  }
  std::string csv = "eigenvalue\n";
  for (double e : eigs) csv += serialize::format_double(e) + "\n";
  ctx.emit("spectrum.csv", std::move(csv));
}

void handle_dirac_apply(Context& ctx) {
  ctx.allow_options({});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  spinor::DiracGeometry geom = spinor::make_geometry(gm);
  spinor::SpinorField psi = single_spinor(ctx, g, geom.rep, "dirac-apply");
  grid::VectorField A = config::build_potential(ctx.cfg.potential, g, g.dim());
  double lambda = ctx.cfg.params.lambda.empty() ? 0.0 : ctx.cfg.params.lambda[0];
  double q = ctx.cfg.params.q.empty() ? 0.0 : ctx.cfg.params.q[0];
  spinor::U1Potential pot{A, q};
  spinor::SpinorField Dpsi = spinor::dirac(geom, psi, &pot);
  spinor::SpinorField D0 = spinor::dirac(geom, psi);
  spinor::SpinorField gA = spinor::clifford_mult(geom, grid::sharp(gm, A), psi);

  // internal consistency: the connection-derived coupling equals
  // + i q gamma(#A) psi up to roundoff
  spinor::SpinorField coup = Dpsi;
  spinor::add_scaled(coup, D0, complexd(-1.0, 0.0));
  spinor::add_scaled(coup, gA, complexd(0.0, -q));
  double coupling = spinor::sup_norm(coup);

  // the displayed alternative "D psi - q A . psi": its disagreement with the
  // connection-derived operator, (1 + i) q gamma(#A) psi, is reported as data
  spinor::SpinorField disp = D0;
  spinor::add_scaled(disp, gA, complexd(-q, 0.0));
  double display_gap = spinor::sup_distance(Dpsi, disp);

  spinor::SpinorField resid = Dpsi;
  spinor::add_scaled(resid, psi, complexd(-lambda, 0.0));

  double out_sup = spinor::sup_norm(Dpsi);
  ensure_finite(out_sup, "dirac-apply result");
  ctx.results["input_sup"] = spinor::sup_norm(psi);
  ctx.results["result_sup"] = out_sup;
  ctx.results["eigen_residual_sup"] = spinor::sup_norm(resid);
  ctx.results["display_form_gap"] = display_gap;
  ctx.check("coupling_identity_residual", coupling, ctx.tol(1e-10, 1e-11));
  ctx.emit("dirac_psi.json", serialize::spinor_field_to_json(Dpsi).dump(2) + "\n");
}

void handle_dirac_pullback(Context& ctx) {
  ctx.allow_options({"h-metric", "conjugation-check"});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  grid::MetricField hm = option_metric(ctx, "h-metric", g);
  clifford::GammaRep rep = clifford::build_rep(ctx.cfg.r, ctx.cfg.s);
  spinor::SpinorField psi = single_spinor(ctx, g, rep, "dirac-pullback");
  spinor::SpinorField Dp = spinor::dirac_pullback(gm, hm, psi);
  double out_sup = spinor::sup_norm(Dp);
  ensure_finite(out_sup, "dirac-pullback result");
  ctx.results["result_sup"] = out_sup;
  if (ctx.opt_bool("conjugation-check", false)) {
    spinor::MetricPath fwd = spinor::make_metric_path(gm, hm);
    spinor::MetricPath bwd = spinor::make_metric_path(hm, gm);
    spinor::SpinorField oracle = spinor::beta_transport(
        bwd, spinor::dirac(spinor::make_geometry(hm), spinor::beta_transport(fwd, psi)));
    double rel = spinor::sup_distance(Dp, oracle) /
                 std::max(spinor::sup_norm(oracle), 1e-30);
    ctx.results["conjugation_oracle_sup"] = spinor::sup_norm(oracle);
    ctx.check("conjugation_relative_gap", rel, ctx.tol(1e-3, 1e-3));
  }
  ctx.emit("pullback_psi.json", serialize::spinor_field_to_json(Dp).dump(2) + "\n");
}

void handle_beta_transport(Context& ctx) {
  ctx.allow_options({"h-metric"});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  grid::MetricField hm = option_metric(ctx, "h-metric", g);
  spinor::DiracGeometry geog = spinor::make_geometry(gm);
  spinor::DiracGeometry geoh = spinor::make_geometry(hm);
  spinor::SpinorField psi = single_spinor(ctx, g, geog.rep, "beta-transport");
  spinor::MetricPath fwd = spinor::make_metric_path(gm, hm);
  spinor::MetricPath bwd = spinor::make_metric_path(hm, gm);
  spinor::SpinorField phi = spinor::beta_transport(fwd, psi);
  spinor::SpinorField back = spinor::beta_transport(bwd, phi);
  double roundtrip = spinor::sup_distance(back, psi);

  auto ig = spinor::spinor_inner_field(psi, psi);
  auto ih = spinor::spinor_inner_field(phi, phi);
  double iso = 0.0;
  for (long p = 0; p < g.points(); ++p)
    iso = std::max(iso, std::abs(ig.v[p] - ih.v[p]));

  const int m = g.dim();
  grid::VectorField V(g, Vec::Zero(m));
  for (long p = 0; p < g.points(); ++p) {
    Vec x = g.coords(p);
    V.v[p][0] = 0.5 + 0.2 * std::sin(x[m - 1]);
    for (int a = 1; a < m; ++a) V.v[p][a] = -0.3 * std::cos(x[a - 1]);
  }
  spinor::SpinorField lhs = spinor::beta_transport(fwd, spinor::clifford_mult(geog, V, psi));
  grid::VectorField BV(g, Vec::Zero(m));
  for (long p = 0; p < g.points(); ++p)
    BV.v[p] = metric::comparison_b(gm.val.v[p], hm.val.v[p]) * V.v[p];
  spinor::SpinorField rhs = spinor::clifford_mult(geoh, BV, phi);
  double intertwine = spinor::sup_distance(lhs, rhs);

  ctx.results["transported_sup"] = spinor::sup_norm(phi);
  ctx.check("roundtrip_residual", roundtrip, ctx.tol(1e-9, 1e-10));
  ctx.check("isometry_residual", iso, ctx.tol(1e-9, 1e-10));
  ctx.check("clifford_intertwining_residual", intertwine, ctx.tol(1e-9, 1e-10));
  ctx.emit("beta_psi.json", serialize::spinor_field_to_json(phi).dump(2) + "\n");
}

void handle_edm_residual(Context& ctx) {
  ctx.allow_options({"expect-zero"});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  need(!ctx.cfg.spinors.empty(), "edm-residual needs at least one spinor section");
  clifford::GammaRep rep = clifford::build_rep(ctx.cfg.r, ctx.cfg.s);
  std::vector<spinor::SpinorField> psis = build_spinors(ctx, g, rep);
  grid::VectorField A = config::build_potential(ctx.cfg.potential, g, g.dim());
  std::vector<spinor::UniversalSection> sections;
  for (auto& psi : psis) sections.push_back({gm, psi});
  edm::EDMResidual res = edm::edm_residual(ctx.cfg.params, sections, A);

  double tensor_sup = sup_abs_field(res.tensor);
  double spinor_sup = 0.0;
  for (const auto& f : res.spinor) spinor_sup = std::max(spinor_sup, spinor::sup_norm(f));
  double maxwell_sup = sup_abs_field(res.maxwell);
  ensure_finite(tensor_sup, "tensor residual");
  ensure_finite(spinor_sup, "spinor residual");
  ensure_finite(maxwell_sup, "maxwell residual");
  ctx.results["tensor_residual_sup"] = tensor_sup;
  ctx.results["spinor_residual_sup"] = spinor_sup;
  ctx.results["maxwell_residual_sup"] = maxwell_sup;
  if (ctx.opt_bool("expect-zero", false)) {
    ctx.check("tensor_residual_sup", tensor_sup, ctx.tol(1e-13, 1e-13));
    ctx.check("spinor_residual_sup", spinor_sup, ctx.tol(1e-13, 1e-13));
    ctx.check("maxwell_residual_sup", maxwell_sup, ctx.tol(1e-13, 1e-13));
  }
  ctx.emit("residual_tensor.json", serialize::matrix_field_to_json(res.tensor).dump(2) + "\n");
  ctx.emit("residual_maxwell.json",
           serialize::vector_field_to_json(res.maxwell).dump(2) + "\n");
  for (size_t i = 0; i < res.spinor.size(); ++i)
    ctx.emit("residual_spinor_" + std::to_string(i) + ".json",
             serialize::spinor_field_to_json(res.spinor[i]).dump(2) + "\n");
}

void handle_lagrangian(Context& ctx) {
  ctx.allow_options({"expect", "expect-tolerance"});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  clifford::GammaRep rep = clifford::build_rep(ctx.cfg.r, ctx.cfg.s);
  std::vector<spinor::SpinorField> psis = build_spinors(ctx, g, rep);
  grid::VectorField A = config::build_potential(ctx.cfg.potential, g, g.dim());
  double L = edm::lagrangian(ctx.cfg.params, gm, psis, A);
  ensure_finite(L, "action value");
  ctx.results["value"] = L;
  if (ctx.cfg.options.contains("expect")) {
    double expect = ctx.opt_num("expect", 0.0);
    ctx.check("expected_value_distance", std::abs(L - expect),
              ctx.opt_num("expect-tolerance", 1e-9));
  }
}

void handle_el_check(Context& ctx) {
  ctx.allow_options({"seed", "step", "richardson"});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  clifford::GammaRep rep = clifford::build_rep(ctx.cfg.r, ctx.cfg.s);
  std::vector<spinor::SpinorField> psis = build_spinors(ctx, g, rep);
  grid::VectorField A = config::build_potential(ctx.cfg.potential, g, g.dim());
  long seed = ctx.opt_int("seed", 1);
  need(seed >= 0, "'seed' must be nonnegative");
  double step = ctx.opt_num("step", 0.02);
  need(step > 0.0 && step <= 0.5, "'step' must lie in (0, 0.5]");
  bool richardson = ctx.opt_bool("richardson", true);
  edm::Direction dir =
      make_direction(static_cast<unsigned>(seed), g, rep,
                     spinor::make_twist(ctx.cfg.twist), static_cast<int>(psis.size()));
  edm::ELReport rep_el = edm::el_consistency(ctx.cfg.params, gm, psis, A, dir, step, richardson);
  double denom = std::max(std::abs(rep_el.dl), std::abs(rep_el.pairing));
  double rel = denom > 1e-12 ? rep_el.gap / denom : rep_el.gap;
  ensure_finite(rep_el.dl, "action derivative");
  ctx.results["action_derivative"] = rep_el.dl;
  ctx.results["pairing"] = rep_el.pairing;
  ctx.results["gap"] = rep_el.gap;
  ctx.check("relative_gap", rel, ctx.tol(1e-3, 1e-4));
}

void handle_constraints(Context& ctx) {
  ctx.allow_options({"K", "A0", "A1", "expect-zero", "expect-hamiltonian", "expect-tolerance"});
  need(ctx.cfg.s == 0, "constraints: the config signature describes the Riemannian slice");
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField g0 = main_metric(ctx, g);
  const int m = g.dim();
  clifford::GammaRep ambient = clifford::build_rep(m, 1);
  std::vector<spinor::SpinorField> psis = build_spinors(ctx, g, ambient);

  grid::MatrixField K(g, Mat::Zero(m, m));
  if (ctx.cfg.options.contains("K")) {
    const json& kspec = ctx.cfg.options["K"];
    need(kspec.is_object() && kspec.contains("type") && kspec["type"].is_string(),
         "'K' must be a spec object with a 'type'");
    std::string type = kspec["type"].get<std::string>();
    if (type == "zero") {
    } else if (type == "metric-multiple") {
      need(kspec.contains("factor") && kspec["factor"].is_number(),
           "'K' of type metric-multiple needs a numeric 'factor'");
      double c = kspec["factor"].get<double>();
      for (long p = 0; p < g.points(); ++p) K.v[p] = c * g0.val.v[p];
    } else if (type == "grid-file") {
      need(kspec.contains("path") && kspec["path"].is_string(),
           "'K' grid-file spec needs a string 'path'");
      std::ifstream in(kspec["path"].get<std::string>());
      need(static_cast<bool>(in), "cannot open K grid file");
      json doc;
      try {
        doc = json::parse(in);
      } catch (const std::exception& e) {
        throw ShapeError(std::string("options: invalid JSON in K grid file: ") + e.what());
      }
      K = serialize::matrix_field_from_json(doc);
      need(K.grid.sizes() == g.sizes(), "K grid does not match config grid");
    } else {
      need(false, "unknown K spec type '" + type + "'");
    }
  }
  json zero_spec = {{"type", "zero"}};
  grid::VectorField A0 = config::build_potential(
      ctx.cfg.options.contains("A0") ? config::normalize_potential_spec(ctx.cfg.options["A0"])
                                     : zero_spec,
      g, m);
  grid::VectorField A1 = config::build_potential(
      ctx.cfg.options.contains("A1") ? config::normalize_potential_spec(ctx.cfg.options["A1"])
                                     : zero_spec,
      g, m);

  edm::ConstraintResidual cr =
      edm::constraint_residual(edm::InitialData{g0, K, psis, A0, A1}, ctx.cfg.params);
  double ham_sup = sup_abs(cr.hamiltonian);
  double mom_sup = sup_abs_field(cr.momentum);
  ensure_finite(ham_sup, "hamiltonian constraint");
  ensure_finite(mom_sup, "momentum constraint");
  ctx.results["hamiltonian_sup"] = ham_sup;
  ctx.results["momentum_sup"] = mom_sup;
  if (ctx.opt_bool("expect-zero", false)) {
    ctx.check("hamiltonian_sup", ham_sup, ctx.tol(1e-13, 1e-13));
    ctx.check("momentum_sup", mom_sup, ctx.tol(1e-13, 1e-13));
  }
  if (ctx.cfg.options.contains("expect-hamiltonian")) {
    double expect = ctx.opt_num("expect-hamiltonian", 0.0);
    double worst = 0.0;
    for (long p = 0; p < g.points(); ++p)
      worst = std::max(worst, std::abs(cr.hamiltonian.v[p] - expect));
    ctx.check("expected_hamiltonian_distance", worst, ctx.opt_num("expect-tolerance", 1e-9));
  }
  ctx.emit("hamiltonian.json", serialize::scalar_field_to_json(cr.hamiltonian).dump(2) + "\n");
  ctx.emit("momentum.json", serialize::vector_field_to_json(cr.momentum).dump(2) + "\n");
}

void handle_wave_gauge(Context& ctx) {
  ctx.allow_options({"h-metric", "expect-zero"});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  grid::MetricField hm = ctx.cfg.options.contains("h-metric")
                             ? option_metric(ctx, "h-metric", g)
                             : grid::flat_metric(g, ctx.cfg.r, ctx.cfg.s);
  grid::VectorField Q = edm::wave_gauge_residual(hm, gm);
  double sup = sup_abs_field(Q);
  ensure_finite(sup, "wave-gauge residual");
  ctx.results["residual_sup"] = sup;
  if (ctx.opt_bool("expect-zero", false)) ctx.check("residual_sup", sup, 0.0);
  ctx.emit("wave_gauge.json", serialize::vector_field_to_json(Q).dump(2) + "\n");
}

void handle_symbol(Context& ctx) {
  ctx.allow_options({"operator", "omega", "point", "square", "h-metric"});
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MetricField gm = main_metric(ctx, g);
  spinor::DiracGeometry geom = spinor::make_geometry(gm);
  const int m = g.dim();
  std::string opname = ctx.opt_str("operator", "dirac");
  need(opname == "dirac" || opname == "dirac-pullback",
       "'operator' must be 'dirac' or 'dirac-pullback'");
  need(ctx.cfg.options.contains("omega") && ctx.cfg.options["omega"].is_array() &&
           static_cast<int>(ctx.cfg.options["omega"].size()) == m,
       "'omega' must be a covector with one entry per grid axis");
  Vec omega(m);
  for (int d = 0; d < m; ++d) {
    need(ctx.cfg.options["omega"][static_cast<size_t>(d)].is_number(),
         "'omega' entries must be numbers");
    omega[d] = ctx.cfg.options["omega"][static_cast<size_t>(d)].get<double>();
  }
  long point = ctx.opt_int("point", 0);
  need(point >= 0 && point < g.points(), "'point' out of range");
  bool square = ctx.opt_bool("square", false);

  grid::MetricField hm;
  bool pullback = (opname == "dirac-pullback");
  if (pullback) hm = option_metric(ctx, "h-metric", g);

  std::function<spinor::SpinorField(const spinor::SpinorField&)> base;
  if (pullback)
    base = [&](const spinor::SpinorField& f) { return spinor::dirac_pullback(gm, hm, f); };
  else
    base = [&](const spinor::SpinorField& f) { return spinor::dirac(geom, f); };
  std::function<spinor::SpinorField(const spinor::SpinorField&)> op = base;
  if (square) op = [&](const spinor::SpinorField& f) { return base(base(f)); };

  CMat sigma =
      edm::principal_symbol(op, g, geom.rep, omega, point, square ? 2 : 1);
  ctx.results["symbol"] = complex_matrix_json(sigma);

  if (!square && !pullback) {
    // closed form: sigma(D)(omega) = sum_i eps_i omega(e_i) gamma_i
    const Mat& frame = geom.frame.v[point];
    CMat C = CMat::Zero(geom.rep.N, geom.rep.N);
    for (int i = 0; i < m; ++i) {
      double wi = 0.0;
      for (int a = 0; a < m; ++a) wi += frame(a, i) * omega[a];
      C += geom.rep.eps[static_cast<size_t>(i)] * wi * geom.rep.gamma[static_cast<size_t>(i)];
    }
    double gap = (sigma - C).cwiseAbs().maxCoeff();
    ctx.check("clifford_symbol_gap", gap, ctx.tol(1e-8, 1e-8));
  }
  if (square) {
    complexd emp = sigma.trace() / static_cast<double>(geom.rep.N);
    double off = (sigma - emp * CMat::Identity(geom.rep.N, geom.rep.N)).cwiseAbs().maxCoeff();
    Mat ginv = gm.val.v[point].inverse();
    double g_form = -(omega.transpose() * ginv * omega)(0);
    double h_form = g_form;
    if (pullback) {
      Mat hinv = hm.val.v[point].inverse();
      h_form = -(omega.transpose() * hinv * omega)(0);
    }
    double gap_g = std::abs(emp - g_form) / std::max(1.0, std::abs(g_form));
    double gap_h = std::abs(emp - h_form) / std::max(1.0, std::abs(h_form));
    double tolv = ctx.tol(1e-6, 1e-6);
    std::string matched = "none";
    if (gap_h <= tolv)
      matched = "h-quadratic";
    else if (gap_g <= tolv)
      matched = "g-quadratic";
    ctx.results["empirical_coefficient"] = {emp.real(), emp.imag()};
    ctx.results["off_scalar_part"] = off;
    ctx.results["g_quadratic_form"] = g_form;
    ctx.results["h_quadratic_form"] = h_form;
    ctx.results["g_form_gap"] = gap_g;
    ctx.results["h_form_gap"] = gap_h;
    ctx.results["matched_form"] = matched;
    ctx.check("squared_symbol_match", std::min(gap_g, gap_h), tolv);
  }
}

void handle_evolve(Context& ctx) {
  ctx.allow_options({"steps", "cfl", "stride", "travel-check"});
  need(ctx.cfg.r == 1 && ctx.cfg.s == 1, "evolve needs signature (1, 1)");
  need(ctx.cfg.grid_sizes.size() == 1, "evolve uses a 1-dimensional spatial grid");
  grid::TorusGrid g = config::build_grid(ctx.cfg);
  grid::MatrixField bg = config::build_background(ctx.cfg.metric, g);
  clifford::GammaRep rep = clifford::build_rep(1, 1);
  spinor::SpinorField psi0 = single_spinor(ctx, g, rep, "evolve");
  need(ctx.cfg.potential["type"] == "zero", "evolve does not take a potential");
  double lambda = ctx.cfg.params.lambda.empty() ? 0.0 : ctx.cfg.params.lambda[0];
  if (!ctx.cfg.params.q.empty())
    need(ctx.cfg.params.q[0] == 0.0, "evolve has no charge coupling; params.q must be zero");

  long steps = ctx.opt_int("steps", 0, /*required=*/true);
  need(steps >= 1 && steps <= 10000000, "'steps' must lie in [1, 1e7]");
  double cfl = ctx.opt_num("cfl", 0.5);
  long stride = ctx.opt_int("stride", std::max<long>(1, steps / 16));
  need(stride >= 1, "'stride' must be positive");

  cauchy::EvolutionConfig ec;
  ec.background = bg;
  ec.cfl = cfl;
  ec.steps = steps;
  ec.sample_stride = stride;
  ec.lambda = lambda;
  cauchy::EvolutionResult er = cauchy::evolve_dirac(ec, psi0);

  double q0 = er.charge.front();
  double drift = 0.0;
  for (double q : er.charge) drift = std::max(drift, std::abs(q - q0));
  double rel_drift = drift / std::max(std::abs(q0), 1e-30);
  double final_sup = er.sup.back();
  ensure_finite(final_sup, "final state");
  ctx.results["dt"] = er.dt;
  ctx.results["steps"] = steps;
  ctx.results["charge_initial"] = q0;
  ctx.results["charge_final"] = er.charge.back();
  ctx.results["charge_drift"] = drift;
  ctx.results["charge_drift_rel"] = rel_drift;
  ctx.results["final_sup"] = final_sup;
  if (lambda == 0.0) {
    bool flat = ctx.cfg.metric["type"] == "flat";
    ctx.check("charge_drift_rel", rel_drift, flat ? ctx.tol(1e-6, 1e-7) : ctx.tol(1e-5, 1e-5));
  } else {
    ctx.results["charge_note"] =
        "charge carries the source 2 lambda <psi,psi> for lambda != 0; drift reported only";
  }

  if (ctx.opt_bool("travel-check", false)) {
    need(ctx.cfg.spinors[0]["type"] == "plane-wave",
         "travel-check needs plane-wave initial data");
    need(ctx.cfg.metric["type"] == "flat" && lambda == 0.0,
         "travel-check needs a flat background and lambda = 0");
    double k = ctx.cfg.spinors[0]["momentum"][0].get<double>();
    CVec v0 = psi0.data.v[0];  // x = 0 sample carries the bare amplitude
    CMat alpha = rep.gamma[1] * rep.gamma[0];
    CVec av = alpha * v0;
    complexd sig = (v0.adjoint() * av)(0) / v0.squaredNorm();
    need((av - sig * v0).norm() <= 1e-12 * v0.norm() && std::abs(sig.imag()) <= 1e-12 &&
             std::abs(std::abs(sig.real()) - 1.0) <= 1e-12,
         "travel-check needs an eigenvector of gamma_t gamma_x as amplitude");
    double s = sig.real();
    double err = 0.0;
    for (size_t j = 0; j < er.states.size(); ++j) {
      double t = er.sample_times[j];
      spinor::SpinorField exact = spinor::make_spinor(g, rep, psi0.twist);
      for (long p = 0; p < g.points(); ++p) {
        double x = g.coords(p)[0];
        exact.data.v[p] = std::exp(complexd(0.0, k * (x - s * t))) * v0;
      }
      err = std::max(err, spinor::sup_distance(er.states[j], exact));
    }
    ctx.check("travel_error", err, ctx.tol(1e-6, 1e-6));
  }

  std::string csv = "t,charge,max_norm\n";
  for (size_t i = 0; i < er.times.size(); ++i)
    csv += serialize::format_double(er.times[i]) + "," +
           serialize::format_double(er.charge[i]) + "," +
           serialize::format_double(er.sup[i]) + "\n";
  ctx.emit("evolution.csv", std::move(csv));
  ctx.emit("final_state.json",
           serialize::spinor_field_to_json(er.states.back()).dump(2) + "\n");
}

using Handler = void (*)(Context&);
const std::map<std::string, Handler>& command_table() {
  static const std::map<std::string, Handler> table = {
      {"clifford-check", handle_clifford_check},
      {"dirac-spectrum", handle_dirac_spectrum},
      {"dirac-apply", handle_dirac_apply},
      {"dirac-pullback", handle_dirac_pullback},
      {"beta-transport", handle_beta_transport},
      {"edm-residual", handle_edm_residual},
      {"lagrangian", handle_lagrangian},
      {"el-check", handle_el_check},
      {"constraints", handle_constraints},
      {"wave-gauge", handle_wave_gauge},
      {"symbol", handle_symbol},
      {"evolve", handle_evolve},
  };
  return table;
}

}  // namespace

std::string usage() {
  return
      "usage: spinlab <command> [--config FILE|-] [--out DIR]\n"
      "               [--tolerance-profile default|strict]\n"
      "\n"
      "commands:\n"
      "  clifford-check   gamma-matrix invariants for signature (r, s)\n"
      "                   (--r R --s S shortcut builds the config)\n"
      "  dirac-spectrum   low Dirac eigenvalues on a Riemannian torus -> spectrum.csv\n"
      "  dirac-apply      apply the (charged) Dirac operator to a spinor field\n"
      "  dirac-pullback   apply the metric-pullback Dirac operator\n"
      "  beta-transport   transport a spinor between metrics; invariance checks\n"
      "  edm-residual     Einstein-Dirac-Maxwell residual triple\n"
      "  lagrangian       action integral of a configuration\n"
      "  el-check         first-variation consistency along a seeded direction\n"
      "  constraints      hamiltonian/momentum residuals of slice initial data\n"
      "  wave-gauge       wave-gauge vector of a metric against a reference\n"
      "  symbol           empirical principal symbol of a Dirac-type operator\n"
      "  evolve           1+1 fixed-background Dirac evolution -> evolution.csv\n"
      "\n"
      "config: JSON file or '-' for stdin; report: JSON on stdout; bulk fields\n"
      "written under --out (default '.').  SPINLAB_THREADS caps parallelism.\n"
      "exit codes: 0 tolerances met, 2 schema violation, 3 numerical failure,\n"
      "4 unknown command.\n";
}

RunResult run_command(const std::string& command, const nlohmann::ordered_json& config_json,
                      const std::string& tolerance_profile) {
  RunResult res;
  json& rep = res.report;
  rep["command"] = command;
  rep["version"] = kVersion;
  auto it = command_table().find(command);
  if (it == command_table().end()) {
    rep["error"] = {{"type", "unknown-command"},
                    {"message", "unknown command '" + command + "'"}};
    rep["usage"] = usage();
    res.exit_code = 4;
    return res;
  }
  if (tolerance_profile != "default" && tolerance_profile != "strict") {
    rep["error"] = {{"type", "schema"},
                    {"message", "tolerance profile must be 'default' or 'strict'"}};
    res.exit_code = 2;
    return res;
  }
  rep["tolerance_profile"] = tolerance_profile;
  rep["threads"] = configure_threads();
  Context ctx;
  ctx.strict = (tolerance_profile == "strict");
  ctx.artifacts = &res.artifacts;
  try {
    ctx.cfg = config::parse_config(config_json);
    rep["config_hash"] = config::config_hash(ctx.cfg);
    it->second(ctx);
    rep["results"] = ctx.results;
    rep["checks"] = ctx.checks;
    rep["pass"] = ctx.all_pass;
    res.exit_code = ctx.all_pass ? 0 : 3;
  } catch (const ShapeError& e) {
    rep["error"] = {{"type", "schema"}, {"message", e.what()}};
    res.exit_code = 2;
    res.artifacts.clear();
  } catch (const NumericalError& e) {
    rep["error"] = {{"type", "numerical"}, {"message", e.what()}};
    res.exit_code = 3;
    res.artifacts.clear();
  }
  return res;
}

}  // namespace spinlab::run

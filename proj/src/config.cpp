#include "spinlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "spinlab/expr.hpp"
#include "spinlab/serialize.hpp"

namespace spinlab::config {
namespace {

void expect(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError("config: " + msg);
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& item : j.items())
    expect(allowed.count(item.key()) == 1, "unknown key '" + item.key() + "' in " + where);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ShapeError("config: cannot open file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw ShapeError("config: invalid JSON in '" + path + "': " + e.what());
  }
}

std::string spec_type(const json& spec, const std::string& where) {
  expect(spec.is_object() && spec.contains("type") && spec["type"].is_string(),
         where + " spec must be an object with a string 'type'");
  return spec["type"].get<std::string>();
}

std::vector<double> number_array(const json& j, const std::string& where) {
  expect(j.is_array(), where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) {
    expect(e.is_number(), where + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

json normalize_metric_spec(const json& spec) {
  std::string type = spec_type(spec, "metric");
  json out;
  out["type"] = type;
  if (type == "flat") {
    check_keys(spec, {"type"}, "metric spec");
  } else if (type == "constant") {
    check_keys(spec, {"type", "matrix"}, "metric spec");
    expect(spec.contains("matrix") && spec["matrix"].is_array(),
           "constant metric needs a 'matrix' array");
    size_t m = spec["matrix"].size();
    expect(m >= 1, "constant metric matrix is empty");
    for (const auto& row : spec["matrix"]) {
      number_array(row, "metric matrix row");
      expect(row.size() == m, "constant metric matrix must be square");
    }
    out["matrix"] = spec["matrix"];
  } else if (type == "conformal") {
    check_keys(spec, {"type", "u"}, "metric spec");
    expect(spec.contains("u") && spec["u"].is_string(),
           "conformal metric needs a string expression 'u'");
    out["u"] = spec["u"];
  } else if (type == "grid-file") {
    check_keys(spec, {"type", "path"}, "metric spec");
    expect(spec.contains("path") && spec["path"].is_string(),
           "grid-file spec needs a string 'path'");
    out["path"] = spec["path"];
  } else {
    expect(false, "unknown metric spec type '" + type + "'");
  }
  return out;
}

json normalize_spinor_spec(const json& spec) {
  std::string type = spec_type(spec, "spinor");
  json out;
  out["type"] = type;
  if (type == "zero") {
    check_keys(spec, {"type"}, "spinor spec");
  } else if (type == "plane-wave") {
    check_keys(spec, {"type", "momentum", "amplitude"}, "spinor spec");
    expect(spec.contains("momentum"), "plane-wave spec needs 'momentum'");
    number_array(spec["momentum"], "momentum");
    out["momentum"] = spec["momentum"];
    if (spec.contains("amplitude")) {
      expect(spec["amplitude"].is_array(), "amplitude must be an array of [re, im] pairs");
      for (const auto& z : spec["amplitude"]) {
        expect(z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number(),
               "amplitude must be an array of [re, im] pairs");
      }
      out["amplitude"] = spec["amplitude"];
    }
  } else if (type == "components") {
    check_keys(spec, {"type", "components"}, "spinor spec");
    expect(spec.contains("components") && spec["components"].is_array(),
           "components spec needs a 'components' array");
    for (const auto& z : spec["components"]) {
      expect(z.is_array() && z.size() == 2 && z[0].is_string() && z[1].is_string(),
             "spinor components are [re-expr, im-expr] string pairs");
    }
    out["components"] = spec["components"];
  } else if (type == "grid-file") {
    check_keys(spec, {"type", "path"}, "spinor spec");
    expect(spec.contains("path") && spec["path"].is_string(),
           "grid-file spec needs a string 'path'");
    out["path"] = spec["path"];
  } else {
    expect(false, "unknown spinor spec type '" + type + "'");
  }
  return out;
}

json normalize_potential_spec(const json& spec) {
  std::string type = spec_type(spec, "potential");
  json out;
  out["type"] = type;
  if (type == "zero") {
    check_keys(spec, {"type"}, "potential spec");
  } else if (type == "constant") {
    check_keys(spec, {"type", "values"}, "potential spec");
    expect(spec.contains("values"), "constant potential needs 'values'");
    number_array(spec["values"], "potential values");
    out["values"] = spec["values"];
  } else if (type == "components") {
    check_keys(spec, {"type", "components"}, "potential spec");
    expect(spec.contains("components") && spec["components"].is_array(),
           "components spec needs a 'components' array");
    for (const auto& e : spec["components"])
      expect(e.is_string(), "potential components are expression strings");
    out["components"] = spec["components"];
  } else if (type == "grid-file") {
    check_keys(spec, {"type", "path"}, "potential spec");
    expect(spec.contains("path") && spec["path"].is_string(),
           "grid-file spec needs a string 'path'");
    out["path"] = spec["path"];
  } else {
    expect(false, "unknown potential spec type '" + type + "'");
  }
  return out;
}

RunConfig parse_config(const json& raw) {
  expect(raw.is_object(), "top level must be a JSON object");
  check_keys(raw,
             {"dimension", "signature", "grid", "twist", "metric", "spinor", "potential",
              "params", "options"},
             "config");
  RunConfig c;

  expect(raw.contains("signature") && raw["signature"].is_array() &&
             raw["signature"].size() == 2 && raw["signature"][0].is_number_integer() &&
             raw["signature"][1].is_number_integer(),
         "'signature' must be [r, s] with integer entries");
  c.r = raw["signature"][0].get<int>();
  c.s = raw["signature"][1].get<int>();
  expect(c.r >= 0 && c.s >= 0 && c.r + c.s >= 1, "signature entries must be nonnegative");
  expect(c.r + c.s <= 10, "signature too large");

  if (raw.contains("dimension")) {
    expect(raw["dimension"].is_number_integer(), "'dimension' must be an integer");
    c.dimension = raw["dimension"].get<int>();
    expect(c.dimension == c.r + c.s, "dimension must equal r + s");
  } else {
    c.dimension = c.r + c.s;
  }

  if (raw.contains("grid")) {
    expect(raw["grid"].is_array(), "'grid' must be an array of sizes");
    for (const auto& e : raw["grid"]) {
      expect(e.is_number_integer() && e.get<int>() >= 1, "grid sizes must be positive integers");
      c.grid_sizes.push_back(e.get<int>());
    }
  }

  if (raw.contains("twist")) {
    c.twist = number_array(raw["twist"], "'twist'");
    expect(c.twist.size() == c.grid_sizes.size(), "twist length must match grid rank");
    for (double d : c.twist) expect(d == 0.0 || d == 0.5, "twist entries must be 0 or 1/2");
  } else {
    c.twist.assign(c.grid_sizes.size(), 0.0);
  }

  c.metric = raw.contains("metric") ? normalize_metric_spec(raw["metric"])
                                    : json{{"type", "flat"}};

  if (raw.contains("spinor")) {
    if (raw["spinor"].is_array()) {
      for (const auto& s : raw["spinor"]) c.spinors.push_back(normalize_spinor_spec(s));
    } else {
      c.spinors.push_back(normalize_spinor_spec(raw["spinor"]));
    }
  }

  c.potential = raw.contains("potential") ? normalize_potential_spec(raw["potential"])
                                          : json{{"type", "zero"}};

  size_t nfields = c.spinors.size();
  if (raw.contains("params")) {
    expect(raw["params"].is_object(), "'params' must be an object");
    check_keys(raw["params"], {"lambda", "q"}, "params");
    if (raw["params"].contains("lambda"))
      c.params.lambda = number_array(raw["params"]["lambda"], "params.lambda");
    if (raw["params"].contains("q")) c.params.q = number_array(raw["params"]["q"], "params.q");
    if (c.params.lambda.empty() && !c.params.q.empty())
      c.params.lambda.assign(c.params.q.size(), 0.0);
    if (c.params.q.empty() && !c.params.lambda.empty())
      c.params.q.assign(c.params.lambda.size(), 0.0);
    expect(c.params.lambda.size() == c.params.q.size(),
           "params.lambda and params.q must have equal lengths");
    expect(c.params.lambda.size() == nfields,
           "params must carry one (lambda, q) pair per spinor");
  } else {
    c.params.lambda.assign(nfields, 0.0);
    c.params.q.assign(nfields, 0.0);
  }

  // Momenta live on the grid axes and must be compatible with the twist:
  // the sampled phase e^{i k x} is a valid section of the twisted bundle
  // exactly when every k_d - delta_d is an integer.
  for (const json& spec : c.spinors) {
    if (spec["type"] != "plane-wave") continue;
    std::vector<double> k = number_array(spec["momentum"], "momentum");
    expect(k.size() == c.grid_sizes.size(), "momentum length must match grid rank");
    for (size_t d = 0; d < k.size(); ++d) {
      double frac = k[d] - c.twist[d];
      expect(std::abs(frac - std::round(frac)) <= 1e-9,
             "plane-wave momentum inconsistent with twist");
    }
  }

  if (raw.contains("options")) {
    expect(raw["options"].is_object(), "'options' must be an object");
    c.options = raw["options"];
  } else {
    c.options = json::object();
  }
  return c;
}

json canonical_config(const RunConfig& c) {
  json out;
  out["dimension"] = c.dimension;
  out["signature"] = {c.r, c.s};
  out["grid"] = c.grid_sizes;
  out["twist"] = c.twist;
  out["metric"] = c.metric;
  out["spinor"] = c.spinors;
  out["potential"] = c.potential;
  out["params"] = {{"lambda", c.params.lambda}, {"q", c.params.q}};
  out["options"] = c.options;
  return out;
}

std::string config_hash(const RunConfig& c) {
  uint64_t h = serialize::fnv1a64(canonical_config(c).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

grid::TorusGrid build_grid(const RunConfig& c) {
  expect(!c.grid_sizes.empty(), "this command needs a 'grid'");
  return grid::TorusGrid(c.grid_sizes);
}

grid::MetricField build_metric(const json& spec, const grid::TorusGrid& g, int r, int s) {
  expect(g.dim() == r + s, "metric rank must match grid dimension");
  std::string type = spec["type"].get<std::string>();
  grid::MetricField out;
  if (type == "flat") {
    return grid::flat_metric(g, r, s);
  } else if (type == "constant") {
    int m = g.dim();
    expect(static_cast<int>(spec["matrix"].size()) == m,
           "constant metric matrix rank must match grid dimension");
    Mat M(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) M(i, j) = spec["matrix"][i][j].get<double>();
    expect((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
           "constant metric matrix must be symmetric");
    out = grid::make_metric(grid::MatrixField(g, M));
  } else if (type == "conformal") {
    expr::Expression u = expr::Expression::parse(spec["u"].get<std::string>(), g.dim());
    Mat eta = grid::flat_form(r, s);
    grid::MatrixField vals(g, eta);
    for (long p = 0; p < g.points(); ++p)
      vals.v[p] = std::exp(2.0 * u.eval(g.coords(p))) * eta;
    out = grid::make_metric(vals);
  } else {
    json doc = load_json_file(spec["path"].get<std::string>());
    grid::MatrixField vals = serialize::matrix_field_from_json(doc);
    expect(vals.grid.sizes() == g.sizes(), "grid-file metric grid does not match config grid");
    out = grid::make_metric(vals);
  }
  expect(out.sig.pos == r && out.sig.neg == s,
         "metric signature inconsistent with config signature");
  return out;
}

spinor::SpinorField build_spinor(const json& spec, const grid::TorusGrid& g,
                                 const clifford::GammaRep& rep,
                                 const spinor::SpinStructureTwist& twist) {
  std::string type = spec["type"].get<std::string>();
  spinor::SpinorField psi = spinor::make_spinor(g, rep, twist);
  if (type == "zero") {
    return psi;
  } else if (type == "plane-wave") {
    std::vector<double> k = number_array(spec["momentum"], "momentum");
    expect(static_cast<int>(k.size()) == g.dim(), "momentum length must match grid rank");
    CVec amp = CVec::Zero(rep.N);
    if (spec.contains("amplitude")) {
      expect(static_cast<int>(spec["amplitude"].size()) == rep.N,
             "amplitude must have one [re, im] pair per spinor component");
      for (int c = 0; c < rep.N; ++c)
        amp[c] = complexd(spec["amplitude"][c][0].get<double>(),
                          spec["amplitude"][c][1].get<double>());
    } else {
      amp[0] = 1.0;
    }
    for (long p = 0; p < g.points(); ++p) {
      Vec x = g.coords(p);
      double phase = 0.0;
      for (int d = 0; d < g.dim(); ++d) phase += k[static_cast<size_t>(d)] * x[d];
      psi.data.v[p] = std::exp(complexd(0.0, phase)) * amp;
    }
    return psi;
  } else if (type == "components") {
    expect(static_cast<int>(spec["components"].size()) == rep.N,
           "spinor components must list one [re, im] expression pair per component");
    std::vector<expr::Expression> re, im;
    for (int c = 0; c < rep.N; ++c) {
      re.push_back(expr::Expression::parse(spec["components"][c][0].get<std::string>(), g.dim()));
      im.push_back(expr::Expression::parse(spec["components"][c][1].get<std::string>(), g.dim()));
    }
    for (long p = 0; p < g.points(); ++p) {
      Vec x = g.coords(p);
      for (int c = 0; c < rep.N; ++c)
        psi.data.v[p][c] = complexd(re[static_cast<size_t>(c)].eval(x),
                                    im[static_cast<size_t>(c)].eval(x));
    }
    return psi;
  } else {
    json doc = load_json_file(spec["path"].get<std::string>());
    spinor::SpinorField loaded = serialize::spinor_field_from_json(doc);
    expect(loaded.grid().sizes() == g.sizes(), "grid-file spinor grid does not match config grid");
    expect(loaded.rep.r == rep.r && loaded.rep.s == rep.s,
           "grid-file spinor signature does not match the expected representation");
    expect(loaded.twist.delta == twist.delta,
           "grid-file spinor twist does not match config twist");
    return loaded;
  }
}

grid::VectorField build_potential(const json& spec, const grid::TorusGrid& g, int ncomp) {
  std::string type = spec["type"].get<std::string>();
  grid::VectorField A(g, Vec::Zero(ncomp));
  if (type == "zero") {
    return A;
  } else if (type == "constant") {
    std::vector<double> vals = number_array(spec["values"], "potential values");
    expect(static_cast<int>(vals.size()) == ncomp,
           "potential values must have one entry per component");
    for (long p = 0; p < g.points(); ++p)
      for (int a = 0; a < ncomp; ++a) A.v[p][a] = vals[static_cast<size_t>(a)];
    return A;
  } else if (type == "components") {
    expect(static_cast<int>(spec["components"].size()) == ncomp,
           "potential components must have one expression per component");
    std::vector<expr::Expression> comps;
    for (int a = 0; a < ncomp; ++a)
      comps.push_back(expr::Expression::parse(spec["components"][a].get<std::string>(), g.dim()));
    for (long p = 0; p < g.points(); ++p) {
      Vec x = g.coords(p);
      for (int a = 0; a < ncomp; ++a) A.v[p][a] = comps[static_cast<size_t>(a)].eval(x);
    }
    return A;
  } else {
    json doc = load_json_file(spec["path"].get<std::string>());
    grid::VectorField loaded = serialize::vector_field_from_json(doc);
    expect(loaded.grid.sizes() == g.sizes(),
           "grid-file potential grid does not match config grid");
    expect(loaded.points() == 0 || static_cast<int>(loaded.v[0].size()) == ncomp,
           "grid-file potential has the wrong component count");
    return loaded;
  }
}

grid::MatrixField build_background(const json& spec, const grid::TorusGrid& g) {
  expect(g.dim() == 1, "evolution background lives on a 1-dimensional spatial grid");
  std::string type = spec["type"].get<std::string>();
  Mat eta = (Mat(2, 2) << 1.0, 0.0, 0.0, -1.0).finished();
  grid::MatrixField bg(g, eta);
  if (type == "flat") {
    return bg;
  } else if (type == "constant") {
    expect(spec["matrix"].size() == 2, "evolution background blocks are 2x2");
    Mat M(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) M(i, j) = spec["matrix"][i][j].get<double>();
    expect(M(0, 1) == 0.0 && M(1, 0) == 0.0, "evolution background must be diagonal");
    expect(M(0, 0) > 0.0 && M(1, 1) < 0.0, "evolution background must be diag(p, -q), p, q > 0");
    for (long p = 0; p < g.points(); ++p) bg.v[p] = M;
    return bg;
  } else if (type == "conformal") {
    expr::Expression u = expr::Expression::parse(spec["u"].get<std::string>(), 1);
    for (long p = 0; p < g.points(); ++p)
      bg.v[p] = std::exp(2.0 * u.eval(g.coords(p))) * eta;
    return bg;
  } else {
    json doc = load_json_file(spec["path"].get<std::string>());
    grid::MatrixField vals = serialize::matrix_field_from_json(doc);
    expect(vals.grid.sizes() == g.sizes(),
           "grid-file background grid does not match config grid");
    expect(vals.points() > 0 && vals.v[0].rows() == 2 && vals.v[0].cols() == 2,
           "evolution background blocks are 2x2");
    return vals;
  }
}

}  // namespace spinlab::config

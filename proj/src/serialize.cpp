#include "spinlab/serialize.hpp"

#include <cstdio>

#include "spinlab/clifford.hpp"

namespace spinlab::serialize {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError("field document: " + what);
}

grid::TorusGrid grid_from_json(const json& j) {
  require(j.is_object() && j.contains("grid") && j["grid"].is_array(),
          "missing grid sizes");
  std::vector<int> sizes;
  for (const auto& e : j["grid"]) {
    require(e.is_number_integer(), "grid sizes must be integers");
    sizes.push_back(e.get<int>());
  }
  return grid::TorusGrid(sizes);
}

void require_kind(const json& j, const char* kind) {
  require(j.is_object() && j.contains("kind") && j["kind"] == kind,
          std::string("expected kind '") + kind + "'");
}

double number_at(const json& j, const char* what) {
  require(j.is_number(), std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace

json scalar_field_to_json(const grid::ScalarField& f) {
  json j;
  j["kind"] = "scalar-field";
  j["grid"] = f.grid.sizes();
  json vals = json::array();
  for (long p = 0; p < f.points(); ++p) vals.push_back(f.v[p]);
  j["values"] = std::move(vals);
  return j;
}

json vector_field_to_json(const grid::VectorField& f) {
  json j;
  j["kind"] = "vector-field";
  j["grid"] = f.grid.sizes();
  j["dim"] = f.points() > 0 ? static_cast<int>(f.v[0].size()) : 0;
  json vals = json::array();
  for (long p = 0; p < f.points(); ++p) {
    json row = json::array();
    for (long a = 0; a < f.v[p].size(); ++a) row.push_back(f.v[p][a]);
    vals.push_back(std::move(row));
  }
  j["values"] = std::move(vals);
  return j;
}

json matrix_field_to_json(const grid::MatrixField& f) {
  json j;
  j["kind"] = "matrix-field";
  j["grid"] = f.grid.sizes();
  long rows = f.points() > 0 ? f.v[0].rows() : 0;
  long cols = f.points() > 0 ? f.v[0].cols() : 0;
  j["shape"] = {rows, cols};
  json vals = json::array();
  for (long p = 0; p < f.points(); ++p) {
    json flat = json::array();
    for (long i = 0; i < rows; ++i)
      for (long k = 0; k < cols; ++k) flat.push_back(f.v[p](i, k));
    vals.push_back(std::move(flat));
  }
  j["values"] = std::move(vals);
  return j;
}

json spinor_field_to_json(const spinor::SpinorField& f) {
  json j;
  j["kind"] = "spinor-field";
  j["grid"] = f.grid().sizes();
  j["signature"] = {f.rep.r, f.rep.s};
  j["twist"] = f.twist.delta;
  json vals = json::array();
  for (long p = 0; p < f.data.points(); ++p) {
    json comps = json::array();
    for (long c = 0; c < f.data.v[p].size(); ++c)
      comps.push_back({f.data.v[p][c].real(), f.data.v[p][c].imag()});
    vals.push_back(std::move(comps));
  }
  j["values"] = std::move(vals);
  return j;
}

grid::ScalarField scalar_field_from_json(const json& j) {
  require_kind(j, "scalar-field");
  grid::TorusGrid g = grid_from_json(j);
  require(j.contains("values") && j["values"].is_array() &&
              static_cast<long>(j["values"].size()) == g.points(),
          "values must list one entry per grid point");
  grid::ScalarField f(g, 0.0);
  for (long p = 0; p < g.points(); ++p)
    f.v[p] = number_at(j["values"][static_cast<size_t>(p)], "scalar value");
  return f;
}

grid::VectorField vector_field_from_json(const json& j) {
  require_kind(j, "vector-field");
  grid::TorusGrid g = grid_from_json(j);
  require(j.contains("dim") && j["dim"].is_number_integer(), "missing dim");
  int m = j["dim"].get<int>();
  require(m >= 1, "dim must be positive");
  require(j.contains("values") && j["values"].is_array() &&
              static_cast<long>(j["values"].size()) == g.points(),
          "values must list one entry per grid point");
  grid::VectorField f(g, Vec::Zero(m));
  for (long p = 0; p < g.points(); ++p) {
    const json& row = j["values"][static_cast<size_t>(p)];
    require(row.is_array() && static_cast<int>(row.size()) == m,
            "vector entry has wrong length");
    for (int a = 0; a < m; ++a)
      f.v[p][a] = number_at(row[static_cast<size_t>(a)], "vector component");
  }
  return f;
}

grid::MatrixField matrix_field_from_json(const json& j) {
  require_kind(j, "matrix-field");
  grid::TorusGrid g = grid_from_json(j);
  require(j.contains("shape") && j["shape"].is_array() && j["shape"].size() == 2,
          "missing shape");
  long rows = j["shape"][0].get<long>();
  long cols = j["shape"][1].get<long>();
  require(rows >= 1 && cols >= 1, "shape must be positive");
  require(j.contains("values") && j["values"].is_array() &&
              static_cast<long>(j["values"].size()) == g.points(),
          "values must list one entry per grid point");
  grid::MatrixField f(g, Mat::Zero(rows, cols));
  for (long p = 0; p < g.points(); ++p) {
    const json& flat = j["values"][static_cast<size_t>(p)];
    require(flat.is_array() && static_cast<long>(flat.size()) == rows * cols,
            "matrix entry has wrong length");
    for (long i = 0; i < rows; ++i)
      for (long k = 0; k < cols; ++k)
        f.v[p](i, k) =
            number_at(flat[static_cast<size_t>(i * cols + k)], "matrix component");
  }
  return f;
}

spinor::SpinorField spinor_field_from_json(const json& j) {
  require_kind(j, "spinor-field");
  grid::TorusGrid g = grid_from_json(j);
  require(j.contains("signature") && j["signature"].is_array() &&
              j["signature"].size() == 2,
          "missing signature");
  int r = j["signature"][0].get<int>();
  int s = j["signature"][1].get<int>();
  clifford::GammaRep rep = clifford::build_rep(r, s);
  require(j.contains("twist") && j["twist"].is_array(), "missing twist");
  std::vector<double> delta;
  for (const auto& e : j["twist"]) delta.push_back(number_at(e, "twist entry"));
  spinor::SpinorField f =
      spinor::make_spinor(g, rep, spinor::make_twist(std::move(delta)));
  require(j.contains("values") && j["values"].is_array() &&
              static_cast<long>(j["values"].size()) == g.points(),
          "values must list one entry per grid point");
  for (long p = 0; p < g.points(); ++p) {
    const json& comps = j["values"][static_cast<size_t>(p)];
    require(comps.is_array() && static_cast<int>(comps.size()) == rep.N,
            "spinor entry has wrong component count");
    for (int c = 0; c < rep.N; ++c) {
      const json& z = comps[static_cast<size_t>(c)];
      require(z.is_array() && z.size() == 2, "complex values are [re, im] pairs");
      f.data.v[p][c] = complexd(number_at(z[0], "real part"), number_at(z[1], "imag part"));
    }
  }
  return f;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace spinlab::serialize

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "spinlab/edm.hpp"
#include "spinlab/grid_calculus.hpp"
#include "spinlab/spinor_fields.hpp"

namespace spinlab::config {

using json = nlohmann::ordered_json;

// Parsed and validated run configuration.  Field specs stay declarative (the
// raw JSON subtree, normalized) and are materialized on demand by command
// handlers; schema violations throw ShapeError.
//
// Schema (top level):
//   dimension   optional int, defaults to r+s, must equal r+s when present
//   signature   required [r, s]
//   grid        optional [n1..nk]; most commands require k == dimension,
//               slice and evolution commands use k < dimension
//   twist       optional, one entry in {0, 1/2} per grid axis, default 0
//   metric      {"type": "flat" | "constant" | "conformal" | "grid-file"}
//   spinor      one spec or a list of specs:
//               {"type": "zero" | "plane-wave" | "components" | "grid-file"}
//   potential   {"type": "zero" | "constant" | "components" | "grid-file"}
//   params      {"lambda": [...], "q": [...]}, one entry per spinor
//   options     command-specific object
//
// Plane-wave momenta must be consistent with the twist: momentum - twist
// integral per axis.
struct RunConfig {
  int dimension = 0;
  int r = 0;
  int s = 0;
  std::vector<int> grid_sizes;
  std::vector<double> twist;
  json metric;
  std::vector<json> spinors;
  json potential;
  edm::EDMParams params;
  json options;
};

RunConfig parse_config(const json& raw);

// Structural validation + fixed key order for one spec subtree; used by
// parse_config and for specs embedded in command options (second metrics,
// constraint data).  Throws ShapeError on malformed specs.
json normalize_metric_spec(const json& spec);
json normalize_spinor_spec(const json& spec);
json normalize_potential_spec(const json& spec);

// Fully materialized serialized form (defaults filled in, keys in a fixed
// order).  parse_config(canonical_config(c)) reproduces c: round-trip
// identity.
json canonical_config(const RunConfig& c);

// FNV-1a over the canonical dump, as 16 hex digits; independent of input
// whitespace and key order.
std::string config_hash(const RunConfig& c);

grid::TorusGrid build_grid(const RunConfig& c);
grid::MetricField build_metric(const json& spec, const grid::TorusGrid& g, int r, int s);
spinor::SpinorField build_spinor(const json& spec, const grid::TorusGrid& g,
                                 const clifford::GammaRep& rep,
                                 const spinor::SpinStructureTwist& twist);
// A one-form with ncomp coordinate components on g.
grid::VectorField build_potential(const json& spec, const grid::TorusGrid& g, int ncomp);
// 1+1 evolution background over a 1-dimensional spatial grid: 2x2 blocks
// diag(p, -q) with p, q > 0.  Accepts the metric spec forms, restricted to
// diagonal data.
grid::MatrixField build_background(const json& spec, const grid::TorusGrid& g);

}  // namespace spinlab::config

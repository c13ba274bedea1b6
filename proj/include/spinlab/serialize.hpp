#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "spinlab/grid_calculus.hpp"
#include "spinlab/spinor_fields.hpp"

namespace spinlab::serialize {

using json = nlohmann::ordered_json;

// Grid fields as JSON documents: {"kind": ..., "grid": [sizes], ...payload}.
// Per-point payloads are listed in the grid's own (row-major) point order;
// matrices are flattened row-major; complex numbers are [re, im] pairs.
// Doubles are emitted in the shortest form that reparses to the same bits,
// so dump -> parse round-trips exactly.
json scalar_field_to_json(const grid::ScalarField& f);
json vector_field_to_json(const grid::VectorField& f);
json matrix_field_to_json(const grid::MatrixField& f);
json spinor_field_to_json(const spinor::SpinorField& f);

// Loaders validate structure and throw ShapeError on malformed documents.
grid::ScalarField scalar_field_from_json(const json& j);
grid::VectorField vector_field_from_json(const json& j);
grid::MatrixField matrix_field_from_json(const json& j);
// Rebuilds the representation from the stored signature.
spinor::SpinorField spinor_field_from_json(const json& j);

// 17 significant digits (round-trip exact), for CSV artifacts.
std::string format_double(double x);

uint64_t fnv1a64(const std::string& bytes);

}  // namespace spinlab::serialize

#pragma once

#include <vector>

#include "spinlab/pointwise_metric.hpp"
#include "spinlab/types.hpp"

namespace spinlab::grid {

// Uniform periodic grid on the flat-coordinate m-torus [0, 2pi)^m.
// Row-major storage, first index slowest.  Sizes must be even and >= 8
// (derivative stencil plus half-integer twists need both).
class TorusGrid {
 public:
  TorusGrid() = default;
  explicit TorusGrid(std::vector<int> sizes);

  int dim() const { return static_cast<int>(sizes_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<double>& spacing() const { return h_; }
  long points() const { return npts_; }

  long flat(const std::vector<int>& idx) const;
  void unflat(long p, std::vector<int>& idx) const;
  // Index of the periodic neighbor `off` steps along `axis`.  `winding`
  // (when given) receives how many times the seam was crossed, signed.
  long neighbor(long p, int axis, int off, int* winding = nullptr) const;
  Vec coords(long p) const;

  bool operator==(const TorusGrid& o) const { return sizes_ == o.sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<double> h_;
  std::vector<long> stride_;
  long npts_ = 0;
};

template <class T>
struct GridField {
  TorusGrid grid;
  std::vector<T> v;

  GridField() = default;
  GridField(const TorusGrid& g, const T& init) : grid(g), v(g.points(), init) {}

  T& operator[](long p) { return v[p]; }
  const T& operator[](long p) const { return v[p]; }
  long points() const { return grid.points(); }
};

using ScalarField = GridField<double>;
using VectorField = GridField<Vec>;  // coordinate components of one-forms/vectors
using MatrixField = GridField<Mat>;  // rank-2 tensors in coordinates
using SpinorData = GridField<CVec>;  // per-point spinor components

namespace detail {
inline void check_axis(const TorusGrid& g, int axis) {
  if (axis < 0 || axis >= g.dim()) throw ShapeError("invalid derivative direction");
}
}  // namespace detail

// 4th-order central periodic difference: (-f2 + 8 f1 - 8 f_-1 + f_-2)/(12 h).
template <class T>
GridField<T> partial_derivative(const GridField<T>& f, int axis) {
  detail::check_axis(f.grid, axis);
  const double c = 1.0 / (12.0 * f.grid.spacing()[axis]);
  GridField<T> out = f;
  for (long p = 0; p < f.points(); ++p) {
    const T& fp1 = f.v[f.grid.neighbor(p, axis, +1)];
    const T& fp2 = f.v[f.grid.neighbor(p, axis, +2)];
    const T& fm1 = f.v[f.grid.neighbor(p, axis, -1)];
    const T& fm2 = f.v[f.grid.neighbor(p, axis, -2)];
    out.v[p] = c * (8.0 * (fp1 - fm1) - (fp2 - fm2));
  }
  return out;
}

// Same stencil for spinor data living in a twisted bundle: crossing the seam
// in direction d multiplies the value by exp(2 pi i twist_d * winding).
SpinorData partial_derivative_twisted(const SpinorData& f, int axis,
                                      const std::vector<double>& twist);

template <class T>
GridField<T> cyclic_shift(const GridField<T>& f, const std::vector<int>& offsets) {
  if (static_cast<int>(offsets.size()) != f.grid.dim())
    throw ShapeError("cyclic_shift: offset rank mismatch");
  GridField<T> out = f;
  std::vector<int> idx(f.grid.dim());
  for (long p = 0; p < f.points(); ++p) {
    f.grid.unflat(p, idx);
    for (int d = 0; d < f.grid.dim(); ++d) {
      int n = f.grid.sizes()[d];
      idx[d] = ((idx[d] + offsets[d]) % n + n) % n;
    }
    out.v[f.grid.flat(idx)] = f.v[p];
  }
  return out;
}

// Spinor-valued shift honoring the twist phases at the seam.
SpinorData cyclic_shift_twisted(const SpinorData& f, const std::vector<int>& offsets,
                                const std::vector<double>& twist);

struct MetricField {
  MatrixField val;
  metric::Signature sig;
  const TorusGrid& grid() const { return val.grid; }
};

// Validates symmetry, pointwise nondegeneracy and constant signature.
// (Joinability to the flat reference is checked separately; see
// validate_joinable_to_flat.)
MetricField make_metric(const MatrixField& values);
MetricField flat_metric(const TorusGrid& grid, int r, int s);
Mat flat_form(int r, int s);
Vec eps_vector(int r, int s);

// Full per-point joinability check against diag(eps); throws NumericalError.
void validate_joinable_to_flat(const MetricField& g);

MatrixField inverse_metric(const MetricField& g);
ScalarField sqrt_abs_det(const MetricField& g);

// Christoffel symbols packed per point as P(k, i*m + j) = Gamma^k_ij.
MatrixField christoffels(const MetricField& g);

struct Curvature {
  MatrixField ricci;
  ScalarField scalar;
};
Curvature curvature(const MetricField& g);

MatrixField exterior_d(const VectorField& A);
VectorField codifferential(const MetricField& g, const MatrixField& F);
double volume_integrate(const MetricField& g, const ScalarField& f);

// Pointwise pairings with the metric extended to tensor slots.
ScalarField oneform_inner(const MetricField& g, const VectorField& a, const VectorField& b);
// Full contraction S_ij T_kl g^ik g^jl (tensor-power extension of g).
ScalarField tensor2_inner(const MetricField& g, const MatrixField& S, const MatrixField& T);
VectorField sharp(const MetricField& g, const VectorField& a);

}  // namespace spinlab::grid

#pragma once

#include <functional>
#include <vector>

#include "spinlab/clifford.hpp"
#include "spinlab/grid_calculus.hpp"
#include "spinlab/types.hpp"

namespace spinlab::spinor {

// Phase winding per coordinate direction; the 2^m inequivalent choices of
// delta in {0, 1/2}^m enumerate the spin structures of the torus.
struct SpinStructureTwist {
  std::vector<double> delta;
};
SpinStructureTwist make_twist(std::vector<double> delta);

struct SpinorField {
  clifford::GammaRep rep;
  SpinStructureTwist twist;
  grid::SpinorData data;  // per-point components in the g-orthonormal frame

  const grid::TorusGrid& grid() const { return data.grid; }
  CVec& operator[](long p) { return data.v[p]; }
  const CVec& operator[](long p) const { return data.v[p]; }
};
SpinorField make_spinor(const grid::TorusGrid& g, const clifford::GammaRep& rep,
                        const SpinStructureTwist& twist);

struct UniversalSection {
  grid::MetricField metric;
  SpinorField spinor;
};

// Affine family g_t = (1-t) g + t h; `samples` controls the resolution of
// the continuous-lift bookkeeping in transports.
struct MetricPath {
  grid::MetricField g, h;
  int samples = 17;
};
// Validates pointwise joinability of the endpoints (which covers the whole
// affine segment).
MetricPath make_metric_path(grid::MetricField g, grid::MetricField h, int samples = 17);

// Everything derived from a metric that Dirac-type operators need.
struct DiracGeometry {
  grid::MetricField g;
  clifford::GammaRep rep;
  grid::MatrixField frame;      // columns e_i, the frame map applied to d_i
  grid::MatrixField frame_inv;  // per-point inverse (frame components of vectors)
  grid::MatrixField conn;       // W(a, i*m+j) = omega_ij(d_a), antisymmetric in (i,j)
  std::vector<CMat> gamma_prod;  // gamma_i gamma_j, index i*m+j
  std::vector<CMat> conn_mat;    // per point*m+a: 1/4 sum eps_i eps_j W gamma_i gamma_j
};
DiracGeometry make_geometry(const grid::MetricField& g);

// Per-point frame map b applied to the coordinate basis: e_i = b(d_i),
// g(e_i, e_j) = eps_i delta_ij.
grid::MatrixField frame_field(const grid::MetricField& g);

// omega_ij(d_a) = g(nabla_a e_i, e_j) packed as W(a, i*m+j).  The raw
// stencil output fails exact antisymmetry at discretization order; the
// symmetric part (reported through raw_skew) is projected out so the
// connection is exactly metric-compatible in the pointwise algebra.
grid::MatrixField spin_connection(const grid::MetricField& g, const grid::MatrixField& frame,
                                  double* raw_skew = nullptr);

struct U1Potential {
  grid::VectorField A;
  double q = 0.0;
};

// nabla_a psi = d_a psi + 1/4 sum eps_i eps_j omega_ij(d_a) gamma_i gamma_j psi
// (+ i q A_a psi when a potential is given).
SpinorField covariant_derivative_coord(const DiracGeometry& geom, const SpinorField& psi,
                                       int axis, const U1Potential* pot = nullptr);
// Along a vector field with coordinate components X.
SpinorField covariant_derivative(const DiracGeometry& geom, const SpinorField& psi,
                                 const grid::VectorField& X, const U1Potential* pot = nullptr);

// D psi = sum_i eps_i e_i . nabla_{e_i} psi  (with the potential folded into
// nabla when given: the charge couples as + i q A(e_i)).
SpinorField dirac(const DiracGeometry& geom, const SpinorField& psi,
                  const U1Potential* pot = nullptr);
SpinorField dirac_potential(const DiracGeometry& geom, const U1Potential& pot,
                            const SpinorField& psi);

UniversalSection universal_dirac(const UniversalSection& Phi);

// Pointwise Clifford multiplication by the vector field X (coordinate
// components): gamma(X) psi.
SpinorField clifford_mult(const DiracGeometry& geom, const grid::VectorField& X,
                          const SpinorField& psi);

// Identification transport over the affine path: components map by the
// continuous spin lift of the pointwise rotation relating the h-frame
// reached through g to the canonical one.  Input lives over path.g, output
// over path.h.
SpinorField beta_transport(const MetricPath& path, const SpinorField& psi);

// The two-term local formula for the pulled-back operator: with B = b_{g,h}
// and {e_i} the g-frame,
//   D^h_g psi = sum_i eps_i e_i . nabla^g_{B e_i} psi
//             + 1/4 sum_ij eps_i eps_j e_i . e_j . Theta_ij . psi,
//   Theta_ij = b_{h,g}(nabla^h_{B e_i}(B e_j)) - nabla^g_{B e_i} e_j.
// Agrees with the transport-conjugated D^h up to discretization error.
SpinorField dirac_pullback(const grid::MetricField& g, const grid::MetricField& h,
                           const SpinorField& psi);

// Vertical derivative of a spinor family along the path at parameter t:
// central difference of back-transported neighbors, Richardson-extrapolated.
SpinorField vertical_derivative(const MetricPath& path,
                                const std::function<SpinorField(double)>& psi_t, double t,
                                double eps = 5e-3);

// Dense spectrum of D^g (Riemannian signatures only).  Returns the `count`
// eigenvalues of smallest magnitude in ascending order.  The matrix is
// assembled on the resolved Fourier band |k| <= n/4 per axis (momenta in
// Z + twist), where the 4th-order stencil symbol is injective; unresolved
// modes alias onto spurious small eigenvalues and are excluded.  The matrix
// is symmetrized in the volume-weighted basis; the dropped asymmetry (a
// discretization artifact) is reported through `asymmetry`.
std::vector<double> dirac_spectrum(const grid::MetricField& g, const SpinStructureTwist& twist,
                                   int count, double* asymmetry = nullptr);

// <psi, phi>(x) = psi(x)^dagger B phi(x)
grid::GridField<complexd> spinor_inner_field(const SpinorField& psi, const SpinorField& phi);

double sup_norm(const SpinorField& psi);
double sup_distance(const SpinorField& a, const SpinorField& b);
// a += c * b
void add_scaled(SpinorField& a, const SpinorField& b, complexd c);

}  // namespace spinlab::spinor

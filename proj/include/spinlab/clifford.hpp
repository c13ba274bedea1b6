#pragma once

#include <functional>

#include "spinlab/types.hpp"

namespace spinlab::clifford {

// Irreducible complex Clifford representation for signature (r, s):
//
//   gamma_i gamma_j + gamma_j gamma_i = -2 eps_i delta_ij I,
//   eps_i = +1 for i < r, -1 for i >= r,
//
// on spinor space C^N with N = 2^floor((r+s)/2).  The spinor pairing is
// <psi, phi> = psi^dagger B phi (conjugate-linear in the first slot) with
// B hermitian, invertible, and gamma_i^dagger B = (-1)^(s+1) B gamma_i.
struct GammaRep {
  int r = 0;
  int s = 0;
  int m = 0;  // r + s
  int N = 1;
  std::vector<double> eps;
  std::vector<CMat> gamma;
  CMat B;
};

GammaRep build_rep(int r, int s);

// Clifford action of the vector with pseudo-orthonormal frame components v.
CVec clifford_apply(const GammaRep& rep, const Vec& v, const CVec& psi);

complexd spinor_inner(const GammaRep& rep, const CVec& psi, const CVec& phi);

// Principal logarithm of a pseudo-orthogonal matrix.  Throws NumericalError
// when an eigenvalue sits on the closed negative real axis (chart failure);
// callers then have to supply a path.
Mat so_log(const Mat& O);

// Lie-algebra lift: the element S with exp(S) gamma_i exp(-S) =
// sum_j [exp(A)]_ji gamma_j for A in so(r,s).
CMat lift_generator(const GammaRep& rep, const Mat& A);

// Spin lift of a single rotation through the principal logarithm chart.
// Continuous in O with spin_lift(I) = I.
CMat spin_lift(const GammaRep& rep, const Mat& O);

// Continuous lift along a path t -> O(t), t in [0,1], with O(0) = I.
// Subdivides adaptively so every relative rotation stays in the log chart;
// the result covers O(1) and its sign carries the winding of the path
// (a 2*pi rotation loop returns -I).
CMat spin_lift_path(const GammaRep& rep, const std::function<Mat(double)>& O_of_t,
                    int min_steps = 8);

// max_i || L gamma_i L^{-1} - sum_j O_ji gamma_j ||_inf; the defining
// covariance property of the lift.
double covariance_residual(const GammaRep& rep, const CMat& L, const Mat& O);

}  // namespace spinlab::clifford

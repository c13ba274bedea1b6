#pragma once

#include <utility>

#include "spinlab/types.hpp"

namespace spinlab::metric {

struct Signature {
  int pos = 0;
  int neg = 0;
  bool operator==(const Signature&) const = default;
};

// Signature of a symmetric bilinear form.  Eigenvalues below
// 1e-10 * ||G||_spec in magnitude are treated as degenerate and rejected.
Signature signature(const Mat& G);

// Pseudo-orthonormal frame: columns b_i with G(b_i, b_j) = eps_i delta_ij,
// positive directions first, oriented (det > 0).  Deterministic: descending
// eigenvalue order, eigenvector sign fixed by the first nonzero component.
Mat pseudo_onb(const Mat& G);

// The endomorphism a_{g,h} = G^{-1} H, i.e. g(a X, Y) = h(X, Y).
Mat comparison_a(const Mat& G, const Mat& H);

// b_{g,h} = (a_{g,h})^{-1/2}, the g-self-adjoint positive-spectrum root;
// maps a g-pseudo-orthonormal basis to an h-pseudo-orthonormal one.
// Positive-definite g goes through a symmetrized eigendecomposition,
// indefinite g through the real Schur square root.
Mat comparison_b(const Mat& G, const Mat& H);

// True when the affine segment g_t = (1-t) G + t H stays nondegenerate with
// constant signature and a_{g, g_t} keeps positive real spectrum.  Sampled
// at `samples` Chebyshev-Lobatto points of [0,1], endpoints included.
bool joinable(const Mat& G, const Mat& H, int samples = 33);

// O = b_{eta,h}^{-1} b_{g,h} b_{eta,g}: the eta-pseudo-orthogonal rotation
// relating the two h-frames obtained from eta directly and through g.
// Validated eta-orthogonal with det +1 (tolerance 1e-10).
Mat identification_rotation(const Mat& Eta, const Mat& G, const Mat& H);

// Adjoint wrt diag(eps): M^+ = I_{r,s} M^T I_{r,s}; returns (sym, asym)
// halves of M.  They are trace-orthogonal for <A,B> = tr(A^+ B).
std::pair<Mat, Mat> sym_asym_project(const Mat& M, int r, int s);

// Integrates the frame ODE b' = b * M(t), M = -1/2 diag(eps) b^T (H-G) b,
// which keeps b(t) pseudo-orthonormal for g_t while the coordinate velocity
// stays Sym-projected.  Starts at pseudo_onb(G); lands on an h-frame.
// The discrepancy against comparison_b(G,H) * pseudo_onb(G) is a reported
// quantity, not an identity.
Mat horizontal_frame_transport(const Mat& G, const Mat& H, int steps = 256);

}  // namespace spinlab::metric

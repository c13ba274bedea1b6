#pragma once

#include <vector>

#include "spinlab/grid_calculus.hpp"
#include "spinlab/spinor_fields.hpp"

namespace spinlab::cauchy {

// Fixed-background Dirac evolution on the (1+1)-cylinder S^1 x R.  The grid
// axis is the spacelike coordinate x; evolution time t is the remaining
// (timelike) Clifford direction, so spinors carry the two-gamma
// representation of signature (1,1) with the temporal gamma last.  The
// background is a static block-diagonal metric diag(p(x), -q(x)) with
// p, q > 0 sampled on the spatial circle; time slicing is the coordinate
// slicing (no shift).
struct EvolutionConfig {
  grid::MatrixField background;  // 2x2 per spatial point: diag(p, -q)
  double cfl = 0.5;              // time step as a fraction of the stability limit
  long steps = 0;
  long sample_stride = 1;        // trajectory sampling interval, in steps
  double lambda = 0.0;           // eigenvalue parameter of the evolved equation
};

struct EvolutionResult {
  double dt = 0.0;
  std::vector<double> times;   // per-step times, steps+1 entries starting at 0
  std::vector<double> charge;  // integral <gamma(nu) psi, psi> dv per step
  std::vector<double> sup;     // max-norm per step
  std::vector<double> sample_times;
  std::vector<spinor::SpinorField> states;  // sampled states incl. initial and final
};

// Integrates d/dt psi = sqrt(q) [ -sqrt(q/p) gamma_t gamma_x d/dx psi
//                                 + lambda gamma_t psi
//                                 + q'/(4 q sqrt(p)) gamma_x gamma_t psi ]
// (the first-order rearrangement of D psi = lambda psi on the static
// background) with classical 4th-order Runge-Kutta and the 4th-order
// twisted spatial stencil.  The time step is cfl * h / max sqrt(q/p).
// The monitored charge integral <gamma(nu) psi, psi> dv over the slice is
// conserved for lambda = 0 (formal skew-symmetry of the generator); for
// lambda != 0 it carries the source 2 lambda integral <psi,psi> dv, which is
// generally nonzero in indefinite signature and is reported, not hidden.
// Throws ShapeError for invalid configs (cfl outside (0, 0.9], non-diagonal
// or non-hyperbolic backgrounds, wrong representation) and NumericalError
// if the state stops being finite or grows by more than 1e6 (divergence
// guard; validated configs are unconditionally stable for this scheme,
// so the guard fires only on non-finite input or degenerate backgrounds).
EvolutionResult evolve_dirac(const EvolutionConfig& cfg, const spinor::SpinorField& psi0);

}  // namespace spinlab::cauchy

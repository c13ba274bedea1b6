#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "spinlab/clifford.hpp"
#include "spinlab/grid_calculus.hpp"
#include "spinlab/spinor_fields.hpp"
#include "spinlab/types.hpp"

namespace spinlab::edm {

// Masses and charges of an N-field Dirac system.
struct EDMParams {
  std::vector<double> lambda;
  std::vector<double> q;
  int nfields() const;  // validates equal lengths
};

// Dirac current j(X) = <X . psi, psi> in coordinate components (complex).
// Conjugation symmetry forces j real for odd s and purely imaginary for
// even s.
grid::GridField<CVec> dirac_current(const spinor::DiracGeometry& geom,
                                    const spinor::SpinorField& psi);
// The real-valued current sourcing the Maxwell residual: -1/2 the real part
// of the sesquilinear current for odd s, -1/2 the imaginary part for even s.
// The even-s normalization (including its sign, which reflects the
// conjugate-linear first slot of the spinor product together with the +iq
// coupling convention) is pinned by the first variation of the action in the
// U(1) direction; the action's Maxwell term uses the full index contraction
// of F, whence the factor 1/2.  Odd-s systems decouple from the potential in
// the real part of the action and follow the even-s formula by convention.
grid::VectorField real_current(const spinor::DiracGeometry& geom,
                               const spinor::SpinorField& psi);

// Pure field tensor tr_(1,3)(F (x) F) - 1/4 g(F,F) g for a 2-form F.
grid::MatrixField maxwell_energy_momentum(const grid::MetricField& g,
                                          const grid::MatrixField& F);
// T = sum_i T^1_i + T^2 with
// T^1_i(X,Y) = 1/2 Re <X . nabla^{q_i A}_Y psi_i + Y . nabla^{q_i A}_X psi_i, psi_i>.
grid::MatrixField energy_momentum(const EDMParams& params, const spinor::DiracGeometry& geom,
                                  const std::vector<spinor::SpinorField>& psis,
                                  const grid::VectorField& A);

// Ric - 1/2 scal g.
grid::MatrixField einstein_tensor(const grid::MetricField& g);

struct EDMResidual {
  grid::MatrixField tensor;                  // Ric - 1/2 scal g - T
  std::vector<spinor::SpinorField> spinor;   // D^{q_i A} psi_i - lambda_i psi_i
  grid::VectorField maxwell;                 // delta F - sum_i q_i J_i
};
// All sections must share one metric (bitwise).
EDMResidual edm_residual(const EDMParams& params,
                         const std::vector<spinor::UniversalSection>& sections,
                         const grid::VectorField& A);

// integral of [scal + sum_i(lambda_i <psi_i,psi_i> - Re<D^{q_i A} psi_i, psi_i>)
//              - 1/2 g(F,F)] dv.  The pointwise spinor pairing is complex in
// general; its real part is integrated (the integral of the full pairing is
// real whenever the operator is symmetric, so this pins the discretization).
double lagrangian(const EDMParams& params, const grid::MetricField& g,
                  const std::vector<spinor::SpinorField>& psis, const grid::VectorField& A);

// The tensor paired with metric directions in the first variation of the
// action (spinors held through the identification transport):
//   E = Ric - 1/2 scal g - 1/2 sum_i T^1_i - T^2
//       - 1/2 sum_i Re<(lambda_i - D^{q_i A}) psi_i, psi_i> g.
// At solutions the trace term vanishes; note the 1/2 against the T^1 weight
// in the residual tensor slot, which uses the displayed (unweighted) sum.
grid::MatrixField variational_tensor(const EDMParams& params, const spinor::DiracGeometry& geom,
                                     const std::vector<spinor::SpinorField>& psis,
                                     const grid::VectorField& A);

struct Direction {
  grid::MatrixField k;                      // symmetric metric direction
  std::vector<spinor::SpinorField> phi;     // one perturbation per field
  grid::VectorField a;                      // potential direction
};

struct ELReport {
  double dl = 0.0;       // numerical derivative of the action along the direction
  double pairing = 0.0;  // c1*<E,k> + c2*Re<(D-lambda)psi,phi> + c3*<dF - qJ, a> integrated
  double gap = 0.0;      // |dl - pairing|
};

// Pairing constants frozen by least-squares calibration of the pairing
// components against the numerical first variation (see the calibration
// regression test).
inline constexpr double kElMetricWeight = -1.0;
inline constexpr double kElSpinorWeight = -2.0;
inline constexpr double kElMaxwellWeight = -2.0;

// The three pairing integrals, unweighted:
//   (integral <E,k> dv, integral sum_i Re<(D^{q_i A}-lambda_i)psi_i, phi_i> dv,
//    integral <delta F - sum q_i J_i, a> dv).
Vec el_pairing_components(const EDMParams& params, const grid::MetricField& g,
                          const std::vector<spinor::SpinorField>& psis,
                          const grid::VectorField& A, const Direction& dir);

// First-variation consistency along the direction: dl differentiates
// t -> L(g + t k, transport(psi) + t phi, A + t a) by central differences
// (Richardson-extrapolated unless `richardson` is false).
ELReport el_consistency(const EDMParams& params, const grid::MetricField& g,
                        const std::vector<spinor::SpinorField>& psis, const grid::VectorField& A,
                        const Direction& dir, double step = 1e-3, bool richardson = true);

// Data induced on a spatial slice: Riemannian metric, second fundamental
// form, spinors in the ambient (r = dim S, s = 1) representation, Maxwell
// potential A0 and normal derivative A1.
struct InitialData {
  grid::MetricField g0;
  grid::MatrixField K;
  std::vector<spinor::SpinorField> psi0;
  grid::VectorField A0, A1;
};

struct ConstraintResidual {
  grid::ScalarField hamiltonian;  // scal + (tr K)^2 - |K|^2 - 16 pi T(nu,nu)
  grid::VectorField momentum;     // tr_12(nabla K) - tr_23(nabla K) - 8 pi T(nu,.)
};
// |K|^2 is the g-norm squared K_ab K^ab (the ADM form).  Matter terms use
// the temporal gauge A(nu) = 0, the electric field F(nu,.) = A1, the
// magnetic field d A0, and the normal derivative of spinors eliminated
// through the Dirac equation with the Gauss-type K coupling
// nabla^amb_a = nabla^slice_a - 1/2 K_a^b gamma_b gamma_nu.
ConstraintResidual constraint_residual(const InitialData& Z, const EDMParams& params);

// Q^k = h^{ij} (Gamma(g)^k_ij - Gamma(h)^k_ij); a vector field since the
// difference of connections is tensorial.
grid::VectorField wave_gauge_residual(const grid::MetricField& h, const grid::MetricField& g);

// Leading coefficient of a linear local operator on plane-wave probes
// e^{i s omega . x} v: the N x N matrix sigma with op ~ (i s)^order sigma
// as the probe frequency grows.  omega must be an integer lattice covector;
// probes are untwisted.  Extraction is by parity splitting at two scales
// with Richardson correction; scale disagreement beyond 25% raises
// NumericalError.
CMat principal_symbol(const std::function<spinor::SpinorField(const spinor::SpinorField&)>& op,
                      const grid::TorusGrid& grid, const clifford::GammaRep& rep,
                      const Vec& omega, long point, int order);

}  // namespace spinlab::edm

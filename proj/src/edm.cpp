#include "spinlab/edm.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace spinlab::edm {

using clifford::GammaRep;
using grid::GridField;
using grid::MatrixField;
using grid::MetricField;
using grid::ScalarField;
using grid::TorusGrid;
using grid::VectorField;
using spinor::DiracGeometry;
using spinor::SpinorField;
using spinor::U1Potential;

namespace {

void check_fields(const EDMParams& params, const std::vector<SpinorField>& psis) {
  if (static_cast<int>(psis.size()) != params.nfields())
    throw ShapeError("spinor field count does not match parameter count");
}

void check_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (!(a == b)) throw ShapeError(std::string(what) + ": grid mismatch");
}

// Constant coordinate direction d_a as a vector field.
VectorField axis_field(const TorusGrid& g, int a) {
  Vec e = Vec::Zero(g.dim());
  e[a] = 1.0;
  return VectorField(g, e);
}

SpinorField scaled_sum(const SpinorField& base, const SpinorField& add, complexd c) {
  SpinorField out = base;
  spinor::add_scaled(out, add, c);
  return out;
}

}  // namespace

int EDMParams::nfields() const {
  if (lambda.size() != q.size()) throw ShapeError("mass and charge lists differ in length");
  return static_cast<int>(lambda.size());
}

GridField<CVec> dirac_current(const DiracGeometry& geom, const SpinorField& psi) {
  const TorusGrid& gr = geom.g.grid();
  check_grid(gr, psi.grid(), "dirac_current");
  const int m = gr.dim();
  GridField<CVec> j(gr, CVec::Zero(m));
  for (int a = 0; a < m; ++a) {
    SpinorField mult = spinor::clifford_mult(geom, axis_field(gr, a), psi);
    for (long p = 0; p < gr.points(); ++p)
      j.v[p](a) = clifford::spinor_inner(psi.rep, mult[p], psi[p]);
  }
  return j;
}

grid::VectorField real_current(const DiracGeometry& geom, const SpinorField& psi) {
  GridField<CVec> j = dirac_current(geom, psi);
  VectorField out(geom.g.grid(), Vec::Zero(geom.g.grid().dim()));
  const bool odd_s = (psi.rep.s % 2) == 1;
  for (long p = 0; p < out.points(); ++p)
    out.v[p] = -0.5 * (odd_s ? j.v[p].real().eval() : j.v[p].imag().eval());
  return out;
}

grid::MatrixField maxwell_energy_momentum(const MetricField& g, const MatrixField& F) {
  check_grid(g.grid(), F.grid, "maxwell_energy_momentum");
  const int m = g.grid().dim();
  MatrixField ginv = grid::inverse_metric(g);
  ScalarField ff = grid::tensor2_inner(g, F, F);
  MatrixField out(g.grid(), Mat::Zero(m, m));
  for (long p = 0; p < out.points(); ++p)
    out.v[p] = F.v[p].transpose() * ginv.v[p] * F.v[p] - 0.25 * ff.v[p] * g.val.v[p];
  return out;
}

grid::MatrixField energy_momentum(const EDMParams& params, const DiracGeometry& geom,
                                  const std::vector<SpinorField>& psis, const VectorField& A) {
  check_fields(params, psis);
  const TorusGrid& gr = geom.g.grid();
  check_grid(gr, A.grid, "energy_momentum");
  const int m = gr.dim();

  MatrixField T = maxwell_energy_momentum(geom.g, grid::exterior_d(A));
  for (size_t i = 0; i < psis.size(); ++i) {
    check_grid(gr, psis[i].grid(), "energy_momentum");
    U1Potential pot{A, params.q[i]};
    std::vector<SpinorField> grad;
    grad.reserve(m);
    for (int a = 0; a < m; ++a)
      grad.push_back(spinor::covariant_derivative_coord(geom, psis[i], a, &pot));
    std::vector<std::vector<SpinorField>> mult(m);
    for (int a = 0; a < m; ++a) {
      VectorField ea = axis_field(gr, a);
      for (int b = 0; b < m; ++b) mult[a].push_back(spinor::clifford_mult(geom, ea, grad[b]));
    }
    for (long p = 0; p < gr.points(); ++p)
      for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
          double t = 0.5 * std::real(clifford::spinor_inner(psis[i].rep, mult[a][b][p], psis[i][p]) +
                                     clifford::spinor_inner(psis[i].rep, mult[b][a][p], psis[i][p]));
          T.v[p](a, b) += t;
          if (b != a) T.v[p](b, a) += t;
        }
  }
  return T;
}

grid::MatrixField einstein_tensor(const MetricField& g) {
  grid::Curvature c = grid::curvature(g);
  MatrixField out = c.ricci;
  for (long p = 0; p < out.points(); ++p) out.v[p] -= 0.5 * c.scalar.v[p] * g.val.v[p];
  return out;
}

EDMResidual edm_residual(const EDMParams& params,
                         const std::vector<spinor::UniversalSection>& sections,
                         const VectorField& A) {
  if (sections.empty()) throw ShapeError("edm_residual needs at least one section");
  if (static_cast<int>(sections.size()) != params.nfields())
    throw ShapeError("section count does not match parameter count");
  const MetricField& g = sections.front().metric;
  for (const auto& s : sections) {
    check_grid(g.grid(), s.metric.grid(), "edm_residual");
    for (long p = 0; p < g.val.points(); ++p)
      if (s.metric.val.v[p] != g.val.v[p])
        throw ShapeError("edm_residual: sections must share one metric");
  }
  DiracGeometry geom = spinor::make_geometry(g);

  std::vector<SpinorField> psis;
  psis.reserve(sections.size());
  for (const auto& s : sections) psis.push_back(s.spinor);

  EDMResidual out{einstein_tensor(g), {}, VectorField(g.grid(), Vec::Zero(g.grid().dim()))};
  MatrixField T = energy_momentum(params, geom, psis, A);
  for (long p = 0; p < g.val.points(); ++p) out.tensor.v[p] -= T.v[p];

  for (size_t i = 0; i < psis.size(); ++i) {
    U1Potential pot{A, params.q[i]};
    out.spinor.push_back(scaled_sum(spinor::dirac(geom, psis[i], &pot), psis[i],
                                    complexd(-params.lambda[i], 0.0)));
  }

  out.maxwell = grid::codifferential(g, grid::exterior_d(A));
  for (size_t i = 0; i < psis.size(); ++i) {
    if (params.q[i] == 0.0) continue;
    VectorField J = real_current(geom, psis[i]);
    for (long p = 0; p < out.maxwell.points(); ++p) out.maxwell.v[p] -= params.q[i] * J.v[p];
  }
  return out;
}

double lagrangian(const EDMParams& params, const MetricField& g,
                  const std::vector<SpinorField>& psis, const VectorField& A) {
  check_fields(params, psis);
  grid::Curvature c = grid::curvature(g);
  ScalarField density = c.scalar;

  MatrixField F = grid::exterior_d(A);
  ScalarField ff = grid::tensor2_inner(g, F, F);
  for (long p = 0; p < density.points(); ++p) density.v[p] -= 0.5 * ff.v[p];

  if (!psis.empty()) {
    DiracGeometry geom = spinor::make_geometry(g);
    for (size_t i = 0; i < psis.size(); ++i) {
      U1Potential pot{A, params.q[i]};
      SpinorField dp = spinor::dirac(geom, psis[i], &pot);
      for (long p = 0; p < density.points(); ++p) {
        double norm = std::real(clifford::spinor_inner(psis[i].rep, psis[i][p], psis[i][p]));
        double dpair = std::real(clifford::spinor_inner(psis[i].rep, dp[p], psis[i][p]));
        density.v[p] += params.lambda[i] * norm - dpair;
      }
    }
  }
  return grid::volume_integrate(g, density);
}

grid::MatrixField variational_tensor(const EDMParams& params, const DiracGeometry& geom,
                                     const std::vector<SpinorField>& psis, const VectorField& A) {
  check_fields(params, psis);
  const TorusGrid& gr = geom.g.grid();
  MatrixField E = einstein_tensor(geom.g);
  MatrixField T2 = maxwell_energy_momentum(geom.g, grid::exterior_d(A));
  for (long p = 0; p < E.points(); ++p) E.v[p] -= T2.v[p];

  EDMParams one{{0.0}, {0.0}};
  for (size_t i = 0; i < psis.size(); ++i) {
    one.lambda[0] = params.lambda[i];
    one.q[0] = params.q[i];
    U1Potential pot{A, params.q[i]};
    // T^1 of this field alone: the gauge-covariant derivative keeps the qA
    // coupling, so strip the Maxwell part from the single-field total.
    MatrixField t = energy_momentum(one, geom, {psis[i]}, A);
    for (long p = 0; p < t.points(); ++p) t.v[p] -= T2.v[p];
    SpinorField dp = spinor::dirac(geom, psis[i], &pot);
    for (long p = 0; p < E.points(); ++p) {
      double s0 = params.lambda[i] *
                      std::real(clifford::spinor_inner(psis[i].rep, psis[i][p], psis[i][p])) -
                  std::real(clifford::spinor_inner(psis[i].rep, dp[p], psis[i][p]));
      E.v[p] -= 0.5 * t.v[p] + 0.5 * s0 * geom.g.val.v[p];
    }
  }
  return E;
}

Vec el_pairing_components(const EDMParams& params, const MetricField& g,
                          const std::vector<SpinorField>& psis, const VectorField& A,
                          const Direction& dir) {
  check_fields(params, psis);
  DiracGeometry geom = spinor::make_geometry(g);
  if (dir.phi.size() != psis.size())
    throw ShapeError("direction spinor count does not match field count");

  Vec out = Vec::Zero(3);
  MatrixField E = variational_tensor(params, geom, psis, A);
  out[0] = grid::volume_integrate(g, grid::tensor2_inner(g, E, dir.k));

  ScalarField sp(g.grid(), 0.0);
  for (size_t i = 0; i < psis.size(); ++i) {
    U1Potential pot{A, params.q[i]};
    SpinorField res = scaled_sum(spinor::dirac(geom, psis[i], &pot), psis[i],
                                 complexd(-params.lambda[i], 0.0));
    for (long p = 0; p < sp.points(); ++p)
      sp.v[p] += std::real(clifford::spinor_inner(psis[i].rep, res[p], dir.phi[i][p]));
  }
  out[1] = grid::volume_integrate(g, sp);

  VectorField mx = grid::codifferential(g, grid::exterior_d(A));
  for (size_t i = 0; i < psis.size(); ++i) {
    if (params.q[i] == 0.0) continue;
    VectorField J = real_current(geom, psis[i]);
    for (long p = 0; p < mx.points(); ++p) mx.v[p] -= params.q[i] * J.v[p];
  }
  out[2] = grid::volume_integrate(g, grid::oneform_inner(g, mx, dir.a));
  return out;
}

ELReport el_consistency(const EDMParams& params, const MetricField& g,
                        const std::vector<SpinorField>& psis, const VectorField& A,
                        const Direction& dir, double step, bool richardson) {
  check_fields(params, psis);
  if (dir.phi.size() != psis.size())
    throw ShapeError("direction spinor count does not match field count");
  if (step <= 0.0) throw ShapeError("differencing step must be positive");

  auto action_at = [&](double t) {
    MatrixField vals = g.val;
    for (long p = 0; p < vals.points(); ++p) vals.v[p] += t * dir.k.v[p];
    MetricField gt = grid::make_metric(vals);
    spinor::MetricPath path = spinor::make_metric_path(g, gt);
    std::vector<SpinorField> moved;
    moved.reserve(psis.size());
    for (size_t i = 0; i < psis.size(); ++i)
      moved.push_back(scaled_sum(spinor::beta_transport(path, psis[i]), dir.phi[i],
                                 complexd(t, 0.0)));
    VectorField At = A;
    for (long p = 0; p < At.points(); ++p) At.v[p] += t * dir.a.v[p];
    return lagrangian(params, gt, moved, At);
  };
  auto central = [&](double s) { return (action_at(s) - action_at(-s)) / (2.0 * s); };

  ELReport rep;
  rep.dl = richardson ? (4.0 * central(step) - central(2.0 * step)) / 3.0 : central(step);
  Vec parts = el_pairing_components(params, g, psis, A, dir);
  rep.pairing = kElMetricWeight * parts[0] + kElSpinorWeight * parts[1] +
                kElMaxwellWeight * parts[2];
  rep.gap = std::abs(rep.dl - rep.pairing);
  return rep;
}

ConstraintResidual constraint_residual(const InitialData& Z, const EDMParams& params) {
  const MetricField& g0 = Z.g0;
  const TorusGrid& gr = g0.grid();
  const int ms = gr.dim();  // slice dimension
  if (g0.sig.neg != 0) throw ShapeError("slice metric must be Riemannian");
  check_grid(gr, Z.K.grid, "constraint_residual");
  check_grid(gr, Z.A0.grid, "constraint_residual");
  check_grid(gr, Z.A1.grid, "constraint_residual");
  if (static_cast<int>(Z.psi0.size()) != params.nfields())
    throw ShapeError("initial spinor count does not match parameter count");
  for (long p = 0; p < gr.points(); ++p)
    if ((Z.K.v[p] - Z.K.v[p].transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ShapeError("second fundamental form must be symmetric");

  GammaRep rep = clifford::build_rep(ms, 1);  // ambient representation, nu last
  for (const auto& psi : Z.psi0) {
    check_grid(gr, psi.grid(), "constraint_residual");
    if (psi.rep.N != rep.N || psi.rep.r != rep.r || psi.rep.s != rep.s)
      throw ShapeError("initial spinors must use the ambient representation");
  }

  MatrixField ginv = grid::inverse_metric(g0);
  grid::Curvature curv = grid::curvature(g0);
  MatrixField gamma_sym = grid::christoffels(g0);
  MatrixField frame = spinor::frame_field(g0);
  MatrixField conn = spinor::spin_connection(g0, frame);
  MatrixField Kmix(gr, Mat::Zero(ms, ms));  // K_a^b
  for (long p = 0; p < gr.points(); ++p) Kmix.v[p] = Z.K.v[p] * ginv.v[p];

  // Maxwell data in temporal gauge: electric field F(nu,.) = A1, magnetic
  // field d A0.
  MatrixField B = grid::exterior_d(Z.A0);
  ScalarField e2 = grid::oneform_inner(g0, Z.A1, Z.A1);
  ScalarField b2 = grid::tensor2_inner(g0, B, B);
  ScalarField tnn(gr, 0.0);
  VectorField tn(gr, Vec::Zero(ms));
  for (long p = 0; p < gr.points(); ++p) {
    tnn.v[p] = 0.5 * e2.v[p] + 0.25 * b2.v[p];
    // T^2(nu, d_b) = -E^c B_cb with E^c = g^{ca} A1_a
    tn.v[p] = -(B.v[p].transpose() * (ginv.v[p] * Z.A1.v[p]));
  }

  // Spinor contributions.  The ambient spatial derivative carries the slice
  // spin connection (spatial gammas), the U(1) coupling with A0, and the
  // Gauss-type shape term -1/2 K_a^b gamma_b gamma_nu.  The normal
  // derivative is eliminated by the Dirac equation:
  //   gamma_nu nabla_nu psi = D_S psi - lambda psi.
  const CMat& gnu = rep.gamma[ms];
  for (int i = 0; i < params.nfields(); ++i) {
    const SpinorField& psi = Z.psi0[i];
    const double qi = params.q[i];
    std::vector<SpinorField> amb;  // nabla^amb_a psi for each slice axis
    amb.reserve(ms);
    for (int a = 0; a < ms; ++a) {
      SpinorField d = psi;
      d.data = grid::partial_derivative_twisted(psi.data, a, psi.twist.delta);
      for (long p = 0; p < gr.points(); ++p) {
        CVec extra = CVec::Zero(rep.N);
        for (int bi = 0; bi < ms; ++bi)
          for (int bj = 0; bj < ms; ++bj) {
            double w = conn.v[p](a, bi * ms + bj);
            if (w != 0.0) extra += 0.25 * w * (rep.gamma[bi] * (rep.gamma[bj] * psi[p]));
          }
        extra += complexd(0.0, qi * Z.A0.v[p](a)) * psi[p];
        for (int b = 0; b < ms; ++b) {
          double kab = Kmix.v[p](a, b);
          if (kab != 0.0) extra -= 0.5 * kab * (rep.gamma[b] * (gnu * psi[p]));
        }
        d[p] += extra;
      }
      amb.push_back(std::move(d));
    }
    // D_S psi = sum_{j spatial} gamma_j sum_a E(a,j) nabla^amb_a psi
    SpinorField ds = spinor::make_spinor(gr, rep, psi.twist);
    for (long p = 0; p < gr.points(); ++p) {
      CVec acc = CVec::Zero(rep.N);
      for (int j = 0; j < ms; ++j) {
        CVec dir = CVec::Zero(rep.N);
        for (int a = 0; a < ms; ++a) dir += frame.v[p](a, j) * amb[a][p];
        acc += rep.gamma[j] * dir;
      }
      ds[p] = acc;
    }
    for (long p = 0; p < gr.points(); ++p) {
      CVec nunabla = ds[p] - params.lambda[i] * psi[p];  // = gamma_nu nabla_nu psi
      tnn.v[p] += std::real(clifford::spinor_inner(rep, nunabla, psi[p]));
      for (int b = 0; b < ms; ++b) {
        // T^1(nu, d_b) = 1/2 Re <gamma_nu nabla^amb_b psi
        //                        + gamma(d_b) gamma_nu (D_S - lambda) psi, psi>
        CVec gb = CVec::Zero(rep.N);
        for (int j = 0; j < ms; ++j) gb += frame.v[p](b, j) * (rep.gamma[j] * (gnu * nunabla));
        tn.v[p](b) += 0.5 * std::real(clifford::spinor_inner(rep, gnu * amb[b][p], psi[p]) +
                                      clifford::spinor_inner(rep, gb, psi[p]));
      }
    }
  }

  ConstraintResidual out{ScalarField(gr, 0.0), VectorField(gr, Vec::Zero(ms))};
  ScalarField trK(gr, 0.0), k2 = grid::tensor2_inner(g0, Z.K, Z.K);
  for (long p = 0; p < gr.points(); ++p) trK.v[p] = Kmix.v[p].trace();
  for (long p = 0; p < gr.points(); ++p)
    out.hamiltonian.v[p] =
        curv.scalar.v[p] + trK.v[p] * trK.v[p] - k2.v[p] - 16.0 * kPi * tnn.v[p];

  std::vector<MatrixField> dK;
  dK.reserve(ms);
  for (int a = 0; a < ms; ++a) dK.push_back(grid::partial_derivative(Z.K, a));
  for (long p = 0; p < gr.points(); ++p) {
    // (nabla_a K)_bc = d_a K_bc - Gamma^d_ab K_dc - Gamma^d_ac K_bd
    for (int c = 0; c < ms; ++c) {
      double div = 0.0, dtr = 0.0;
      for (int a = 0; a < ms; ++a)
        for (int b = 0; b < ms; ++b) {
          double nab = dK[a].v[p](b, c);
          for (int d = 0; d < ms; ++d)
            nab -= gamma_sym.v[p](d, a * ms + b) * Z.K.v[p](d, c) +
                   gamma_sym.v[p](d, a * ms + c) * Z.K.v[p](b, d);
          div += ginv.v[p](a, b) * nab;
        }
      for (int b = 0; b < ms; ++b)
        for (int d = 0; d < ms; ++d) {
          double nab = dK[c].v[p](b, d);
          for (int e = 0; e < ms; ++e)
            nab -= gamma_sym.v[p](e, c * ms + b) * Z.K.v[p](e, d) +
                   gamma_sym.v[p](e, c * ms + d) * Z.K.v[p](b, e);
          dtr += ginv.v[p](b, d) * nab;
        }
      out.momentum.v[p](c) = div - dtr - 8.0 * kPi * tn.v[p](c);
    }
  }
  return out;
}

grid::VectorField wave_gauge_residual(const MetricField& h, const MetricField& g) {
  check_grid(h.grid(), g.grid(), "wave_gauge_residual");
  const int m = h.grid().dim();
  MatrixField hinv = grid::inverse_metric(h);
  MatrixField cg = grid::christoffels(g);
  MatrixField ch = grid::christoffels(h);
  VectorField out(h.grid(), Vec::Zero(m));
  for (long p = 0; p < out.points(); ++p)
    for (int k = 0; k < m; ++k) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          acc += hinv.v[p](i, j) * (cg.v[p](k, i * m + j) - ch.v[p](k, i * m + j));
      out.v[p](k) = acc;
    }
  return out;
}

CMat principal_symbol(const std::function<SpinorField(const SpinorField&)>& op,
                      const TorusGrid& grid, const GammaRep& rep, const Vec& omega, long point,
                      int order) {
  if (omega.size() != grid.dim()) throw ShapeError("covector rank mismatch");
  if (point < 0 || point >= grid.points()) throw ShapeError("base point out of range");
  if (order != 1 && order != 2) throw ShapeError("symbol order must be 1 or 2");
  for (int d = 0; d < grid.dim(); ++d)
    if (std::abs(omega[d] - std::round(omega[d])) > 1e-9)
      throw ShapeError("probe covector must be an integer lattice vector");

  spinor::SpinStructureTwist tw = spinor::make_twist(std::vector<double>(grid.dim(), 0.0));
  Vec xp = grid.coords(point);
  auto response = [&](double s) {
    CMat R(rep.N, rep.N);
    SpinorField probe = spinor::make_spinor(grid, rep, tw);
    for (int c = 0; c < rep.N; ++c) {
      for (long p = 0; p < grid.points(); ++p) {
        Vec x = grid.coords(p);
        probe[p] = CVec::Zero(rep.N);
        probe[p](c) = std::exp(complexd(0.0, s * omega.dot(x)));
      }
      SpinorField img = op(probe);
      R.col(c) = std::exp(complexd(0.0, -s * omega.dot(xp))) * img[point];
    }
    return R;
  };

  auto estimate = [&](double s) -> CMat {
    if (order == 1) return (response(s) - response(-s)) / (2.0 * complexd(0.0, s));
    CMat even = 0.5 * (response(s) + response(-s)) - response(0.0);
    return even / (complexd(0.0, s) * complexd(0.0, s));
  };

  CMat s1 = estimate(1.0), s2 = estimate(2.0);
  double scale = std::max(s1.cwiseAbs().maxCoeff(), 1e-12);
  if ((s1 - s2).cwiseAbs().maxCoeff() > 0.25 * scale)
    throw NumericalError("principal symbol extraction did not converge");
  return (16.0 * s1 - s2) / 15.0;
}

}  // namespace spinlab::edm

#include "spinlab/spinor_fields.hpp"

#include <algorithm>
#include <cmath>

namespace spinlab::spinor {

namespace {

void check_same_grid(const grid::TorusGrid& a, const grid::TorusGrid& b, const char* what) {
  if (!(a == b)) throw ShapeError(std::string(what) + ": grid mismatch");
}

void check_compatible(const DiracGeometry& geom, const SpinorField& psi) {
  check_same_grid(geom.g.grid(), psi.grid(), "spinor/metric");
  if (geom.rep.r != psi.rep.r || geom.rep.s != psi.rep.s)
    throw ShapeError("spinor representation does not match the metric signature");
}

Mat christoffel_block(const Mat& packed, int a, int m) {
  Mat G(m, m);
  for (int b = 0; b < m; ++b)
    for (int c = 0; c < m; ++c) G(b, c) = packed(b, a * m + c);
  return G;
}

}  // namespace

SpinStructureTwist make_twist(std::vector<double> delta) {
  for (double d : delta)
    if (d != 0.0 && d != 0.5) throw ShapeError("twist entries must be 0 or 1/2");
  return SpinStructureTwist{std::move(delta)};
}

SpinorField make_spinor(const grid::TorusGrid& g, const clifford::GammaRep& rep,
                        const SpinStructureTwist& twist) {
  if (static_cast<int>(twist.delta.size()) != g.dim())
    throw ShapeError("twist rank must match grid dimension");
  // Ambient representations (one extra gamma) are allowed: constraint initial
  // data lives on a slice grid but carries the full spacetime representation.
  if (rep.m < g.dim()) throw ShapeError("representation carries fewer gammas than grid axes");
  SpinorField psi;
  psi.rep = rep;
  psi.twist = twist;
  psi.data = grid::SpinorData(g, CVec::Zero(rep.N));
  return psi;
}

MetricPath make_metric_path(grid::MetricField g, grid::MetricField h, int samples) {
  check_same_grid(g.grid(), h.grid(), "metric path");
  if (!(g.sig == h.sig)) throw NumericalError("metric path endpoints differ in signature");
  if (samples < 2) throw ShapeError("metric path needs at least two samples");
  for (long p = 0; p < g.val.points(); ++p)
    if (!metric::joinable(g.val.v[p], h.val.v[p]))
      throw NumericalError("metric path not joinable at every grid point");
  return MetricPath{std::move(g), std::move(h), samples};
}

grid::MatrixField frame_field(const grid::MetricField& g) {
  const int m = g.grid().dim();
  const Mat eta = grid::flat_form(g.sig.pos, g.sig.neg);
  grid::MatrixField E(g.grid(), Mat::Identity(m, m));
  for (long p = 0; p < E.points(); ++p) E.v[p] = metric::comparison_b(eta, g.val.v[p]);
  return E;
}

grid::MatrixField spin_connection(const grid::MetricField& g, const grid::MatrixField& frame,
                                  double* raw_skew) {
  const int m = g.grid().dim();
  grid::MatrixField Gam = grid::christoffels(g);
  std::vector<grid::MatrixField> dE;
  dE.reserve(m);
  for (int a = 0; a < m; ++a) dE.push_back(grid::partial_derivative(frame, a));
  grid::MatrixField W(g.grid(), Mat::Zero(m, m * m));
  double skew = 0.0;
  for (long p = 0; p < W.points(); ++p) {
    const Mat& E = frame.v[p];
    const Mat& G = g.val.v[p];
    for (int a = 0; a < m; ++a) {
      Mat Ga = christoffel_block(Gam.v[p], a, m);
      Mat cov = dE[a].v[p] + Ga * E;      // columns: nabla_a e_i
      Mat w = cov.transpose() * G * E;    // w(i, j) = g(nabla_a e_i, e_j)
      Mat asym = 0.5 * (w - Mat(w.transpose()));
      skew = std::max(skew, 0.5 * (w + Mat(w.transpose())).cwiseAbs().maxCoeff());
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) W.v[p](a, i * m + j) = asym(i, j);
    }
  }
  if (raw_skew) *raw_skew = skew;
  return W;
}

DiracGeometry make_geometry(const grid::MetricField& g) {
  DiracGeometry geom;
  geom.g = g;
  geom.rep = clifford::build_rep(g.sig.pos, g.sig.neg);
  geom.frame = frame_field(g);
  const int m = geom.rep.m;
  const Mat eta = grid::flat_form(g.sig.pos, g.sig.neg);
  geom.frame_inv = geom.frame;
  for (long p = 0; p < geom.frame.points(); ++p)
    geom.frame_inv.v[p] = eta * geom.frame.v[p].transpose() * g.val.v[p];
  geom.conn = spin_connection(g, geom.frame);
  geom.gamma_prod.resize(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      geom.gamma_prod[i * m + j] = geom.rep.gamma[i] * geom.rep.gamma[j];
  geom.conn_mat.assign(static_cast<size_t>(g.val.points()) * m, CMat());
  for (long p = 0; p < g.val.points(); ++p)
    for (int a = 0; a < m; ++a) {
      CMat C = CMat::Zero(geom.rep.N, geom.rep.N);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double w = geom.conn.v[p](a, i * m + j);
          if (w != 0.0)
            C += 0.25 * geom.rep.eps[i] * geom.rep.eps[j] * w * geom.gamma_prod[i * m + j];
        }
      geom.conn_mat[static_cast<size_t>(p) * m + a] = C;
    }
  return geom;
}

SpinorField covariant_derivative_coord(const DiracGeometry& geom, const SpinorField& psi,
                                       int axis, const U1Potential* pot) {
  check_compatible(geom, psi);
  if (pot) check_same_grid(pot->A.grid, psi.grid(), "potential");
  SpinorField out = psi;
  out.data = grid::partial_derivative_twisted(psi.data, axis, psi.twist.delta);
  const int m = geom.rep.m;
  for (long p = 0; p < out.data.points(); ++p) {
    out[p] += geom.conn_mat[static_cast<size_t>(p) * m + axis] * psi[p];
    if (pot) out[p] += complexd(0.0, pot->q * pot->A.v[p][axis]) * psi[p];
  }
  return out;
}

SpinorField covariant_derivative(const DiracGeometry& geom, const SpinorField& psi,
                                 const grid::VectorField& X, const U1Potential* pot) {
  check_same_grid(X.grid, psi.grid(), "direction");
  const int m = geom.rep.m;
  std::vector<SpinorField> na;
  na.reserve(m);
  for (int a = 0; a < m; ++a) na.push_back(covariant_derivative_coord(geom, psi, a, pot));
  SpinorField out = make_spinor(psi.grid(), psi.rep, psi.twist);
  for (long p = 0; p < out.data.points(); ++p) {
    CVec acc = CVec::Zero(psi.rep.N);
    for (int a = 0; a < m; ++a) acc += X.v[p][a] * na[a][p];
    out[p] = acc;
  }
  return out;
}

SpinorField dirac(const DiracGeometry& geom, const SpinorField& psi, const U1Potential* pot) {
  check_compatible(geom, psi);
  const int m = geom.rep.m;
  std::vector<SpinorField> na;
  na.reserve(m);
  for (int a = 0; a < m; ++a) na.push_back(covariant_derivative_coord(geom, psi, a, pot));
  SpinorField out = make_spinor(psi.grid(), psi.rep, psi.twist);
  for (long p = 0; p < out.data.points(); ++p) {
    const Mat& E = geom.frame.v[p];
    CVec acc = CVec::Zero(psi.rep.N);
    for (int i = 0; i < m; ++i) {
      CVec vi = CVec::Zero(psi.rep.N);
      for (int a = 0; a < m; ++a) vi += E(a, i) * na[a][p];
      acc += geom.rep.eps[i] * (geom.rep.gamma[i] * vi);
    }
    out[p] = acc;
  }
  return out;
}

SpinorField dirac_potential(const DiracGeometry& geom, const U1Potential& pot,
                            const SpinorField& psi) {
  return dirac(geom, psi, &pot);
}

UniversalSection universal_dirac(const UniversalSection& Phi) {
  DiracGeometry geom = make_geometry(Phi.metric);
  return UniversalSection{Phi.metric, dirac(geom, Phi.spinor)};
}

SpinorField clifford_mult(const DiracGeometry& geom, const grid::VectorField& X,
                          const SpinorField& psi) {
  check_compatible(geom, psi);
  check_same_grid(X.grid, psi.grid(), "clifford_mult");
  const int m = geom.rep.m;
  SpinorField out = make_spinor(psi.grid(), psi.rep, psi.twist);
  for (long p = 0; p < out.data.points(); ++p) {
    Vec c = geom.frame_inv.v[p] * X.v[p];  // frame components
    CVec acc = CVec::Zero(psi.rep.N);
    for (int i = 0; i < m; ++i) acc += c[i] * (geom.rep.gamma[i] * psi[p]);
    out[p] = acc;
  }
  return out;
}

SpinorField beta_transport(const MetricPath& path, const SpinorField& psi) {
  check_same_grid(path.g.grid(), psi.grid(), "beta transport");
  if (psi.rep.r != path.g.sig.pos || psi.rep.s != path.g.sig.neg)
    throw ShapeError("spinor representation does not match the path signature");
  const Mat eta = grid::flat_form(path.g.sig.pos, path.g.sig.neg);
  SpinorField out = psi;
  for (long p = 0; p < psi.data.points(); ++p) {
    const Mat& G = path.g.val.v[p];
    const Mat& H = path.h.val.v[p];
    if ((H - G).cwiseAbs().maxCoeff() == 0.0) continue;  // identity transport
    auto O_of_t = [&](double t) {
      return metric::identification_rotation(eta, G, Mat((1.0 - t) * G + t * H));
    };
    CMat L = clifford::spin_lift_path(psi.rep, O_of_t, std::max(8, path.samples - 1));
    out[p] = L * psi[p];
  }
  return out;
}

SpinorField dirac_pullback(const grid::MetricField& g, const grid::MetricField& h,
                           const SpinorField& psi) {
  check_same_grid(g.grid(), h.grid(), "dirac_pullback");
  if (!(g.sig == h.sig)) throw NumericalError("metrics differ in signature");
  DiracGeometry geom = make_geometry(g);
  check_compatible(geom, psi);
  const int m = geom.rep.m;
  const int N = geom.rep.N;

  grid::MatrixField Bf(g.grid(), Mat::Identity(m, m));
  for (long p = 0; p < Bf.points(); ++p)
    Bf.v[p] = metric::comparison_b(g.val.v[p], h.val.v[p]);
  grid::MatrixField Ff(g.grid(), Mat::Identity(m, m));
  for (long p = 0; p < Ff.points(); ++p) Ff.v[p] = Bf.v[p] * geom.frame.v[p];

  grid::MatrixField Gamg = grid::christoffels(g);
  grid::MatrixField Gamh = grid::christoffels(h);
  std::vector<grid::MatrixField> dE, dF;
  for (int a = 0; a < m; ++a) {
    dE.push_back(grid::partial_derivative(geom.frame, a));
    dF.push_back(grid::partial_derivative(Ff, a));
  }
  std::vector<SpinorField> na;
  for (int a = 0; a < m; ++a) na.push_back(covariant_derivative_coord(geom, psi, a));

  SpinorField out = make_spinor(psi.grid(), psi.rep, psi.twist);
  for (long p = 0; p < out.data.points(); ++p) {
    const Mat& E = geom.frame.v[p];
    const Mat& B = Bf.v[p];
    const Mat Binv = B.inverse();
    std::vector<Mat> Gha(m), Gga(m);
    for (int a = 0; a < m; ++a) {
      Gha[a] = christoffel_block(Gamh.v[p], a, m);
      Gga[a] = christoffel_block(Gamg.v[p], a, m);
    }
    CVec acc = CVec::Zero(N);
    for (int i = 0; i < m; ++i) {
      Vec Xi = B * E.col(i);
      CVec nXi = CVec::Zero(N);
      for (int a = 0; a < m; ++a) nXi += Xi[a] * na[a][p];
      acc += geom.rep.eps[i] * (geom.rep.gamma[i] * nXi);
      for (int j = 0; j < m; ++j) {
        Vec covh = Vec::Zero(m), covg = Vec::Zero(m);
        for (int a = 0; a < m; ++a) {
          covh += Xi[a] * (dF[a].v[p].col(j) + Gha[a] * Ff.v[p].col(j));
          covg += Xi[a] * (dE[a].v[p].col(j) + Gga[a] * E.col(j));
        }
        Vec theta = Binv * covh - covg;
        Vec c = geom.frame_inv.v[p] * theta;
        CMat M = CMat::Zero(N, N);
        for (int k = 0; k < m; ++k) M += c[k] * geom.rep.gamma[k];
        acc += 0.25 * geom.rep.eps[i] * geom.rep.eps[j] *
               (geom.gamma_prod[i * m + j] * (M * psi[p]));
      }
    }
    out[p] = acc;
  }
  return out;
}

SpinorField vertical_derivative(const MetricPath& path,
                                const std::function<SpinorField(double)>& psi_t, double t,
                                double eps) {
  if (eps <= 0.0) throw ShapeError("vertical derivative step must be positive");
  auto interp = [&](double s) {
    grid::MatrixField vals = path.g.val;
    for (long p = 0; p < vals.points(); ++p)
      vals.v[p] = (1.0 - s) * path.g.val.v[p] + s * path.h.val.v[p];
    return grid::make_metric(vals);
  };
  grid::MetricField gt = interp(t);
  auto pulled = [&](double s) {
    MetricPath seg{interp(s), gt, path.samples};
    return beta_transport(seg, psi_t(s));
  };
  auto central = [&](double e) {
    SpinorField plus = pulled(t + e);
    SpinorField minus = pulled(t - e);
    add_scaled(plus, minus, complexd(-1.0, 0.0));
    for (auto& v : plus.data.v) v /= 2.0 * e;
    return plus;
  };
  SpinorField d1 = central(eps);
  SpinorField d2 = central(2.0 * eps);
  for (auto& v : d1.data.v) v *= 4.0 / 3.0;
  add_scaled(d1, d2, complexd(-1.0 / 3.0, 0.0));
  return d1;
}

std::vector<double> dirac_spectrum(const grid::MetricField& g, const SpinStructureTwist& twist,
                                   int count, double* asymmetry) {
  if (g.sig.neg != 0) throw ShapeError("spectrum requires a Riemannian signature");
  const grid::TorusGrid& gr = g.grid();
  const int m = gr.dim();
  const int N = 1 << (m / 2);
  const long dim = g.val.points() * N;
  if (dim > 65536) throw ShapeError("operator matrix dimension exceeds 2^16");

  // The matrix is assembled on the resolved Fourier band |k| <= n/4 per axis
  // (momenta k in Z + twist).  Beyond that band the symbol of the 4th-order
  // stencil, (8 sin(kh) - sin(2kh)) / (6h), stops being injective and falls
  // back to zero at the grid Nyquist frequency, so unresolved high modes fold
  // onto spurious small eigenvalues and would contaminate smallest-magnitude
  // selection.  On the band the symbol is strictly monotone and the low-lying
  // spectrum converges at the stencil's 4th order.
  std::vector<std::vector<double>> band(m);
  for (int d = 0; d < m; ++d) {
    const long n = gr.sizes()[d];
    const double delta = twist.delta[d];
    for (long j = -n; j <= n; ++j) {
      double k = static_cast<double>(j) + delta;
      if (std::abs(k) <= static_cast<double>(n) / 4.0) band[d].push_back(k);
    }
  }
  long dimS = N;
  for (int d = 0; d < m; ++d) dimS *= static_cast<long>(band[d].size());
  if (count < 1 || count > dimS) throw ShapeError("eigenvalue count exceeds resolved band dimension");

  DiracGeometry geom = make_geometry(g);
  const long P = g.val.points();
  Vec w(P);
  for (long p = 0; p < P; ++p)
    w[p] = std::pow(std::abs(g.val.v[p].determinant()), 0.25);
  const double rt = 1.0 / std::sqrt(static_cast<double>(P));

  // Column b of the matrix: apply the weighted operator to the band plane
  // wave, then resolve the result on the band by axis-wise discrete Fourier
  // contractions (exact on the band: distinct band momenta stay orthogonal
  // under the grid sum).
  CMat M = CMat::Zero(dimS, dimS);
  SpinorField work = make_spinor(gr, geom.rep, twist);
  std::vector<long> bidx(m, 0);
  std::vector<complexd> buf, nxt;
  for (long b = 0; b < dimS; ++b) {
    long rem = b / N;
    const int c0 = static_cast<int>(b % N);
    for (int d = m - 1; d >= 0; --d) {
      bidx[d] = rem % static_cast<long>(band[d].size());
      rem /= static_cast<long>(band[d].size());
    }
    for (long p = 0; p < P; ++p) {
      Vec x = gr.coords(p);
      double phase = 0.0;
      for (int d = 0; d < m; ++d) phase += band[d][bidx[d]] * x[d];
      work[p] = CVec::Zero(N);
      work[p](c0) = rt * std::exp(complexd(0.0, phase)) / w[p];
    }
    SpinorField col = dirac(geom, work);

    buf.resize(static_cast<size_t>(P) * N);
    for (long p = 0; p < P; ++p)
      for (int c = 0; c < N; ++c) buf[p * N + c] = w[p] * col[p](c);
    // shape [n_1, ..., n_m, N]; contract each grid axis against its band.
    std::vector<long> shape(gr.sizes().begin(), gr.sizes().end());
    shape.push_back(N);
    for (int d = 0; d < m; ++d) {
      const long n = gr.sizes()[d];
      const long B = static_cast<long>(band[d].size());
      const double h = gr.spacing()[d];
      long outer = 1, inner = 1;
      for (int t = 0; t < d; ++t) outer *= shape[t];
      for (size_t t = d + 1; t < shape.size(); ++t) inner *= shape[t];
      nxt.assign(static_cast<size_t>(outer) * B * inner, complexd(0.0, 0.0));
      for (long o = 0; o < outer; ++o)
        for (long j = 0; j < n; ++j) {
          const complexd* src = buf.data() + (o * n + j) * inner;
          for (long kb = 0; kb < B; ++kb) {
            complexd f = std::exp(complexd(0.0, -band[d][kb] * h * static_cast<double>(j)));
            complexd* dst = nxt.data() + (o * B + kb) * inner;
            for (long i = 0; i < inner; ++i) dst[i] += f * src[i];
          }
        }
      buf.swap(nxt);
      shape[d] = B;
    }
    for (long r = 0; r < dimS; ++r) M(r, b) = rt * buf[r];
  }

  double asym = (M - M.adjoint()).cwiseAbs().maxCoeff();
  if (asymmetry) *asymmetry = asym;
  CMat S = 0.5 * (M + CMat(M.adjoint()));
  Eigen::SelfAdjointEigenSolver<CMat> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  Vec evs = es.eigenvalues();
  std::vector<double> all(evs.data(), evs.data() + evs.size());
  std::sort(all.begin(), all.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

grid::GridField<complexd> spinor_inner_field(const SpinorField& psi, const SpinorField& phi) {
  check_same_grid(psi.grid(), phi.grid(), "spinor_inner_field");
  grid::GridField<complexd> out(psi.grid(), complexd(0.0, 0.0));
  for (long p = 0; p < out.points(); ++p)
    out.v[p] = clifford::spinor_inner(psi.rep, psi[p], phi[p]);
  return out;
}

double sup_norm(const SpinorField& psi) {
  double m = 0.0;
  for (const auto& v : psi.data.v) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

double sup_distance(const SpinorField& a, const SpinorField& b) {
  check_same_grid(a.grid(), b.grid(), "sup_distance");
  double m = 0.0;
  for (long p = 0; p < a.data.points(); ++p)
    m = std::max(m, (a[p] - b[p]).cwiseAbs().maxCoeff());
  return m;
}

void add_scaled(SpinorField& a, const SpinorField& b, complexd c) {
  check_same_grid(a.grid(), b.grid(), "add_scaled");
  for (long p = 0; p < a.data.points(); ++p) a[p] += c * b[p];
}

}  // namespace spinlab::spinor

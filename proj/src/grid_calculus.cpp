#include "spinlab/grid_calculus.hpp"

#include <cmath>

namespace spinlab::grid {

TorusGrid::TorusGrid(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  const int m = static_cast<int>(sizes_.size());
  if (m < 1 || m > 4) throw ShapeError("grid dimension must be between 1 and 4");
  for (int n : sizes_) {
    if (n < 8 || n % 2 != 0) throw ShapeError("grid sizes must be even and at least 8");
  }
  h_.resize(m);
  stride_.assign(m, 1);
  // row-major: first index slowest
  npts_ = 1;
  for (int d = m - 1; d >= 0; --d) {
    h_[d] = 2.0 * kPi / sizes_[d];
    stride_[d] = npts_;
    npts_ *= sizes_[d];
  }
}

long TorusGrid::flat(const std::vector<int>& idx) const {
  long p = 0;
  for (int d = 0; d < dim(); ++d) p += stride_[d] * idx[d];
  return p;
}

void TorusGrid::unflat(long p, std::vector<int>& idx) const {
  idx.resize(dim());
  for (int d = 0; d < dim(); ++d) {
    idx[d] = static_cast<int>(p / stride_[d]);
    p %= stride_[d];
  }
}

long TorusGrid::neighbor(long p, int axis, int off, int* winding) const {
  const int n = sizes_[axis];
  const int i = static_cast<int>((p / stride_[axis]) % n);
  int j = i + off;
  int w = 0;
  while (j < 0) {
    j += n;
    --w;
  }
  while (j >= n) {
    j -= n;
    ++w;
  }
  if (winding) *winding = w;
  return p + static_cast<long>(j - i) * stride_[axis];
}

Vec TorusGrid::coords(long p) const {
  Vec x(dim());
  for (int d = 0; d < dim(); ++d) {
    const int i = static_cast<int>((p / stride_[d]) % sizes_[d]);
    x[d] = i * h_[d];
  }
  return x;
}

SpinorData partial_derivative_twisted(const SpinorData& f, int axis,
                                      const std::vector<double>& twist) {
  detail::check_axis(f.grid, axis);
  if (static_cast<int>(twist.size()) != f.grid.dim())
    throw ShapeError("twist vector rank mismatch");
  const double c = 1.0 / (12.0 * f.grid.spacing()[axis]);
  const double delta = twist[axis];
  SpinorData out = f;
  auto phased = [&](long p, int off) -> CVec {
    int w = 0;
    long q = f.grid.neighbor(p, axis, off, &w);
    if (w == 0 || delta == 0.0) return f.v[q];
    return std::exp(complexd(0.0, 2.0 * kPi * delta * w)) * f.v[q];
  };
  for (long p = 0; p < f.points(); ++p) {
    out.v[p] = c * (8.0 * (phased(p, +1) - phased(p, -1)) - (phased(p, +2) - phased(p, -2)));
  }
  return out;
}

SpinorData cyclic_shift_twisted(const SpinorData& f, const std::vector<int>& offsets,
                                const std::vector<double>& twist) {
  if (static_cast<int>(offsets.size()) != f.grid.dim() ||
      static_cast<int>(twist.size()) != f.grid.dim())
    throw ShapeError("cyclic_shift_twisted: rank mismatch");
  SpinorData out = f;
  std::vector<int> idx(f.grid.dim());
  for (long p = 0; p < f.points(); ++p) {
    f.grid.unflat(p, idx);
    double phase = 0.0;
    for (int d = 0; d < f.grid.dim(); ++d) {
      const int n = f.grid.sizes()[d];
      int j = idx[d] + offsets[d];
      int w = 0;
      while (j < 0) {
        j += n;
        --w;
      }
      while (j >= n) {
        j -= n;
        ++w;
      }
      idx[d] = j;
      phase += twist[d] * w;
    }
    out.v[f.grid.flat(idx)] = std::exp(complexd(0.0, 2.0 * kPi * phase)) * f.v[p];
  }
  return out;
}

MetricField make_metric(const MatrixField& values) {
  const int m = values.grid.dim();
  if (values.points() == 0) throw ShapeError("empty metric field");
  MetricField g;
  g.val = values;
  for (long p = 0; p < values.points(); ++p) {
    const Mat& M = values.v[p];
    if (M.rows() != m || M.cols() != m) throw ShapeError("metric blocks must match grid dimension");
    const double asym = (M - Mat(M.transpose())).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * (1.0 + M.cwiseAbs().maxCoeff()))
      throw ShapeError("metric blocks must be symmetric");
    g.val.v[p] = 0.5 * (M + Mat(M.transpose()));
    metric::Signature sp = metric::signature(g.val.v[p]);
    if (p == 0)
      g.sig = sp;
    else if (!(sp == g.sig))
      throw NumericalError("metric signature varies across the grid");
  }
  return g;
}

MetricField flat_metric(const TorusGrid& grid, int r, int s) {
  if (r + s != grid.dim()) throw ShapeError("signature must match grid dimension");
  MatrixField f(grid, flat_form(r, s));
  return make_metric(f);
}

Mat flat_form(int r, int s) {
  Mat eta = Mat::Zero(r + s, r + s);
  for (int i = 0; i < r + s; ++i) eta(i, i) = i < r ? 1.0 : -1.0;
  return eta;
}

Vec eps_vector(int r, int s) {
  Vec e(r + s);
  for (int i = 0; i < r + s; ++i) e[i] = i < r ? 1.0 : -1.0;
  return e;
}

void validate_joinable_to_flat(const MetricField& g) {
  const Mat eta = flat_form(g.sig.pos, g.sig.neg);
  for (long p = 0; p < g.val.points(); ++p) {
    if (!metric::joinable(eta, g.val.v[p]))
      throw NumericalError("metric block not joinable to the flat reference form");
  }
}

MatrixField inverse_metric(const MetricField& g) {
  MatrixField out = g.val;
  for (long p = 0; p < out.points(); ++p) out.v[p] = g.val.v[p].inverse();
  return out;
}

ScalarField sqrt_abs_det(const MetricField& g) {
  ScalarField out(g.grid(), 0.0);
  for (long p = 0; p < out.points(); ++p)
    out.v[p] = std::sqrt(std::abs(g.val.v[p].determinant()));
  return out;
}

MatrixField christoffels(const MetricField& g) {
  const int m = g.grid().dim();
  std::vector<MatrixField> dg;
  dg.reserve(m);
  for (int a = 0; a < m; ++a) dg.push_back(partial_derivative(g.val, a));
  MatrixField out(g.grid(), Mat::Zero(m, m * m));
  for (long p = 0; p < out.points(); ++p) {
    const Mat ginv = g.val.v[p].inverse();
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        Vec lower(m);
        for (int l = 0; l < m; ++l)
          lower[l] = 0.5 * (dg[i].v[p](j, l) + dg[j].v[p](i, l) - dg[l].v[p](i, j));
        Vec up = ginv * lower;
        for (int k = 0; k < m; ++k) {
          out.v[p](k, i * m + j) = up[k];
          out.v[p](k, j * m + i) = up[k];
        }
      }
  }
  return out;
}

Curvature curvature(const MetricField& g) {
  const int m = g.grid().dim();
  MatrixField Gam = christoffels(g);
  std::vector<MatrixField> dGam;
  dGam.reserve(m);
  for (int a = 0; a < m; ++a) dGam.push_back(partial_derivative(Gam, a));
  Curvature out{MatrixField(g.grid(), Mat::Zero(m, m)), ScalarField(g.grid(), 0.0)};
  auto G = [&](const Mat& P, int k, int i, int j) { return P(k, i * m + j); };
  for (long p = 0; p < g.val.points(); ++p) {
    Mat ric = Mat::Zero(m, m);
    const Mat& Gp = Gam.v[p];
    for (int s = 0; s < m; ++s)
      for (int n = 0; n < m; ++n) {
        double r = 0.0;
        for (int mu = 0; mu < m; ++mu) {
          r += G(dGam[mu].v[p], mu, n, s) - G(dGam[n].v[p], mu, mu, s);
          for (int lam = 0; lam < m; ++lam)
            r += G(Gp, mu, mu, lam) * G(Gp, lam, n, s) - G(Gp, mu, n, lam) * G(Gp, lam, mu, s);
        }
        ric(s, n) = r;
      }
    ric = 0.5 * (ric + Mat(ric.transpose()));
    out.ricci.v[p] = ric;
    out.scalar.v[p] = (g.val.v[p].inverse() * ric).trace();
  }
  return out;
}

MatrixField exterior_d(const VectorField& A) {
  const int m = A.grid.dim();
  std::vector<VectorField> dA;
  dA.reserve(m);
  for (int a = 0; a < m; ++a) dA.push_back(partial_derivative(A, a));
  MatrixField out(A.grid, Mat::Zero(m, m));
  for (long p = 0; p < out.points(); ++p)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out.v[p](i, j) = dA[i].v[p][j] - dA[j].v[p][i];
  return out;
}

VectorField codifferential(const MetricField& g, const MatrixField& F) {
  const int m = g.grid().dim();
  if (!(F.grid == g.grid())) throw ShapeError("codifferential: grid mismatch");
  // W^{ij} = sqrt|det g| g^{ik} g^{jl} F_kl; (dF*)_j = -g_jl (1/sqrt|det|) d_i W^{il}.
  // The sign is pinned by discrete adjointness with exterior_d (exact by
  // summation by parts); on the flat square torus F_12 = cos x1 maps to
  // (+sin x1) dx2.
  MatrixField W(g.grid(), Mat::Zero(m, m));
  ScalarField vol = sqrt_abs_det(g);
  for (long p = 0; p < W.points(); ++p) {
    const Mat ginv = g.val.v[p].inverse();
    W.v[p] = vol.v[p] * (ginv * F.v[p] * ginv.transpose());
  }
  std::vector<MatrixField> dW;
  dW.reserve(m);
  for (int a = 0; a < m; ++a) dW.push_back(partial_derivative(W, a));
  VectorField out(g.grid(), Vec::Zero(m));
  for (long p = 0; p < out.points(); ++p) {
    Vec div = Vec::Zero(m);
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < m; ++i) div[l] += dW[i].v[p](i, l);
    out.v[p] = -(g.val.v[p] * div) / vol.v[p];
  }
  return out;
}

double volume_integrate(const MetricField& g, const ScalarField& f) {
  if (!(f.grid == g.grid())) throw ShapeError("volume_integrate: grid mismatch");
  double cell = 1.0;
  for (double h : g.grid().spacing()) cell *= h;
  ScalarField vol = sqrt_abs_det(g);
  double acc = 0.0;
  for (long p = 0; p < f.points(); ++p) acc += f.v[p] * vol.v[p];
  return acc * cell;
}

ScalarField oneform_inner(const MetricField& g, const VectorField& a, const VectorField& b) {
  ScalarField out(g.grid(), 0.0);
  for (long p = 0; p < out.points(); ++p)
    out.v[p] = a.v[p].dot(g.val.v[p].inverse() * b.v[p]);
  return out;
}

ScalarField tensor2_inner(const MetricField& g, const MatrixField& S, const MatrixField& T) {
  ScalarField out(g.grid(), 0.0);
  for (long p = 0; p < out.points(); ++p) {
    const Mat ginv = g.val.v[p].inverse();
    out.v[p] = (ginv * S.v[p] * ginv.transpose() * Mat(T.v[p].transpose())).trace();
  }
  return out;
}

VectorField sharp(const MetricField& g, const VectorField& a) {
  VectorField out = a;
  for (long p = 0; p < out.points(); ++p) out.v[p] = g.val.v[p].inverse() * a.v[p];
  return out;
}

}  // namespace spinlab::grid

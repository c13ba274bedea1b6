#include "spinlab/pointwise_metric.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace spinlab::metric {

namespace {

constexpr double kDegenerateFloor = 1e-10;

void require_symmetric(const Mat& G, const char* who) {
  if (G.rows() != G.cols()) throw ShapeError(std::string(who) + ": matrix not square");
  if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + G.cwiseAbs().maxCoeff()))
    throw ShapeError(std::string(who) + ": matrix not symmetric");
}

// Eigendecomposition sorted descending with deterministic eigenvector signs.
void sorted_sym_eig(const Mat& G, Vec& lam, Mat& Q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  const int n = static_cast<int>(G.rows());
  lam.resize(n);
  Q.resize(n, n);
  for (int i = 0; i < n; ++i) {  // Eigen sorts ascending; flip.
    lam[i] = es.eigenvalues()[n - 1 - i];
    Q.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (std::abs(Q(k, i)) > 1e-12) {
        if (Q(k, i) < 0) Q.col(i) = -Q.col(i);
        break;
      }
    }
  }
}

bool positive_real_spectrum(const Mat& M, double floor_rel) {
  Eigen::EigenSolver<Mat> es(M);
  if (es.info() != Eigen::Success) return false;
  double scale = M.cwiseAbs().maxCoeff();
  for (int i = 0; i < M.rows(); ++i) {
    complexd ev = es.eigenvalues()[i];
    if (std::abs(ev.imag()) > 1e-9 * (1.0 + std::abs(ev)))
      return false;
    if (ev.real() < floor_rel * (1.0 + scale)) return false;
  }
  return true;
}

}  // namespace

Signature signature(const Mat& G) {
  require_symmetric(G, "signature");
  Vec lam;
  Mat Q;
  sorted_sym_eig(G, lam, Q);
  double scale = lam.cwiseAbs().maxCoeff();
  Signature sig;
  for (int i = 0; i < lam.size(); ++i) {
    if (std::abs(lam[i]) < kDegenerateFloor * scale || scale == 0.0)
      throw NumericalError("signature: form is degenerate");
    (lam[i] > 0 ? sig.pos : sig.neg)++;
  }
  return sig;
}

Mat pseudo_onb(const Mat& G) {
  signature(G);  // rejects degenerate input
  Vec lam;
  Mat Q;
  sorted_sym_eig(G, lam, Q);
  Mat E = Q;
  for (int i = 0; i < lam.size(); ++i) E.col(i) /= std::sqrt(std::abs(lam[i]));
  if (E.determinant() < 0) E.col(E.cols() - 1) *= -1.0;
  return E;
}

Mat comparison_a(const Mat& G, const Mat& H) {
  require_symmetric(G, "comparison_a");
  require_symmetric(H, "comparison_a");
  if (G.rows() != H.rows()) throw ShapeError("comparison_a: size mismatch");
  signature(G);
  signature(H);
  return G.partialPivLu().solve(H);
}

Mat comparison_b(const Mat& G, const Mat& H) {
  Signature sg = signature(G);
  Mat A = comparison_a(G, H);
  if (!positive_real_spectrum(A, kDegenerateFloor))
    throw NumericalError("comparison_b: a_{g,h} does not have positive spectrum (pair not joinable here)");
  if (sg.neg == 0 || sg.pos == 0) {
    // definite g: conjugate to an honest symmetric problem
    Mat P = (sg.neg == 0) ? G : Mat(-G);
    Mat Hp = (sg.neg == 0) ? H : Mat(-H);
    Vec lamP;
    Mat QP;
    sorted_sym_eig(P, lamP, QP);
    for (int i = 0; i < lamP.size(); ++i)
      if (lamP[i] <= 0.0) throw NumericalError("comparison_b: definite branch got sign flip");
    Mat Ph = QP * lamP.cwiseSqrt().asDiagonal() * QP.transpose();             // P^{1/2}
    Mat Pih = QP * lamP.cwiseSqrt().cwiseInverse().asDiagonal() * QP.transpose();  // P^{-1/2}
    Mat W = Pih * Hp * Pih;  // symmetric, positive definite when joinable
    Vec lam;
    Mat Q;
    sorted_sym_eig(W, lam, Q);
    Vec d(lam.size());
    for (int i = 0; i < lam.size(); ++i) {
      if (lam[i] <= 0.0) throw NumericalError("comparison_b: operator not positive");
      d[i] = 1.0 / std::sqrt(lam[i]);
    }
    Mat Wih = Q * d.asDiagonal() * Q.transpose();  // W^{-1/2}
    return Pih * Wih * Ph;
  }
  // indefinite g: principal square root through the real Schur form
  Mat Ainv = A.inverse();
  return Ainv.sqrt();
}

bool joinable(const Mat& G, const Mat& H, int samples) {
  if (samples < 2) samples = 2;
  Signature sg;
  try {
    sg = signature(G);
    if (signature(H) != sg) return false;
  } catch (const NumericalError&) {
    return false;
  }
  for (int k = 0; k < samples; ++k) {
    double t = 0.5 * (1.0 - std::cos(kPi * k / (samples - 1)));  // Chebyshev-Lobatto
    Mat Gt = (1.0 - t) * G + t * H;
    try {
      if (signature(Gt) != sg) return false;
      Mat A = G.partialPivLu().solve(Gt);
      if (!positive_real_spectrum(A, kDegenerateFloor)) return false;
    } catch (const NumericalError&) {
      return false;
    }
  }
  return true;
}

Mat identification_rotation(const Mat& Eta, const Mat& G, const Mat& H) {
  Mat O = comparison_b(Eta, H).inverse() * comparison_b(G, H) * comparison_b(Eta, G);
  Mat gram = O.transpose() * Eta * O;
  double scale = 1.0 + Eta.cwiseAbs().maxCoeff();
  if ((gram - Eta).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw NumericalError("identification_rotation: result not eta-orthogonal");
  if (O.determinant() < 0)
    throw NumericalError("identification_rotation: orientation flipped");
  return O;
}

std::pair<Mat, Mat> sym_asym_project(const Mat& M, int r, int s) {
  const int m = r + s;
  if (M.rows() != m || M.cols() != m) throw ShapeError("sym_asym_project: size mismatch");
  Vec eps(m);
  for (int i = 0; i < m; ++i) eps[i] = (i < r) ? 1.0 : -1.0;
  Mat Mdag(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) Mdag(i, j) = eps[i] * eps[j] * M(j, i);
  return {0.5 * (M + Mdag), 0.5 * (M - Mdag)};
}

Mat horizontal_frame_transport(const Mat& G, const Mat& H, int steps) {
  Signature sg = signature(G);
  const int m = static_cast<int>(G.rows());
  Vec eps(m);
  for (int i = 0; i < m; ++i) eps[i] = (i < sg.pos) ? 1.0 : -1.0;
  Mat dG = H - G;
  auto vel = [&](const Mat& b) -> Mat {
    Mat Gp = b.transpose() * dG * b;
    return b * (-0.5 * (eps.asDiagonal() * Gp));
  };
  Mat b = pseudo_onb(G);
  double dt = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    Mat k1 = vel(b);
    Mat k2 = vel(b + 0.5 * dt * k1);
    Mat k3 = vel(b + 0.5 * dt * k2);
    Mat k4 = vel(b + dt * k3);
    b += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return b;
}

}  // namespace spinlab::metric

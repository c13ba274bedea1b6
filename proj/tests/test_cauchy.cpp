#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "spinlab/cauchy.hpp"
#include "spinlab/clifford.hpp"

using namespace spinlab;
using namespace spinlab::grid;
using namespace spinlab::spinor;
using namespace spinlab::cauchy;

namespace {

MatrixField flat_background(const TorusGrid& g) {
  Mat m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return MatrixField(g, m);
}

MatrixField wavy_background(const TorusGrid& g) {
  MatrixField b(g, Mat::Zero(2, 2));
  for (long i = 0; i < g.points(); ++i) {
    double x = g.coords(i)[0];
    b.v[i](0, 0) = 1.0 + 0.3 * std::cos(x);
    b.v[i](1, 1) = -(1.0 + 0.2 * std::sin(x));
  }
  return b;
}

SpinorField plane_wave(const TorusGrid& g, const clifford::GammaRep& rep, double k,
                       const SpinStructureTwist& tw, const CVec& v) {
  SpinorField psi = make_spinor(g, rep, tw);
  for (long i = 0; i < g.points(); ++i)
    psi[i] = std::exp(complexd(0.0, k * g.coords(i)[0])) * v;
  return psi;
}

double stencil_symbol(double k, double h) {
  return (8.0 * std::sin(k * h) - std::sin(2.0 * k * h)) / (6.0 * h);
}

}  // namespace

TEST_CASE("evolution validation and trivial data") {
  TorusGrid g({64});
  auto rep = clifford::build_rep(1, 1);
  auto tw = make_twist({0.0});
  SpinorField zero = make_spinor(g, rep, tw);

  EvolutionConfig cfg{flat_background(g), 0.5, 10, 1, 0.0};
  EvolutionResult r = evolve_dirac(cfg, zero);
  CHECK(r.times.size() == 11);
  CHECK(r.charge.size() == 11);
  for (double c : r.charge) CHECK(c == 0.0);
  for (const auto& s : r.states) CHECK(sup_norm(s) == 0.0);

  EvolutionConfig bad = cfg;
  bad.cfl = 0.95;
  CHECK_THROWS_AS(evolve_dirac(bad, zero), ShapeError);
  bad = cfg;
  bad.cfl = 0.0;
  CHECK_THROWS_AS(evolve_dirac(bad, zero), ShapeError);
  bad = cfg;
  for (long i = 0; i < g.points(); ++i) bad.background.v[i](0, 1) = 0.1;
  CHECK_THROWS_AS(evolve_dirac(bad, zero), ShapeError);
  bad = cfg;
  for (long i = 0; i < g.points(); ++i) bad.background.v[i](1, 1) = 0.5;  // not hyperbolic
  CHECK_THROWS_AS(evolve_dirac(bad, zero), ShapeError);
  SpinorField wrong = make_spinor(g, clifford::build_rep(1, 0), tw);
  CHECK_THROWS_AS(evolve_dirac(cfg, wrong), ShapeError);

  SpinorField nan_data = zero;
  nan_data[3](0) = complexd(std::nan(""), 0.0);
  CHECK_THROWS_AS(evolve_dirac(cfg, nan_data), NumericalError);
}

TEST_CASE("plane wave oracle on the flat cylinder") {
  TorusGrid g({256});
  auto rep = clifford::build_rep(1, 1);
  auto tw = make_twist({0.0});
  CMat alpha = rep.gamma[1] * rep.gamma[0];

  // right-mover: alpha v = +v
  Eigen::ComplexEigenSolver<CMat> es(alpha);
  CVec v = CVec::Zero(2);
  double sigma = 0.0;
  for (int i = 0; i < 2; ++i)
    if (std::abs(es.eigenvalues()[i] - 1.0) < 1e-12) {
      v = es.eigenvectors().col(i);
      sigma = 1.0;
    }
  REQUIRE(sigma == 1.0);

  const double k = 1.0;
  SpinorField psi0 = plane_wave(g, rep, k, tw, v);
  EvolutionConfig cfg{flat_background(g), 0.5, 512, 128, 0.0};
  EvolutionResult r = evolve_dirac(cfg, psi0);
  CHECK(r.states.size() == 5);  // t = 0, pi/2, pi, 3pi/2, 2pi

  for (size_t s = 0; s < r.states.size(); ++s) {
    double t = r.sample_times[s];
    double err = 0.0;
    for (long i = 0; i < g.points(); ++i) {
      CVec want = std::exp(complexd(0.0, k * (g.coords(i)[0] - sigma * t))) * v;
      err = std::max(err, (r.states[s][i] - want).cwiseAbs().maxCoeff());
    }
    CHECK(err <= 1e-6);
  }

  // charge drift over 10 periods
  EvolutionConfig longrun{flat_background(g), 0.5, 5120, 5120, 0.0};
  EvolutionResult rl = evolve_dirac(longrun, psi0);
  REQUIRE(std::abs(rl.charge[0]) > 0.1);
  double drift = 0.0;
  for (double c : rl.charge) drift = std::max(drift, std::abs(c - rl.charge[0]));
  CHECK(drift / std::abs(rl.charge[0]) <= 1e-6);
}

TEST_CASE("twisted plane wave with half-integer momentum") {
  TorusGrid g({128});
  auto rep = clifford::build_rep(1, 1);
  auto tw = make_twist({0.5});
  CMat alpha = rep.gamma[1] * rep.gamma[0];
  Eigen::ComplexEigenSolver<CMat> es(alpha);
  CVec v = CVec::Zero(2);
  for (int i = 0; i < 2; ++i)
    if (std::abs(es.eigenvalues()[i] - 1.0) < 1e-12) v = es.eigenvectors().col(i);

  const double k = 0.5;
  SpinorField psi0 = plane_wave(g, rep, k, tw, v);
  EvolutionConfig cfg{flat_background(g), 0.4, 320, 320, 0.0};
  EvolutionResult r = evolve_dirac(cfg, psi0);
  double t = r.sample_times.back();
  CHECK(std::abs(t - 2.0 * kPi) <= 1e-12);
  double err = 0.0;
  for (long i = 0; i < g.points(); ++i) {
    CVec want = std::exp(complexd(0.0, k * (g.coords(i)[0] - t))) * v;
    err = std::max(err, (r.states.back()[i] - want).cwiseAbs().maxCoeff());
  }
  CHECK(err <= 1e-6);
}

TEST_CASE("charge conservation on a curved static background") {
  TorusGrid g({128});
  auto rep = clifford::build_rep(1, 1);
  auto tw = make_twist({0.0});
  SpinorField psi0 = make_spinor(g, rep, tw);
  for (long i = 0; i < g.points(); ++i) {
    double x = g.coords(i)[0];
    psi0[i] = (CVec(2) << complexd(std::cos(x), 0.4 * std::sin(2.0 * x)),
               complexd(0.7, 0.2) * std::exp(complexd(0.0, x)))
                  .finished();
  }
  EvolutionConfig cfg{wavy_background(g), 0.4, 400, 400, 0.0};
  EvolutionResult r = evolve_dirac(cfg, psi0);
  REQUIRE(std::abs(r.charge[0]) > 0.1);
  double drift = 0.0;
  for (double c : r.charge) drift = std::max(drift, std::abs(c - r.charge[0]));
  MESSAGE("curved-background charge drift ", drift / std::abs(r.charge[0]));
  CHECK(drift / std::abs(r.charge[0]) <= 1e-5);
}

TEST_CASE("linearity and time-translation equivariance") {
  TorusGrid g({96});
  auto rep = clifford::build_rep(1, 1);
  auto tw = make_twist({0.0});
  SpinorField a = make_spinor(g, rep, tw), b = make_spinor(g, rep, tw);
  for (long i = 0; i < g.points(); ++i) {
    double x = g.coords(i)[0];
    a[i] = (CVec(2) << std::exp(complexd(0.0, 2.0 * x)), complexd(0.2, -0.3) * std::cos(x))
               .finished();
    b[i] = (CVec(2) << complexd(0.1, 0.5) * std::sin(x), std::exp(complexd(0.0, -x))).finished();
  }
  EvolutionConfig cfg{wavy_background(g), 0.5, 150, 150, 0.3};

  complexd ca(0.8, -0.3), cb(1.1, 0.2);
  SpinorField combo = a;
  for (long i = 0; i < g.points(); ++i) combo[i] = ca * a[i] + cb * b[i];
  SpinorField fa = evolve_dirac(cfg, a).states.back();
  SpinorField fb = evolve_dirac(cfg, b).states.back();
  SpinorField fc = evolve_dirac(cfg, combo).states.back();
  SpinorField lin = fa;
  for (long i = 0; i < g.points(); ++i) lin[i] = ca * fa[i] + cb * fb[i];
  CHECK(sup_distance(fc, lin) <= 1e-12);

  // flowing 150 steps equals flowing 90 then 60 (static background), bitwise
  EvolutionConfig first = cfg;
  first.steps = 90;
  EvolutionConfig second = cfg;
  second.steps = 60;
  SpinorField mid = evolve_dirac(first, a).states.back();
  SpinorField two = evolve_dirac(second, mid).states.back();
  CHECK(sup_distance(two, fa) == 0.0);
}

TEST_CASE("finite propagation speed") {
  TorusGrid g({256});
  auto rep = clifford::build_rep(1, 1);
  SpinorField psi0 = make_spinor(g, rep, make_twist({0.0}));
  psi0[100] = (CVec(2) << 1.0, complexd(0.0, 0.5)).finished();

  const long K = 5;
  EvolutionConfig cfg{flat_background(g), 0.5, K, K, 0.0};
  SpinorField fin = evolve_dirac(cfg, psi0).states.back();
  // four stencil applications per step, each widening support by 2 cells
  const long reach = 8 * K;
  for (long i = 0; i < g.points(); ++i) {
    long d = std::min(std::abs(i - 100), 256 - std::abs(i - 100));
    if (d > reach) CHECK(fin[i].cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("fourth-order time accuracy against the semi-discrete mode") {
  TorusGrid g({64});
  auto rep = clifford::build_rep(1, 1);
  auto tw = make_twist({0.0});
  CMat alpha = rep.gamma[1] * rep.gamma[0];
  Eigen::ComplexEigenSolver<CMat> es(alpha);
  CVec v = CVec::Zero(2);
  for (int i = 0; i < 2; ++i)
    if (std::abs(es.eigenvalues()[i] - 1.0) < 1e-12) v = es.eigenvectors().col(i);

  const double k = 3.0;
  const double h = 2.0 * kPi / 64.0;
  const double sk = stencil_symbol(k, h);
  SpinorField psi0 = plane_wave(g, rep, k, tw, v);

  auto run_err = [&](double cfl, long steps) {
    EvolutionConfig cfg{flat_background(g), cfl, steps, steps, 0.0};
    EvolutionResult r = evolve_dirac(cfg, psi0);
    double T = r.dt * static_cast<double>(steps);
    complexd phase = std::exp(complexd(0.0, -sk * T));
    double err = 0.0;
    for (long i = 0; i < g.points(); ++i) {
      CVec want = phase * psi0[i];
      err = std::max(err, (r.states.back()[i] - want).cwiseAbs().maxCoeff());
    }
    return err;
  };
  double e1 = run_err(0.5, 128);   // T = 2 pi
  double e2 = run_err(0.25, 256);  // same T, half the step
  MESSAGE("temporal errors ", e1, " ", e2, " ratio ", e1 / e2);
  CHECK(e1 / e2 >= 12.0);
  CHECK(e1 / e2 <= 21.0);
}

TEST_CASE("mass term against the matrix-exponential mode oracle") {
  TorusGrid g({64});
  auto rep = clifford::build_rep(1, 1);
  auto tw = make_twist({0.0});
  const double lambda = 0.7, k = 1.0;
  const double h = 2.0 * kPi / 64.0;
  const double sk = stencil_symbol(k, h);

  CVec v = (CVec(2) << complexd(0.6, 0.1), complexd(-0.3, 0.7)).finished();
  SpinorField psi0 = plane_wave(g, rep, k, tw, v);
  EvolutionConfig cfg{flat_background(g), 0.4, 160, 160, lambda};
  EvolutionResult r = evolve_dirac(cfg, psi0);
  double T = r.dt * 160.0;
  CHECK(std::abs(T - 2.0 * kPi) <= 1e-12);

  CMat alpha = rep.gamma[1] * rep.gamma[0];
  CMat M = complexd(0.0, -sk) * alpha + lambda * rep.gamma[1];
  CMat prop = (T * M).exp();
  double err = 0.0;
  for (long i = 0; i < g.points(); ++i) {
    CVec want = std::exp(complexd(0.0, k * g.coords(i)[0])) * (prop * v);
    err = std::max(err, (r.states.back()[i] - want).cwiseAbs().maxCoeff());
  }
  MESSAGE("massive mode error ", err);
  CHECK(err <= 2e-6);
}

#include "spinlab/cauchy.hpp"

#include <cmath>
#include <limits>

#include "spinlab/clifford.hpp"

namespace spinlab::cauchy {

using grid::ScalarField;
using grid::TorusGrid;
using spinor::SpinorField;

namespace {

struct Generator {
  const TorusGrid* g = nullptr;
  std::vector<double> speed;  // sqrt(q/p)
  std::vector<CMat> mass;     // sqrt(q) (lambda gamma_t + w gamma_x gamma_t)
  CMat alpha;                 // gamma_t gamma_x
  std::vector<double> twist;

  grid::SpinorData apply(const grid::SpinorData& psi) const {
    grid::SpinorData dx = grid::partial_derivative_twisted(psi, 0, twist);
    grid::SpinorData out(*g, CVec::Zero(psi.v[0].size()));
    for (long p = 0; p < g->points(); ++p)
      out.v[p] = -speed[p] * (alpha * dx.v[p]) + mass[p] * psi.v[p];
    return out;
  }
};

}  // namespace

EvolutionResult evolve_dirac(const EvolutionConfig& cfg, const SpinorField& psi0) {
  const TorusGrid& g = cfg.background.grid;
  if (g.dim() != 1) throw ShapeError("evolution runs on a one-dimensional spatial circle");
  if (!(g == psi0.grid())) throw ShapeError("initial data grid does not match background");
  if (psi0.rep.r != 1 || psi0.rep.s != 1)
    throw ShapeError("evolution requires the signature (1,1) representation");
  if (!(cfg.cfl > 0.0) || cfg.cfl > 0.9) throw ShapeError("cfl fraction must lie in (0, 0.9]");
  if (cfg.steps < 0) throw ShapeError("step count must be nonnegative");
  if (cfg.sample_stride < 1) throw ShapeError("sample stride must be positive");

  ScalarField p(g, 0.0), q(g, 0.0);
  for (long i = 0; i < g.points(); ++i) {
    const Mat& m = cfg.background.v[i];
    if (m.rows() != 2 || m.cols() != 2)
      throw ShapeError("background must be a 2x2 cylinder metric per spatial point");
    if (m(0, 1) != 0.0 || m(1, 0) != 0.0)
      throw ShapeError("coordinate slicing without shift requires block-diagonal backgrounds");
    if (!(m(0, 0) > 0.0) || !(m(1, 1) < 0.0))
      throw ShapeError("background must be globally hyperbolic: p > 0 and time-time < 0");
    p.v[i] = m(0, 0);
    q.v[i] = -m(1, 1);
  }

  const CMat& gx = psi0.rep.gamma[0];
  const CMat& gt = psi0.rep.gamma[1];

  Generator gen;
  gen.g = &g;
  gen.alpha = gt * gx;
  gen.twist = psi0.twist.delta;
  ScalarField dq = grid::partial_derivative(q, 0);
  gen.speed.resize(g.points());
  gen.mass.resize(g.points());
  double vmax = 0.0;
  for (long i = 0; i < g.points(); ++i) {
    gen.speed[i] = std::sqrt(q.v[i] / p.v[i]);
    vmax = std::max(vmax, gen.speed[i]);
    double w = dq.v[i] / (4.0 * q.v[i] * std::sqrt(p.v[i]));
    gen.mass[i] = std::sqrt(q.v[i]) * (cfg.lambda * gt + w * (gx * gt));
  }

  const double h = g.spacing()[0];
  EvolutionResult res;
  res.dt = cfg.cfl * h / vmax;

  auto record = [&](double t, const grid::SpinorData& s) {
    double qsum = 0.0;
    double supv = 0.0;
    for (long i = 0; i < g.points(); ++i) {
      qsum += std::real(clifford::spinor_inner(psi0.rep, gt * s.v[i], s.v[i])) *
              std::sqrt(p.v[i]);
      // maxCoeff ignores NaN entries, so flag them explicitly
      if (!s.v[i].allFinite()) supv = std::numeric_limits<double>::infinity();
      supv = std::max(supv, s.v[i].cwiseAbs().maxCoeff());
    }
    res.times.push_back(t);
    res.charge.push_back(qsum * h);
    res.sup.push_back(supv);
    return supv;
  };
  auto sample = [&](double t, const grid::SpinorData& s) {
    SpinorField f = psi0;
    f.data = s;
    res.sample_times.push_back(t);
    res.states.push_back(std::move(f));
  };

  grid::SpinorData state = psi0.data;
  double sup0 = record(0.0, state);
  sample(0.0, state);
  if (!std::isfinite(sup0)) throw NumericalError("evolution diverged: non-finite state");

  for (long k = 0; k < cfg.steps; ++k) {
    const double dt = res.dt;
    grid::SpinorData k1 = gen.apply(state);
    grid::SpinorData stage = state;
    for (long i = 0; i < g.points(); ++i) stage.v[i] = state.v[i] + 0.5 * dt * k1.v[i];
    grid::SpinorData k2 = gen.apply(stage);
    for (long i = 0; i < g.points(); ++i) stage.v[i] = state.v[i] + 0.5 * dt * k2.v[i];
    grid::SpinorData k3 = gen.apply(stage);
    for (long i = 0; i < g.points(); ++i) stage.v[i] = state.v[i] + dt * k3.v[i];
    grid::SpinorData k4 = gen.apply(stage);
    for (long i = 0; i < g.points(); ++i)
      state.v[i] += (dt / 6.0) * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);

    double t = dt * static_cast<double>(k + 1);
    double supv = record(t, state);
    if (!std::isfinite(supv) || supv > 1e6 * (sup0 + 1.0))
      throw NumericalError("evolution diverged: CFL or hyperbolicity violation");
    if ((k + 1) % cfg.sample_stride == 0 || k + 1 == cfg.steps) sample(t, state);
  }
  return res;
}

}  // namespace spinlab::cauchy

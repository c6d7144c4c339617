#include "doctest.h"

#include "qflow/flow.hpp"
#include "support/fourier_field.hpp"

using namespace qflow;
using qflow_test::random_fourier;
using qflow_test::scaled_to;
using std::numbers::pi;

namespace {

std::mt19937_64 rng(2718);

QField smooth_field(const SpectralGrid& g, int kmax, double max_norm) {
  return scaled_to(random_fourier(g.dim(), kmax, 1, rng).sample(g), max_norm);
}

QField uniform_field(const SpectralGrid& g, const QTensor& q) {
  QField f(g);
  for (Index p = 0; p < g.size(); ++p) f.set(p, q);
  return f;
}

double step_functional(const QField& v, const QField& w, double tau, const ElasticParams& p) {
  return l2_norm_sq(v - w) / (2 * tau) + total_energy(v, p).total;
}

// Minimizes the step functional by preconditioned gradient descent with an
// Armijo line search that never leaves the physical set.
QField descent_minimizer(const QField& w, double tau, const ElasticParams& p) {
  const ElasticOperator op(w.grid, p);
  const ShiftedInverse precond(op, 1 / tau - 2 * p.alpha, 1);
  QField v = w;
  double phi = step_functional(v, w, tau, p);
  for (int it = 0; it < 2000; ++it) {
    const QField grad = (1 / tau) * (v - w) + total_gradient(v, p);
    if (l2_norm(grad) < 1e-12) break;
    const QField dir = fft_inverse(w.grid, precond.solve(fft_forward(grad)));
    const double slope = inner(grad, dir);
    double s = 1;
    for (; s > 1e-12; s *= 0.5) {
      const QField trial = v - s * dir;
      if (!is_physical(trial)) continue;
      const double next = step_functional(trial, w, tau, p);
      if (next <= phi - 1e-4 * s * slope) {
        v = trial;
        phi = next;
        break;
      }
    }
    if (s <= 1e-12) break;
  }
  return v;
}

// Pointwise distance between two uniform fields.
double uniform_distance(const QField& a, const QField& b) { return (a.values.col(0) - b.values.col(0)).norm(); }

} // namespace

TEST_CASE("scheme names round trip and bad configurations are rejected") {
  for (auto k : {SchemeKind::semi_implicit, SchemeKind::minimizing_movement, SchemeKind::approx_flow})
    CHECK(scheme_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(scheme_from_string("euler"), ConfigError);

  ElasticParams p;
  p.alpha = 2;
  SchemeConfig c;
  c.kind = SchemeKind::minimizing_movement;
  c.tau = 0.25;
  CHECK_THROWS_AS(validate(c, p), ConfigError);
  c.tau = 0.2;
  CHECK_NOTHROW(validate(c, p));
  c.backtrack_factor = 1;
  CHECK_THROWS_AS(validate(c, p), ConfigError);

  SchemeConfig a;
  a.kind = SchemeKind::approx_flow;
  a.approx_n = 64;
  a.tau = 1.0 / 32;
  CHECK_THROWS_AS(validate(a, p), ConfigError);
  a.tau = 1.0 / 64;
  CHECK_NOTHROW(validate(a, p));
}

TEST_CASE("energy of the zero field and of non-physical fields") {
  const SpectralGrid g(2, 8);
  ElasticParams p;
  p.alpha = 0.7;
  const EnergyParts e = total_energy(QField(g), p);
  CHECK(e.finite);
  CHECK(e.total == doctest::Approx(-std::log(4 * pi)).epsilon(1e-12));

  QField bad(g);
  bad.set(3, QTensor::uniaxial(-0.6, Vector3d::UnitZ()));
  const EnergyParts b = total_energy(bad, p);
  CHECK_FALSE(b.finite);
  CHECK(std::isinf(b.total));
}

TEST_CASE("total energy is assembled from its parts") {
  const SpectralGrid g(2, 16);
  ElasticParams p;
  p.L2 = 0.1;
  p.alpha = 0.4;
  QField f(g);
  const QTensor amp = QTensor::uniaxial(0.2, Vector3d(1, 2, 2).normalized());
  for (Index pt = 0; pt < g.size(); ++pt) f.set(pt, QTensor(amp.coords() * std::cos(2 * pi * g.position(pt)[1])));
  double bulk = 0, quad = 0;
  for (Index pt = 0; pt < g.size(); ++pt) {
    bulk += psi(f.at(pt));
    quad += f.at(pt).coords().squaredNorm();
  }
  bulk /= g.size();
  quad /= g.size();
  const double expected = elastic_energy(f, p) + bulk - p.alpha * quad;
  CHECK(std::abs(total_energy(f, p).total - expected) <= 1e-9 * std::abs(expected));
}

TEST_CASE("gradient of a uniform field is the bulk gradient") {
  const SpectralGrid g(2, 8);
  ElasticParams p;
  p.alpha = 0.3;
  const QTensor q0 = QTensor::uniaxial(0.35, Vector3d(0, 1, 1).normalized());
  const QField grad = total_gradient(uniform_field(g, q0), p);
  const Vector5d expected = psi_grad(q0).coords() - 2 * p.alpha * q0.coords();
  for (Index pt = 0; pt < g.size(); ++pt) CHECK((grad.values.col(pt) - expected).norm() < 1e-12);
  CHECK(l2_norm(total_gradient(QField(g), p)) == 0);
}

TEST_CASE("total gradient matches directional differences of the energy") {
  const SpectralGrid g(2, 16);
  ElasticParams p;
  p.L2 = -0.15;
  p.L3 = 0.05;
  p.alpha = 0.5;
  for (int trial = 0; trial < 3; ++trial) {
    const QField f = smooth_field(g, 2, 0.3);
    const QField r = smooth_field(g, 3, 1.0);
    const double eps = 1e-6;
    const double fd = (total_energy(f + eps * r, p).total - total_energy(f - eps * r, p).total) / (2 * eps);
    const double an = inner(total_gradient(f, p), r);
    CHECK(std::abs(fd - an) <= 1e-6 * std::abs(an));
  }
}

TEST_CASE("zero field is a fixed point of every scheme") {
  const SpectralGrid g(2, 8);
  ElasticParams p;
  p.alpha = 0.4;
  for (auto kind : {SchemeKind::semi_implicit, SchemeKind::minimizing_movement, SchemeKind::approx_flow}) {
    SchemeConfig c;
    c.kind = kind;
    c.tau = 0.05;
    c.approx_n = 16;
    const Trajectory tr = run(QField(g), 0.5, c, p);
    CHECK_FALSE(tr.stalled);
    CHECK(tr.series.size() == 11);
    for (const auto& row : tr.series) {
      CHECK(row.energy == doctest::Approx(-std::log(4 * pi)).epsilon(1e-12));
      CHECK(row.slope_l2 < 1e-13);
    }
    CHECK(l2_norm(tr.snapshots.back().field) < 1e-13);
  }
}

TEST_CASE("semi-implicit step reproduces the linearized decay of a single mode") {
  const SpectralGrid g(2, 16);
  const ElasticParams p; // L1 = 1, no anisotropy, alpha = 0
  const double tau = 1e-3, amp = 1e-3;
  QField f(g);
  const Vector5d dir = Vector5d::Unit(2);
  for (Index pt = 0; pt < g.size(); ++pt) f.values.col(pt) = amp * dir * std::cos(2 * pi * g.position(pt)[0]);
  SchemeConfig c;
  c.tau = tau;
  FlowSolver solver(g, p, c);
  const FlowState s0 = solver.initial_state(f);
  const FlowState s1 = solver.step(s0);
  const double k2 = 4 * pi * pi;
  const double factor = (1 - 7.5 * tau) / (1 + tau * 2 * k2);
  const double measured = inner(s1.field, f) / l2_norm_sq(f);
  CHECK(std::abs(measured - factor) < 1e-3 * factor);
  CHECK(s1.report.eff_tau == tau);
}

TEST_CASE("semi-implicit energy is non-increasing and fields stay physical") {
  const SpectralGrid g(2, 16);
  ElasticParams p;
  p.L2 = 0.2;
  p.alpha = 1;
  SchemeConfig c;
  c.tau = 2e-3;
  const Trajectory tr = run(smooth_field(g, 2, 0.39), 0.1, c, p);
  REQUIRE_FALSE(tr.stalled);
  for (std::size_t k = 1; k < tr.series.size(); ++k) {
    CHECK(tr.series[k].energy <= tr.series[k - 1].energy + 1e-10 * std::abs(tr.series[k - 1].energy));
    CHECK(tr.series[k].min_margin > 0);
  }
}

TEST_CASE("backtracking halves the step near the boundary") {
  const SpectralGrid g(2, 8);
  ElasticParams p;
  p.alpha = 0;
  QField f(g);
  // one point very close to the lower eigenvalue edge, others at zero
  f.set(0, QTensor::from_eigenvalues(Vector3d(-1.0 / 3 + 1e-4, 1.0 / 6 - 5e-5, 1.0 / 6 - 5e-5), Matrix3d::Identity()));
  SchemeConfig c;
  c.tau = 0.05;
  FlowSolver solver(g, p, c);
  const FlowState s1 = solver.step(solver.initial_state(f));
  CHECK_FALSE(s1.report.stalled);
  CHECK(s1.report.retries > 0);
  CHECK(s1.report.eff_tau == doctest::Approx(c.tau * std::pow(0.5, s1.report.retries)));
  CHECK(s1.min_margin > 0);
  CHECK(s1.t == doctest::Approx(s1.report.eff_tau));
}

TEST_CASE("minimizing-movement step agrees with a direct minimization of the step functional") {
  const SpectralGrid g(2, 16);
  ElasticParams p;
  p.L2 = 0.1;
  p.L3 = 0.05;
  p.alpha = 0.8;
  const double tau = 5e-3;
  const QField w = smooth_field(g, 2, 0.37);
  SchemeConfig c;
  c.kind = SchemeKind::minimizing_movement;
  c.tau = tau;
  FlowSolver solver(g, p, c);
  const FlowState s0 = solver.initial_state(w);
  const FlowState s1 = solver.step(s0);
  CHECK_FALSE(s1.report.stalled);
  const QField oracle = descent_minimizer(w, tau, p);
  CHECK(l2_norm(s1.field - oracle) < 1e-6);
  // Phi(v*) <= Phi(w) and hence the energy drops
  CHECK(step_functional(s1.field, w, tau, p) <= s0.energy.total);
  CHECK(s1.energy.total < s0.energy.total);
  CHECK(s1.report.phi_history.size() == std::size_t(s1.report.inner_iterations) + 1);
}

TEST_CASE("step functional is (1/tau - 2 alpha)-convex") {
  const SpectralGrid g(2, 8);
  ElasticParams p;
  p.L2 = -0.2;
  p.alpha = 3;
  const double tau = 0.1;
  const double lambda = 1 / tau - 2 * p.alpha;
  for (int trial = 0; trial < 5; ++trial) {
    const QField w = smooth_field(g, 2, 0.3), a = smooth_field(g, 3, 0.38), b = smooth_field(g, 1, 0.38);
    for (double t : {0.25, 0.5, 0.75}) {
      const QField mid = (1 - t) * a + t * b;
      const double lhs = step_functional(mid, w, tau, p);
      const double rhs = (1 - t) * step_functional(a, w, tau, p) + t * step_functional(b, w, tau, p) -
                         0.5 * lambda * t * (1 - t) * l2_norm_sq(a - b);
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}

TEST_CASE("uniform uniaxial data relaxes like the pointwise ODE") {
  const SpectralGrid g(2, 4);
  const ElasticParams p;
  const QTensor q0 = QTensor::uniaxial(0.3, Vector3d::UnitZ());
  const double horizon = 0.2;

  // classical RK4 on dQ/dt = -psi'(Q) with a fine step
  QTensor q = q0;
  const int steps = 4000;
  const double h = horizon / steps;
  for (int i = 0; i < steps; ++i) {
    const Vector5d k1 = -psi_grad(q).coords();
    const Vector5d k2 = -psi_grad(QTensor(q.coords() + 0.5 * h * k1)).coords();
    const Vector5d k3 = -psi_grad(QTensor(q.coords() + 0.5 * h * k2)).coords();
    const Vector5d k4 = -psi_grad(QTensor(q.coords() + h * k3)).coords();
    q = QTensor(q.coords() + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4));
  }
  const QField exact = uniform_field(g, q);

  for (auto kind : {SchemeKind::semi_implicit, SchemeKind::minimizing_movement}) {
    std::vector<double> errors;
    for (double tau : {4e-3, 2e-3}) {
      SchemeConfig c;
      c.kind = kind;
      c.tau = tau;
      const Trajectory tr = run(uniform_field(g, q0), horizon, c, p);
      REQUIRE_FALSE(tr.stalled);
      for (std::size_t k = 1; k < tr.snapshots.size(); ++k)
        CHECK(l2_norm(tr.snapshots[k].field) < l2_norm(tr.snapshots[k - 1].field));
      errors.push_back(uniform_distance(tr.snapshots.back().field, exact));
    }
    // first order in tau
    CHECK(std::abs(errors[1] / errors[0] - 0.5) <= 0.1);
    CHECK(errors[1] < 0.02 * l2_norm(uniform_field(g, q0)));
  }
  // the relaxation is toward the isotropic state
  CHECK(q.coords().norm() < 0.5 * q0.coords().norm());
}

TEST_CASE("semi-implicit and minimizing-movement trajectories agree to first order") {
  const SpectralGrid g(2, 16);
  ElasticParams p;
  p.alpha = 0.5;
  const QField q0 = smooth_field(g, 2, 0.3);
  const double horizon = 0.05;
  std::vector<double> gaps;
  for (double tau : {2e-3, 1e-3}) {
    SchemeConfig si, mm;
    si.tau = mm.tau = tau;
    mm.kind = SchemeKind::minimizing_movement;
    const Trajectory a = run(q0, horizon, si, p), b = run(q0, horizon, mm, p);
    REQUIRE_FALSE(a.stalled);
    REQUIRE_FALSE(b.stalled);
    gaps.push_back(l2_norm(a.snapshots.back().field - b.snapshots.back().field));
  }
  CHECK(std::abs(gaps[1] / gaps[0] - 0.5) <= 0.1);
}

TEST_CASE("energy identity residual") {
  const SpectralGrid g(2, 8);
  ElasticParams p;
  SchemeConfig c;
  c.tau = 0.01;
  const Trajectory flat = run(QField(g), 0.1, c, p);
  const EnergyIdentity z = energy_identity_residual(flat, 0, 0.1);
  CHECK(z.residual == 0);
  CHECK(z.relative == 0);

  const SpectralGrid g16(2, 16);
  p.alpha = 0.3;
  const QField q0 = smooth_field(g16, 1, 0.25);
  std::vector<double> rel;
  for (double tau : {2e-3, 1e-3}) {
    c.tau = tau;
    const Trajectory tr = run(q0, 0.2, c, p);
    REQUIRE_FALSE(tr.stalled);
    const EnergyIdentity e = energy_identity_residual(tr, 0, 0.2);
    CHECK(e.rhs > 0);
    rel.push_back(e.relative);
    // on the flow the velocity and the slope nearly coincide
    const auto& last = tr.series.back();
    const double velocity = std::sqrt(last.increment_sq) / last.eff_tau;
    CHECK(std::abs(velocity - last.slope_l2) < 0.05 * last.slope_l2);
  }
  CHECK(rel[0] < 0.1);
  // the step-difference and trapezoid estimator has an O(tau^3) local
  // defect, so the residual falls at least as fast as tau
  CHECK(rel[1] <= 0.6 * rel[0]);
}

TEST_CASE("minimizing movement satisfies the discrete EVI for any probe") {
  const SpectralGrid g(2, 8);
  ElasticParams p;
  p.L2 = 0.1;
  p.alpha = 0.6;
  SchemeConfig c;
  c.kind = SchemeKind::minimizing_movement;
  c.tau = 0.01;
  RunOptions o;
  o.snapshot_every = 1;
  const Trajectory tr = run(smooth_field(g, 2, 0.35), 0.1, c, p, o);
  REQUIRE_FALSE(tr.stalled);
  REQUIRE(tr.snapshots.size() == 11);
  std::vector<QField> probes{QField(g), tr.snapshots.back().field, smooth_field(g, 1, 0.3)};
  for (const QField& probe : probes)
    for (double r : evi_residual(tr, probe, p)) CHECK(r <= 1e-7);
}

TEST_CASE("slope decays along a minimizing-movement run") {
  const SpectralGrid g(2, 16);
  ElasticParams p;
  p.alpha = 0.5;
  SchemeConfig c;
  c.kind = SchemeKind::minimizing_movement;
  c.tau = 5e-3;
  const Trajectory tr = run(smooth_field(g, 2, 0.3), 0.1, c, p);
  REQUIRE_FALSE(tr.stalled);
  for (std::size_t k = 1; k < tr.series.size(); ++k) {
    const double a = std::exp(-2 * p.alpha * tr.series[k - 1].t) * tr.series[k - 1].slope_l2;
    const double b = std::exp(-2 * p.alpha * tr.series[k].t) * tr.series[k].slope_l2;
    CHECK(b <= 1.02 * a);
  }
}

TEST_CASE("approximate flows approach the singular flow as the envelope index grows") {
  const SpectralGrid g(2, 8);
  ElasticParams p;
  p.alpha = 0.2;
  const QField q0 = smooth_field(g, 1, 0.35);
  const double horizon = 0.05;
  SchemeConfig c;
  c.tau = 1e-3;
  const Trajectory ref = run(q0, horizon, c, p);
  REQUIRE_FALSE(ref.stalled);
  double prev = std::numeric_limits<double>::infinity();
  for (double n : {4.0, 16.0, 64.0}) {
    const Trajectory tr = approx_flow_run(q0, horizon, n, c, p);
    REQUIRE_FALSE(tr.stalled);
    CHECK(tr.envelope_n == n);
    for (std::size_t k = 1; k < tr.series.size(); ++k) CHECK(tr.series[k].energy <= tr.series[k - 1].energy + 1e-12);
    const double d = l2_norm(tr.snapshots.back().field - ref.snapshots.back().field);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("time-series rows format with full precision") {
  TimeSeriesRow r;
  r.t = 0.1;
  r.energy = -std::log(4 * pi);
  r.eff_tau = 1e-3;
  const std::string s = format_row(r);
  CHECK(s.rfind("0.10000000000000001,-2.5310242469692907,0,0,0,0,0,0,0,0.001", 0) == 0);
  CHECK(std::string(time_series_header()) ==
        "t,energy,elastic,bulk,quad,slope_l2,grad_l2_sq,min_margin,linf_dev_mean,eff_tau");
  CHECK(std::stod(s.substr(s.find(',') + 1)) == r.energy);
}

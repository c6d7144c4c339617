#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "qflow/flow.hpp"

namespace qflow {

std::string to_string(SchemeKind k) {
  switch (k) {
  case SchemeKind::semi_implicit: return "semi_implicit";
  case SchemeKind::minimizing_movement: return "minimizing_movement";
  case SchemeKind::approx_flow: return "approx_flow";
  }
  return "semi_implicit";
}

SchemeKind scheme_from_string(const std::string& s) {
  if (s == "semi_implicit") return SchemeKind::semi_implicit;
  if (s == "minimizing_movement") return SchemeKind::minimizing_movement;
  if (s == "approx_flow") return SchemeKind::approx_flow;
  throw ConfigError("unknown scheme kind '" + s + "'");
}

void validate(const SchemeConfig& c, const ElasticParams& p) {
  std::ostringstream msg;
  if (!(c.tau > 0) || !std::isfinite(c.tau))
    msg << "tau must be positive";
  else if (!(c.backtrack_factor > 0 && c.backtrack_factor < 1))
    msg << "backtrack_factor must lie in (0, 1)";
  else if (c.max_inner < 1 || c.max_retries < 0)
    msg << "iteration limits must be positive";
  else if (!(c.inner_tol > 0) || !(c.stationarity_tol > 0))
    msg << "inner tolerances must be positive";
  else if (c.kind == SchemeKind::minimizing_movement && !(2 * p.alpha * c.tau < 1))
    msg << "minimizing movement needs tau < 1/(2 alpha); tau = " << c.tau << ", alpha = " << p.alpha;
  else if (c.kind == SchemeKind::approx_flow && !(c.approx_n > 0))
    msg << "approx_flow needs a positive envelope index";
  else if (c.kind == SchemeKind::approx_flow && c.tau > kApproxStability / c.approx_n)
    msg << "approx_flow needs tau <= " << kApproxStability << "/n; tau = " << c.tau
        << ", n = " << c.approx_n;
  else
    return;
  throw ConfigError(msg.str());
}

namespace {

EnergyParts assemble(double elastic, double bulk, const QField& f, const ElasticParams& p) {
  EnergyParts e;
  e.elastic = elastic;
  e.bulk = bulk;
  e.quad = p.alpha * l2_norm_sq(f);
  e.total = e.elastic + e.bulk - e.quad;
  return e;
}

double linf_deviation(const QField& f) {
  const Vector5d m = mean_value(f).coords();
  double d = 0;
  for (Index p = 0; p < f.size(); ++p) d = std::max(d, (f.values.col(p) - m).norm());
  return d;
}

} // namespace

EnergyParts total_energy(const QField& f, const ElasticParams& p) {
  if (!is_physical(f)) {
    EnergyParts e;
    e.elastic = elastic_energy(f, p);
    e.quad = p.alpha * l2_norm_sq(f);
    e.bulk = e.total = std::numeric_limits<double>::infinity();
    e.finite = false;
    return e;
  }
  return assemble(elastic_energy(f, p), evaluate_psi(f).integral, f, p);
}

EnergyParts envelope_energy(const QField& f, double n, const ElasticParams& p) {
  return assemble(elastic_energy(f, p), evaluate_envelope(f, n).integral, f, p);
}

QField total_gradient(const QField& f, const ElasticParams& p) {
  return elastic_gradient(f, p) + evaluate_psi(f).gradient - 2 * p.alpha * f;
}

QField envelope_gradient(const QField& f, double n, const ElasticParams& p) {
  return elastic_gradient(f, p) + evaluate_envelope(f, n).gradient - 2 * p.alpha * f;
}

FlowState make_state(const QField& f, double t, const ElasticParams& p, double envelope_n,
                     const Multipliers* warm) {
  FlowState s;
  s.t = t;
  s.field = f;
  s.envelope_n = envelope_n;
  s.bulk = envelope_n > 0 ? evaluate_envelope(f, envelope_n, warm) : evaluate_psi(f, warm);
  const ElasticOperator op(f.grid, p);
  const SpectralCoeffs c = fft_forward(f);
  s.energy = assemble(op.energy(c), s.bulk.integral, f, p);
  s.gradient = fft_inverse(f.grid, op.apply(c)) + s.bulk.gradient - 2 * p.alpha * f;
  s.slope = l2_norm(s.gradient);
  s.grad_l2_sq = gradient_norm_sq(f);
  s.min_margin = s.bulk.min_margin;
  s.linf_dev_mean = linf_deviation(f);
  return s;
}

FlowSolver::FlowSolver(const SpectralGrid& g, const ElasticParams& p, const SchemeConfig& c)
    : op_(g, p), params_(p), config_(c) {
  validate(p);
  validate(c, p);
}

FlowState FlowSolver::initial_state(const QField& q0, double t) const {
  if (q0.grid != op_.grid()) throw DomainError("initial field does not match the solver grid");
  const double n = config_.kind == SchemeKind::approx_flow ? config_.approx_n : 0;
  if (n == 0 && !is_physical(q0)) throw DomainError("initial field is not physical");
  return make_state(q0, t, params_, n);
}

const ShiftedInverse& FlowSolver::shifted(double c0, double c1) {
  const auto key = std::make_pair(c0, c1);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    // a few distinct step sizes and penalties occur per run
    if (cache_.size() > 16) cache_.clear();
    it = cache_.emplace(key, ShiftedInverse(op_, c0, c1)).first;
  }
  return it->second;
}

FlowState FlowSolver::step(const FlowState& s, double tau) {
  if (!(tau > 0)) tau = config_.tau;
  switch (config_.kind) {
  case SchemeKind::semi_implicit: return step_semi_implicit(s, tau);
  case SchemeKind::minimizing_movement: return step_minimizing_movement(s, tau);
  case SchemeKind::approx_flow: return step_approx(s, tau);
  }
  return step_semi_implicit(s, tau);
}

QField FlowSolver::linear_step(const FlowState& s, double tau) {
  const QField rhs = s.field + tau * (2 * params_.alpha * s.field - s.bulk.gradient);
  return fft_inverse(s.field.grid, shifted(1, tau).solve(fft_forward(rhs)));
}

FlowState FlowSolver::step_semi_implicit(const FlowState& s, double tau) {
  const double tol = 1e-10 * std::max(1.0, std::abs(s.energy.total));
  std::string last;
  for (int retry = 0; retry <= config_.max_retries; ++retry, tau *= config_.backtrack_factor) {
    const QField next = linear_step(s, tau);
    if (!(min_margin(next) >= kMarginFloor)) {
      last = "physicality violated";
      continue;
    }
    FlowState out;
    try {
      out = make_state(next, s.t + tau, params_, 0, &s.bulk.nu);
    } catch (const Error& e) {
      last = e.what();
      continue;
    }
    if (out.energy.total > s.energy.total + tol) {
      last = "energy increased";
      continue;
    }
    out.report.retries = retry;
    out.report.eff_tau = tau;
    return out;
  }
  FlowState out = s;
  out.report = StepReport{};
  out.report.stalled = true;
  out.report.retries = config_.max_retries;
  out.report.message = "semi-implicit step retries exhausted (" + last + ")";
  return out;
}

FlowState FlowSolver::step_approx(const FlowState& s, double tau) {
  const double n = config_.approx_n;
  const double tol = 1e-10 * std::max(1.0, std::abs(s.energy.total));
  for (int retry = 0; retry <= config_.max_retries; ++retry, tau *= config_.backtrack_factor) {
    FlowState out = make_state(linear_step(s, tau), s.t + tau, params_, n, &s.bulk.nu);
    if (out.energy.total > s.energy.total + tol) continue;
    out.report.retries = retry;
    out.report.eff_tau = tau;
    return out;
  }
  FlowState out = s;
  out.report = StepReport{};
  out.report.stalled = true;
  out.report.message = "approximate-flow step retries exhausted";
  return out;
}

// Minimizes Phi(v) = |v - w|^2 / (2 tau) + E(v) by alternating directions:
// the quadratic part (elastic, the distance term and -alpha |v|^2) is solved
// mode by mode, psi through its pointwise proximal map, and the scaled
// multiplier y converges to psi'(v) / beta.
FlowState FlowSolver::step_minimizing_movement(const FlowState& s, double tau) {
  const QField& w = s.field;
  const SpectralGrid& g = w.grid;
  const double alpha = params_.alpha;
  if (!(beta_ > 0)) beta_ = 1 / tau;
  double beta = beta_;

  QField u = w;
  QField y = (1 / beta) * s.bulk.gradient;
  Multipliers warm = s.bulk.nu;
  const double phi0 = s.energy.total;
  double phi = phi0;
  StepReport report;
  report.phi_history.push_back(phi0);
  double station = std::numeric_limits<double>::infinity();
  bool converged = false;
  int it = 0;
  for (; it < config_.max_inner; ++it) {
    const ShiftedInverse& solve = shifted(1 / tau - 2 * alpha + beta, 1);
    const QField rhs = (1 / tau) * w + beta * (u - y);
    const QField v = fft_inverse(g, solve.solve(fft_forward(rhs)));
    const BulkField env = evaluate_envelope(v + y, beta / 2, &warm);
    warm = env.nu;
    const QField u_prev = u;
    u = env.prox;
    y += v - u;

    const SpectralCoeffs uc = fft_forward(u);
    const double psi_u = env.integral - 0.5 * beta * l2_norm_sq(y);
    const double phi_new = l2_norm_sq(u - w) / (2 * tau) + op_.energy(uc) + psi_u -
                           alpha * l2_norm_sq(u);
    const QField grad_phi =
        (1 / tau) * (u - w) + fft_inverse(g, op_.apply(uc)) - 2 * alpha * u + beta * y;
    station = l2_norm(grad_phi);
    const double primal = l2_norm(v - u);
    const double dual = beta * l2_norm(u - u_prev);
    const double change = std::abs(phi_new - phi);
    phi = phi_new;
    report.phi_history.push_back(phi);

    if (change <= config_.inner_tol * std::max(1.0, std::abs(phi)) &&
        station <= config_.stationarity_tol) {
      converged = true;
      ++it;
      break;
    }
    // residual balancing; y is the scaled multiplier, so it rescales with beta
    if (primal > 10 * dual) {
      beta *= 2;
      y *= 0.5;
    } else if (dual > 10 * primal) {
      beta *= 0.5;
      y *= 2;
    }
  }
  beta_ = beta;

  FlowState out = make_state(u, s.t + tau, params_, 0, &warm);
  report.inner_iterations = it;
  report.inner_residual = station;
  report.eff_tau = tau;
  if (!converged) {
    report.stalled = true;
    std::ostringstream msg;
    msg.precision(6);
    msg << "minimizing-movement inner iteration reached " << config_.max_inner
        << " iterations; stationarity residual " << station;
    report.message = msg.str();
  }
  out.report = std::move(report);
  return out;
}

FlowState step_semi_implicit(const FlowState& s, const SchemeConfig& c, const ElasticParams& p) {
  SchemeConfig cc = c;
  cc.kind = SchemeKind::semi_implicit;
  return FlowSolver(s.field.grid, p, cc).step_semi_implicit(s, c.tau);
}

FlowState step_minimizing_movement(const FlowState& s, const SchemeConfig& c, const ElasticParams& p) {
  SchemeConfig cc = c;
  cc.kind = SchemeKind::minimizing_movement;
  return FlowSolver(s.field.grid, p, cc).step_minimizing_movement(s, c.tau);
}

TimeSeriesRow make_row(const FlowState& s) {
  TimeSeriesRow r;
  r.t = s.t;
  r.energy = s.energy.total;
  r.elastic = s.energy.elastic;
  r.bulk = s.energy.bulk;
  r.quad = s.energy.quad;
  r.slope_l2 = s.slope;
  r.grad_l2_sq = s.grad_l2_sq;
  r.min_margin = s.min_margin;
  r.linf_dev_mean = s.linf_dev_mean;
  r.eff_tau = s.report.eff_tau;
  return r;
}

const char* time_series_header() {
  return "t,energy,elastic,bulk,quad,slope_l2,grad_l2_sq,min_margin,linf_dev_mean,eff_tau";
}

std::string format_row(const TimeSeriesRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.t,
                r.energy, r.elastic, r.bulk, r.quad, r.slope_l2, r.grad_l2_sq, r.min_margin,
                r.linf_dev_mean, r.eff_tau);
  return buf;
}

namespace {

Snapshot snapshot_of(const FlowState& s) {
  return Snapshot{s.t, s.field, s.energy, s.slope, s.min_margin};
}

Trajectory integrate(FlowSolver& solver, const QField& q0, double horizon, const RunOptions& o) {
  Trajectory tr;
  tr.envelope_n = solver.config().kind == SchemeKind::approx_flow ? solver.config().approx_n : 0;
  FlowState s = solver.initial_state(q0);
  tr.series.push_back(make_row(s));
  tr.snapshots.push_back(snapshot_of(s));
  if (o.on_step) o.on_step(s);
  const double tau = solver.config().tau;
  const double end_slack = 1e-9 * tau;
  int steps = 0;
  while (s.t < horizon - end_slack) {
    const double remaining = horizon - s.t;
    // land exactly on the horizon without a sliver step
    const double h = remaining < 1.5 * tau ? (remaining <= tau + end_slack ? remaining : remaining / 2) : tau;
    FlowState next = solver.step(s, h);
    if (next.report.stalled && solver.config().kind != SchemeKind::minimizing_movement) {
      tr.stalled = true;
      tr.stall_message = next.report.message;
      break;
    }
    if (next.report.stalled && !tr.stalled) {
      // inexact inner solve: keep going but flag the trajectory
      tr.stalled = true;
      tr.stall_message = next.report.message;
    }
    TimeSeriesRow row = make_row(next);
    row.increment_sq = l2_norm_sq(next.field - s.field);
    tr.series.push_back(row);
    ++steps;
    s = std::move(next);
    if (o.on_step) o.on_step(s);
    if (o.snapshot_every > 0 && steps % o.snapshot_every == 0) tr.snapshots.push_back(snapshot_of(s));
  }
  if (tr.snapshots.back().t != s.t) tr.snapshots.push_back(snapshot_of(s));
  return tr;
}

} // namespace

Trajectory run(const QField& q0, double horizon, const SchemeConfig& c, const ElasticParams& p,
               const RunOptions& o) {
  FlowSolver solver(q0.grid, p, c);
  return integrate(solver, q0, horizon, o);
}

Trajectory approx_flow_run(const QField& q0, double horizon, double n, SchemeConfig c,
                           const ElasticParams& p, const RunOptions& o) {
  c.kind = SchemeKind::approx_flow;
  c.approx_n = n;
  FlowSolver solver(q0.grid, p, c);
  return integrate(solver, q0, horizon, o);
}

EnergyIdentity energy_identity_residual(const Trajectory& tr, double t0, double t1) {
  EnergyIdentity out;
  const auto& s = tr.series;
  const double slack = 1e-9;
  std::size_t first = s.size(), last = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k].t >= t0 - slack && first == s.size()) first = k;
    if (s[k].t <= t1 + slack) last = k;
  }
  if (first >= s.size() || last <= first) return out;
  std::vector<double> terms;
  for (std::size_t k = first + 1; k <= last; ++k) {
    const double dt = s[k].t - s[k - 1].t;
    if (!(dt > 0)) continue;
    // velocity from the step difference, slope by the trapezoid rule
    terms.push_back(s[k].increment_sq / dt);
    terms.push_back(0.5 * dt * (s[k].slope_l2 * s[k].slope_l2 + s[k - 1].slope_l2 * s[k - 1].slope_l2));
  }
  out.lhs = tree_sum(terms);
  out.rhs = 2 * (s[first].energy - s[last].energy);
  out.residual = std::abs(out.lhs - out.rhs);
  const double drop = s[first].energy - s[last].energy;
  out.relative = drop > 0 ? out.residual / drop : (out.residual == 0 ? 0 : std::numeric_limits<double>::infinity());
  return out;
}

std::vector<double> evi_residual(const Trajectory& tr, const QField& probe, const ElasticParams& p) {
  const double ep = tr.envelope_n > 0 ? envelope_energy(probe, tr.envelope_n, p).total
                                      : total_energy(probe, p).total;
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < tr.snapshots.size(); ++k) {
    const Snapshot& a = tr.snapshots[k];
    const Snapshot& b = tr.snapshots[k + 1];
    const double dt = b.t - a.t;
    const double da = l2_norm_sq(a.field - probe), db = l2_norm_sq(b.field - probe);
    out.push_back((db - da) / (2 * dt) - p.alpha * db + b.energy.total - ep);
  }
  return out;
}

} // namespace qflow

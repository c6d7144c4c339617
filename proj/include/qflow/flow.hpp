#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qflow/bulk.hpp"
#include "qflow/elastic.hpp"

namespace qflow {

enum class SchemeKind { semi_implicit, minimizing_movement, approx_flow };

std::string to_string(SchemeKind k);
SchemeKind scheme_from_string(const std::string& s);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::semi_implicit;
  double tau = 1e-3;
  // Relative change of the step functional at which the inner
  // minimizing-movement iteration stops, together with stationarity_tol on
  // the L2 norm of its gradient.
  double inner_tol = 1e-10;
  double stationarity_tol = 1e-7;
  int max_inner = 500;
  double backtrack_factor = 0.5;
  int max_retries = 30;
  double approx_n = 0; // envelope index of approx_flow
};

// c0 in tau <= c0 / n for the explicit envelope gradient.
inline constexpr double kApproxStability = 1.0;

// Throws ConfigError for an inadmissible scheme.
void validate(const SchemeConfig& c, const ElasticParams& p);

struct EnergyParts {
  double elastic = 0;
  double bulk = 0;
  double quad = 0; // alpha ||Q||^2, entering with a minus sign
  double total = 0;
  bool finite = true;
};

// E = G + int psi - alpha ||Q||^2; total is +infinity off the physical set.
EnergyParts total_energy(const QField& f, const ElasticParams& p);
// The same with psi replaced by its envelope of index n.
EnergyParts envelope_energy(const QField& f, double n, const ElasticParams& p);

// dE = dG + psi' - 2 alpha Q (psi' in the traceless gauge).
QField total_gradient(const QField& f, const ElasticParams& p);
QField envelope_gradient(const QField& f, double n, const ElasticParams& p);

struct StepReport {
  int inner_iterations = 0;
  double inner_residual = 0;
  int retries = 0;
  double eff_tau = 0;
  bool stalled = false;
  std::string message;
  std::vector<double> phi_history;
};

struct FlowState {
  double t = 0;
  QField field;
  EnergyParts energy;
  double slope = 0;         // ||dE(Q)||
  double grad_l2_sq = 0;    // ||grad Q||^2
  double min_margin = 0;
  double linf_dev_mean = 0; // max_x |Q(x) - mean Q|
  double envelope_n = 0;    // zero for the singular energy
  QField gradient;          // dE(Q)
  BulkField bulk;
  StepReport report;
};

FlowState make_state(const QField& f, double t, const ElasticParams& p, double envelope_n = 0,
                     const Multipliers* warm = nullptr);

// Time stepping on a fixed grid; caches the factored implicit elastic
// systems between steps.
class FlowSolver {
public:
  FlowSolver(const SpectralGrid& g, const ElasticParams& p, const SchemeConfig& c);

  FlowState initial_state(const QField& q0, double t = 0) const;
  // One step of size tau (the configured one when tau <= 0).
  FlowState step(const FlowState& s, double tau = 0);
  FlowState step_semi_implicit(const FlowState& s, double tau);
  FlowState step_minimizing_movement(const FlowState& s, double tau);
  FlowState step_approx(const FlowState& s, double tau);

  const SchemeConfig& config() const { return config_; }
  const ElasticParams& params() const { return params_; }

private:
  const ShiftedInverse& shifted(double c0, double c1);
  // explicit bulk, implicit elastic: (I + tau A) Q+ = Q + tau (2 alpha Q - bulk')
  QField linear_step(const FlowState& s, double tau);

  ElasticOperator op_;
  ElasticParams params_;
  SchemeConfig config_;
  std::map<std::pair<double, double>, ShiftedInverse> cache_;
  double beta_ = 0; // penalty of the inner splitting, carried across steps
};

FlowState step_semi_implicit(const FlowState& s, const SchemeConfig& c, const ElasticParams& p);
FlowState step_minimizing_movement(const FlowState& s, const SchemeConfig& c, const ElasticParams& p);

struct TimeSeriesRow {
  double t = 0, energy = 0, elastic = 0, bulk = 0, quad = 0, slope_l2 = 0, grad_l2_sq = 0,
         min_margin = 0, linf_dev_mean = 0, eff_tau = 0;
  double increment_sq = 0; // ||Q(t) - Q(t - eff_tau)||^2, not part of the CSV
};

TimeSeriesRow make_row(const FlowState& s);
const char* time_series_header();
std::string format_row(const TimeSeriesRow& r);

struct Snapshot {
  double t = 0;
  QField field;
  EnergyParts energy;
  double slope = 0;
  double min_margin = 0;
};

struct Trajectory {
  std::vector<TimeSeriesRow> series;
  std::vector<Snapshot> snapshots;
  double envelope_n = 0;
  bool stalled = false;
  std::string stall_message;
};

struct RunOptions {
  int snapshot_every = 0; // steps between snapshots; zero keeps the first and last
  std::function<void(const FlowState&)> on_step;
};

Trajectory run(const QField& q0, double horizon, const SchemeConfig& c, const ElasticParams& p,
               const RunOptions& o = {});
Trajectory approx_flow_run(const QField& q0, double horizon, double n, SchemeConfig c,
                           const ElasticParams& p, const RunOptions& o = {});

struct EnergyIdentity {
  double lhs = 0;      // int ||dQ/dt||^2 + ||dE||^2
  double rhs = 0;      // 2 (E(t0) - E(T))
  double residual = 0; // |lhs - rhs|
  double relative = 0; // residual / (E(t0) - E(T))
};

EnergyIdentity energy_identity_residual(const Trajectory& tr, double t0, double t1);

// Discrete EVI along consecutive snapshots:
// (|Q+ - P|^2 - |Q - P|^2) / (2 dt) - alpha |Q+ - P|^2 + E(Q+) - E(P).
std::vector<double> evi_residual(const Trajectory& tr, const QField& probe, const ElasticParams& p);

} // namespace qflow

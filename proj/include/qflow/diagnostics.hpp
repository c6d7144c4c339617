#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qflow/flow.hpp"

namespace qflow {

// ---- decay of the gradient norm and strict-physicality onset ----

inline constexpr double kDefaultKappa = 1.0 / 12;

struct DecayBound {
  double poincare = 0;
  double rate_bound = 0;        // 4 (-(L1 - |L2+L3|)/C^2 + alpha)
  double hypothesis_margin = 0; // L1 - 3|L2+L3| - alpha C^2
  bool hypothesis = false;      // margin > 0 and rate_bound < 0
  bool satisfied = false;       // rate_measured <= rate_bound (1 - slack)
};

struct DecayReport {
  std::string status; // "ok", "decayed to floor", "hypothesis not satisfied"
  double rate_measured = 0;
  double fit_intercept = 0;
  double fit_start = 0, fit_end = 0;
  double rate_bound = 0; // with the configured Poincare constant
  double tolerance_slack = 0;
  DecayBound configured, spectral_gap, power;
  std::vector<double> times;
  std::vector<double> margin_series;
  double kappa = kDefaultKappa;
  std::optional<double> T0_detected; // earliest t with min-margin >= kappa
  bool stays_above_kappa = false;    // and every later sample as well
  bool passed = false;               // configured bound satisfied under its hypothesis
};

DecayReport grad_decay_check(const Trajectory& tr, const ElasticParams& p, int dim,
                             double kappa = kDefaultKappa, double tolerance_slack = 0);

// ---- Gagliardo-Nirenberg ratio ----

struct MeanDeviationRow {
  double t = 0;
  double linf_dev = 0;
  double grad_norm = 0;
  double laplacian_norm = 0;
  std::optional<double> ratio; // empty when the denominator vanishes
};

std::vector<MeanDeviationRow> mean_deviation_check(const Trajectory& tr);
MeanDeviationRow mean_deviation(const QField& f, double t = 0);
// Largest ratio over the rows, zero when none is defined.
double fitted_constant(const std::vector<MeanDeviationRow>& rows);

// ---- H2 bounds ----

// Energy infimum surrogate: -ln(4 pi) |T^n| - alpha sup |Q|^2 over the physical set.
double energy_infimum_surrogate(const ElasticParams& p);

struct H2Row {
  double t = 0;
  double laplacian_norm = 0;
  double slope = 0;
  double q_norm = 0;
  double elastic_grad_norm = 0;
  double uniform_bound = 0;   // C_L (e^{4 alpha} sqrt(E(t0) - inf E + 1) + 2 alpha ||Q||)
  double mechanism_bound = 0; // C_L (||dE|| + 2 alpha ||Q||)
  double chain_lhs = 0;       // (||dE|| + 2 alpha ||Q||)^2
  double chain_rhs = 0;       // angle factor * ||dG||^2
  bool uniform_holds = false;
  bool mechanism_holds = false;
  bool chain_holds = false;
};

std::vector<H2Row> h2_bound_check(const Trajectory& tr, const ElasticParams& p, double energy_t0,
                                  double chain_slack = 1e-8);
H2Row h2_row(const QField& f, double t, double slope, const ElasticParams& p, double energy_t0,
             double chain_slack = 1e-8);

// ---- blow-up rate of the potential gradient ----

struct BlowupRow {
  int config = 0;
  double theta = 0; // 0: lambda2 follows lambda1 to the edge, 1: uniaxial
  double margin = 0;
  Vector3d lambda = Vector3d::Zero();
  double grad_norm = 0;
  double product = 0; // |psi'| * margin
  bool asserted = false;
};

struct BlowupScanSpec {
  int configurations = 21;
  double margin_min = 1e-6, margin_max = 1e-1;
  int margins_per_decade = 4;
  double assert_max = 1e-2; // the lower bound is asymptotic; larger margins are recorded only
  std::uint64_t seed = 1;
};

struct BlowupScan {
  std::vector<BlowupRow> rows;
  double min_product = 0; // over asserted rows
  double C1 = 0;
  bool passed = false;
};

BlowupScan blowup_rate_scan(const BlowupScanSpec& spec = {});

// ---- contact sets ----

using Mask = std::vector<std::uint8_t>;

struct BoxCount {
  int side = 0; // in cells
  double r = 0; // side / N
  std::int64_t count = 0;
};

std::vector<BoxCount> box_counts(const Mask& mask, const SpectralGrid& g);

struct DimensionFit {
  std::string status; // "ok", "empty set", "window too small"
  double dim_estimate = 0;
  int points = 0;
};

// Least squares of log N(r) against log(1/r) over 4/N <= r <= 1/4.
DimensionFit fit_dimension(const std::vector<BoxCount>& counts, const SpectralGrid& g);
bool box_nesting_holds(const std::vector<BoxCount>& counts, int dim);

struct HolderOptions {
  int cutoff = 3;           // all offsets with |offset|_inf <= cutoff cells
  int random_pairs = 4096;  // plus random long-range pairs
  std::uint64_t seed = 7;
};

// max |Q(x) - Q(y)| / |x - y|^exponent over sampled pairs, periodic distance;
// long-range pairs include every axis-aligned shift up to N/2.
double holder_seminorm(const QField& f, double exponent, const HolderOptions& o = {});

struct ContactOptions {
  double beta = 0.5; // Hoelder exponent in 2D; 3D uses 1/2
  HolderOptions holder;
};

struct ContactReport {
  double epsilon = 0;
  Mask mask;
  std::int64_t mask_size = 0;
  std::vector<BoxCount> box_counts;
  DimensionFit fit;
  double dim_estimate = 0;
  double exponent_s = 0;       // 2 in 3D, 2 - 2 beta in 2D
  double content2 = 0;         // N(r) r^s at the smallest window radius
  double slope_norm_sq = 0;    // ||psi'(Q)||^2
  double holder_constant = 0;  // measured C_H
  double C_tilde = 0;
  double surrogate_rhs = 0;    // C_tilde / 5^s * content2
  bool surrogate_holds = false;
  bool nesting_holds = false;
};

Mask margin_mask(const QField& f, double epsilon);
std::vector<ContactReport> contact_report(const QField& f, const std::vector<double>& epsilons,
                                          const ContactOptions& o = {});
ContactReport mask_report(const Mask& mask, const SpectralGrid& g);

// ---- Gamma study ----

struct GammaRow {
  double n = 0;
  double final_distance = 0;      // ||Q_n(T) - Q(T)||
  double energy_excess = 0;       // E_n(Q_n(T)) - E(Q(T))
  double velocity_distance = 0;   // L2(t0, T) distance of the speed series
  double velocity_sq_integral = 0;
  double slope_sq_integral = 0;
  std::vector<double> times;
  std::vector<double> distance_series;
  bool stalled = false;
};

struct GammaReport {
  std::vector<GammaRow> rows;
  double reference_velocity_sq_integral = 0;
  double reference_slope_sq_integral = 0;
  bool reference_stalled = false;
  bool monotone_distance = false;
  bool monotone_excess = false;   // in |D~|
  bool monotone_velocity = false;
  double excess_reduction = 0;    // |D~| first / |D~| last
};

GammaReport gamma_study(const QField& q0, double horizon, const std::vector<double>& n_list,
                        const SchemeConfig& c, const ElasticParams& p, int snapshot_every = 0);

// ---- T0 refinement helper ----
std::optional<double> detect_T0(const Trajectory& tr, double kappa = kDefaultKappa);

// ---- JSON ----
nlohmann::json to_json(const DecayReport& r);
nlohmann::json to_json(const std::vector<MeanDeviationRow>& rows);
nlohmann::json to_json(const std::vector<H2Row>& rows);
nlohmann::json to_json(const BlowupScan& s);
nlohmann::json to_json(const ContactReport& r);
nlohmann::json to_json(const GammaReport& r);

} // namespace qflow

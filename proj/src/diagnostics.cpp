#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>

#include "qflow/diagnostics.hpp"
#include "qflow/parallel.hpp"
#include "qflow/random.hpp"

namespace qflow {

using std::numbers::pi;

namespace {

constexpr double kGradientFloor = 1e-14;

struct LineFit {
  double slope = 0, intercept = 0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0;
  f.intercept = my - f.slope * mx;
  return f;
}

DecayBound bound_for(const ElasticParams& p, double C, double measured, double slack) {
  DecayBound b;
  b.poincare = C;
  b.rate_bound = decay_rate_bound(p, C);
  b.hypothesis_margin = decay_hypothesis_margin(p, C);
  b.hypothesis = b.hypothesis_margin > 0 && b.rate_bound < 0;
  b.satisfied = measured <= b.rate_bound * (1 - slack);
  return b;
}

} // namespace

std::optional<double> detect_T0(const Trajectory& tr, double kappa) {
  for (const auto& row : tr.series)
    if (row.min_margin >= kappa) return row.t;
  return std::nullopt;
}

DecayReport grad_decay_check(const Trajectory& tr, const ElasticParams& p, int dim, double kappa,
                             double tolerance_slack) {
  DecayReport r;
  r.kappa = kappa;
  r.tolerance_slack = tolerance_slack;
  for (const auto& row : tr.series) {
    r.times.push_back(row.t);
    r.margin_series.push_back(row.min_margin);
  }
  r.T0_detected = detect_T0(tr, kappa);
  if (r.T0_detected) {
    r.stays_above_kappa = true;
    for (const auto& row : tr.series)
      if (row.t >= *r.T0_detected && row.min_margin < kappa) r.stays_above_kappa = false;
  }

  std::vector<double> ts, logs;
  bool floor = tr.series.size() < 2;
  if (!floor) {
    r.fit_start = tr.series.front().t + 0.5 * (tr.series.back().t - tr.series.front().t);
    r.fit_end = tr.series.back().t;
    for (const auto& row : tr.series) {
      if (row.t < r.fit_start) continue;
      if (!(std::sqrt(row.grad_l2_sq) >= kGradientFloor)) {
        floor = true;
        break;
      }
      ts.push_back(row.t);
      logs.push_back(std::log(row.grad_l2_sq));
    }
    floor = floor || ts.size() < 2;
  }
  if (!floor) {
    const LineFit f = least_squares(ts, logs);
    r.rate_measured = f.slope;
    r.fit_intercept = f.intercept;
  }

  const double measured = floor ? -std::numeric_limits<double>::infinity() : r.rate_measured;
  r.configured = bound_for(p, poincare_constant(p, dim), measured, tolerance_slack);
  r.spectral_gap = bound_for(p, spectral_gap_poincare(), measured, tolerance_slack);
  r.power = bound_for(p, power_poincare(dim), measured, tolerance_slack);
  r.rate_bound = r.configured.rate_bound;

  if (floor) {
    r.status = "decayed to floor";
    r.passed = true;
  } else if (!r.configured.hypothesis) {
    r.status = "hypothesis not satisfied";
    r.passed = false;
  } else {
    r.status = "ok";
    r.passed = r.configured.satisfied;
  }
  return r;
}

MeanDeviationRow mean_deviation(const QField& f, double t) {
  MeanDeviationRow row;
  row.t = t;
  const Vector5d m = mean_value(f).coords();
  for (Index pt = 0; pt < f.size(); ++pt) row.linf_dev = std::max(row.linf_dev, (f.values.col(pt) - m).norm());
  row.grad_norm = std::sqrt(gradient_norm_sq(f));
  row.laplacian_norm = std::sqrt(laplacian_norm_sq(f));
  const double den = std::sqrt(row.grad_norm * row.laplacian_norm);
  if (den > 0) row.ratio = row.linf_dev / den;
  return row;
}

std::vector<MeanDeviationRow> mean_deviation_check(const Trajectory& tr) {
  std::vector<MeanDeviationRow> rows;
  for (const auto& s : tr.snapshots) rows.push_back(mean_deviation(s.field, s.t));
  return rows;
}

double fitted_constant(const std::vector<MeanDeviationRow>& rows) {
  double c = 0;
  for (const auto& r : rows)
    if (r.ratio) c = std::max(c, *r.ratio);
  return c;
}

double energy_infimum_surrogate(const ElasticParams& p) {
  // sup |Q|^2 = 2/3 over the closed physical set, at the uniaxial corners
  return psi_infimum() - p.alpha * 2.0 / 3;
}

H2Row h2_row(const QField& f, double t, double slope, const ElasticParams& p, double energy_t0,
             double chain_slack) {
  H2Row r;
  r.t = t;
  r.slope = slope;
  r.laplacian_norm = std::sqrt(laplacian_norm_sq(f));
  r.q_norm = l2_norm(f);
  r.elastic_grad_norm = l2_norm(elastic_gradient(f, p));
  const double CL = constant_CL(p);
  const double gap = std::max(0.0, energy_t0 - energy_infimum_surrogate(p));
  r.uniform_bound = CL * (std::exp(4 * p.alpha) * std::sqrt(gap + 1) + 2 * p.alpha * r.q_norm);
  r.mechanism_bound = CL * (slope + 2 * p.alpha * r.q_norm);
  const double L1 = p.L1, L = std::abs(anisotropy(p));
  const double factor = (L1 + L - 2 * std::sqrt(L1 * L)) / (L1 + L);
  r.chain_lhs = std::pow(slope + 2 * p.alpha * r.q_norm, 2);
  r.chain_rhs = factor * r.elastic_grad_norm * r.elastic_grad_norm;
  r.uniform_holds = r.laplacian_norm <= r.uniform_bound;
  r.mechanism_holds = r.laplacian_norm <= r.mechanism_bound;
  r.chain_holds = r.chain_lhs >= r.chain_rhs * (1 - chain_slack);
  return r;
}

std::vector<H2Row> h2_bound_check(const Trajectory& tr, const ElasticParams& p, double energy_t0,
                                  double chain_slack) {
  std::vector<H2Row> rows;
  for (const auto& s : tr.snapshots) rows.push_back(h2_row(s.field, s.t, s.slope, p, energy_t0, chain_slack));
  return rows;
}

BlowupScan blowup_rate_scan(const BlowupScanSpec& spec) {
  BlowupScan scan;
  scan.C1 = constant_C1();
  std::vector<double> margins;
  const double decades = std::log10(spec.margin_max / spec.margin_min);
  const int count = int(std::lround(decades * spec.margins_per_decade));
  for (int i = 0; i <= count; ++i)
    margins.push_back(spec.margin_min * std::pow(10.0, double(i) / spec.margins_per_decade));

  const CounterRng rng(spec.seed);
  for (int c = 0; c < spec.configurations; ++c) {
    const double theta = spec.configurations > 1 ? double(c) / (spec.configurations - 1) : 1.0;
    const Matrix3d frame = random_rotation(rng, 3 * std::uint64_t(c));
    for (double m : margins) {
      BlowupRow row;
      row.config = c;
      row.theta = theta;
      row.margin = m;
      const double l1 = -1.0 / 3 + m;
      // lambda2 runs from lambda1 (both at the edge) to the uniaxial midpoint
      const double l2 = l1 + theta * (-0.5 * l1 - l1);
      row.lambda = Vector3d(l1, l2, -l1 - l2);
      const QTensor q = QTensor::from_eigenvalues(row.lambda, frame);
      row.grad_norm = psi_grad(q).norm();
      row.product = row.grad_norm * m;
      row.asserted = m <= spec.assert_max * (1 + 1e-12);
      scan.rows.push_back(row);
    }
  }
  scan.min_product = std::numeric_limits<double>::infinity();
  for (const auto& row : scan.rows)
    if (row.asserted) scan.min_product = std::min(scan.min_product, row.product);
  scan.passed = scan.min_product >= scan.C1;
  return scan;
}

std::vector<BoxCount> box_counts(const Mask& mask, const SpectralGrid& g) {
  if (Index(mask.size()) != g.size()) throw DomainError("mask does not match the grid");
  const int n = g.n(), dim = g.dim();
  std::vector<BoxCount> out;
  for (int side = 1; side <= n; side *= 2) {
    const int boxes = n / side;
    std::vector<std::uint8_t> hit(std::size_t(std::pow(boxes, dim)), 0);
    for (Index p = 0; p < g.size(); ++p) {
      if (!mask[p]) continue;
      const auto i = g.multi_index(p);
      std::size_t b = 0;
      for (int d = 0; d < dim; ++d) b = b * boxes + i[d] / side;
      hit[b] = 1;
    }
    BoxCount bc;
    bc.side = side;
    bc.r = double(side) / n;
    bc.count = std::count(hit.begin(), hit.end(), std::uint8_t(1));
    out.push_back(bc);
  }
  return out;
}

DimensionFit fit_dimension(const std::vector<BoxCount>& counts, const SpectralGrid& g) {
  DimensionFit fit;
  const double lo = 4.0 / g.n(), hi = 0.25;
  std::vector<double> x, y;
  bool empty = true;
  for (const auto& c : counts) {
    if (c.count > 0) empty = false;
    if (c.r < lo * (1 - 1e-12) || c.r > hi * (1 + 1e-12) || c.count == 0) continue;
    x.push_back(std::log(1 / c.r));
    y.push_back(std::log(double(c.count)));
  }
  fit.points = int(x.size());
  if (empty) {
    fit.status = "empty set";
    return fit;
  }
  if (x.size() < 2) {
    fit.status = "window too small";
    return fit;
  }
  fit.status = "ok";
  fit.dim_estimate = std::clamp(least_squares(x, y).slope, 0.0, double(g.dim()));
  return fit;
}

bool box_nesting_holds(const std::vector<BoxCount>& counts, int dim) {
  // counts run from the finest side upward
  for (std::size_t k = 1; k < counts.size(); ++k) {
    const std::int64_t coarse = counts[k].count, fine = counts[k - 1].count;
    if (coarse > fine || fine > (std::int64_t(1) << dim) * coarse) return false;
  }
  return true;
}

double holder_seminorm(const QField& f, double exponent, const HolderOptions& o) {
  if (!(exponent > 0 && exponent < 1)) throw DomainError("Hoelder exponent must lie in (0, 1)");
  const SpectralGrid& g = f.grid;
  const int n = g.n(), dim = g.dim();
  const double h = 1.0 / n;

  std::vector<std::array<int, 3>> offsets;
  const int c = std::min(o.cutoff, n / 2);
  const int cz = dim == 3 ? c : 0;
  for (int i = -c; i <= c; ++i)
    for (int j = -c; j <= c; ++j)
      for (int k = -cz; k <= cz; ++k)
        if (i != 0 || j != 0 || k != 0) offsets.push_back({i, j, k});
  for (int axis = 0; axis < dim; ++axis)
    for (int s = c + 1; s <= n / 2; ++s) {
      std::array<int, 3> off{0, 0, 0};
      off[axis] = s;
      offsets.push_back(off);
    }
  std::vector<double> weight(offsets.size());
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const auto& off = offsets[k];
    const double d = h * std::sqrt(double(off[0] * off[0] + off[1] * off[1] + off[2] * off[2]));
    weight[k] = std::pow(d, -exponent);
  }

  std::vector<double> best(g.size(), 0);
  parallel_for(g.size(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t p = b; p < e; ++p) {
      const auto base = g.multi_index(p);
      double m = 0;
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        std::array<int, 3> j = base;
        for (int d = 0; d < 3; ++d) j[d] += offsets[k][d];
        const Index q = g.flat_index(j);
        m = std::max(m, (f.values.col(p) - f.values.col(q)).norm() * weight[k]);
      }
      best[p] = m;
    }
  });
  double out = *std::max_element(best.begin(), best.end());

  const CounterRng rng(o.seed);
  for (int k = 0; k < o.random_pairs; ++k) {
    const Index p = Index(rng.bits(2 * std::uint64_t(k)) % std::uint64_t(g.size()));
    const Index q = Index(rng.bits(2 * std::uint64_t(k) + 1) % std::uint64_t(g.size()));
    if (p == q) continue;
    const auto a = g.multi_index(p), b = g.multi_index(q);
    double d2 = 0;
    for (int d = 0; d < dim; ++d) {
      const int diff = std::abs(a[d] - b[d]);
      const int wrapped = std::min(diff, n - diff);
      d2 += double(wrapped) * wrapped;
    }
    out = std::max(out, (f.values.col(p) - f.values.col(q)).norm() / std::pow(h * std::sqrt(d2), exponent));
  }
  return out;
}

Mask margin_mask(const QField& f, double epsilon) {
  Mask m(f.size(), 0);
  parallel_for(f.size(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t p = b; p < e; ++p) m[p] = rho_margin(f.at(p)) <= epsilon ? 1 : 0;
  });
  return m;
}

ContactReport mask_report(const Mask& mask, const SpectralGrid& g) {
  ContactReport r;
  r.mask = mask;
  r.mask_size = std::count(mask.begin(), mask.end(), std::uint8_t(1));
  r.box_counts = box_counts(mask, g);
  r.fit = fit_dimension(r.box_counts, g);
  r.dim_estimate = r.fit.dim_estimate;
  r.nesting_holds = box_nesting_holds(r.box_counts, g.dim());
  return r;
}

std::vector<ContactReport> contact_report(const QField& f, const std::vector<double>& epsilons,
                                          const ContactOptions& o) {
  const SpectralGrid& g = f.grid;
  const double exponent = g.dim() == 3 ? 0.5 : o.beta;
  const double s = g.dim() == 3 ? 2.0 : 2 - 2 * o.beta;
  const double CH = holder_seminorm(f, exponent, o.holder);
  const double slope_sq = l2_norm_sq(evaluate_psi(f).gradient);
  const double C1 = constant_C1();
  const double Ct = CH > 0 ? (g.dim() == 3 ? 4 * pi / 3 : 4 * pi) * C1 * C1 / (CH * CH)
                           : std::numeric_limits<double>::infinity();

  std::vector<ContactReport> out;
  for (double eps : epsilons) {
    ContactReport r = mask_report(margin_mask(f, eps), g);
    r.epsilon = eps;
    r.exponent_s = s;
    r.holder_constant = CH;
    r.slope_norm_sq = slope_sq;
    r.C_tilde = Ct;
    const double rmin = 4.0 / g.n();
    for (const auto& bc : r.box_counts)
      if (std::abs(bc.r - rmin) < 1e-12) r.content2 = double(bc.count) * std::pow(bc.r, s);
    r.surrogate_rhs = r.content2 > 0 ? Ct / std::pow(5.0, s) * r.content2 : 0;
    r.surrogate_holds = r.slope_norm_sq >= r.surrogate_rhs;
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct SpeedSeries {
  std::vector<double> t, dt, speed;
};

SpeedSeries speeds(const Trajectory& tr) {
  SpeedSeries s;
  for (std::size_t k = 1; k < tr.series.size(); ++k) {
    const double dt = tr.series[k].t - tr.series[k - 1].t;
    if (!(dt > 0)) continue;
    s.t.push_back(tr.series[k].t);
    s.dt.push_back(dt);
    s.speed.push_back(std::sqrt(tr.series[k].increment_sq) / dt);
  }
  return s;
}

// speed of the step whose interval contains t
double speed_at(const SpeedSeries& s, double t) {
  auto it = std::lower_bound(s.t.begin(), s.t.end(), t - 1e-12);
  if (it == s.t.end()) return s.speed.empty() ? 0 : s.speed.back();
  return s.speed[it - s.t.begin()];
}

double velocity_sq_integral(const SpeedSeries& s) {
  std::vector<double> terms;
  for (std::size_t k = 0; k < s.t.size(); ++k) terms.push_back(s.dt[k] * s.speed[k] * s.speed[k]);
  return tree_sum(terms);
}

double slope_sq_integral(const Trajectory& tr) {
  std::vector<double> terms;
  for (std::size_t k = 1; k < tr.series.size(); ++k) {
    const double dt = tr.series[k].t - tr.series[k - 1].t;
    terms.push_back(0.5 * dt * (std::pow(tr.series[k].slope_l2, 2) + std::pow(tr.series[k - 1].slope_l2, 2)));
  }
  return tree_sum(terms);
}

const Snapshot* snapshot_at(const Trajectory& tr, double t) {
  for (const auto& s : tr.snapshots)
    if (std::abs(s.t - t) < 1e-9) return &s;
  return nullptr;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return true;
}

} // namespace

GammaReport gamma_study(const QField& q0, double horizon, const std::vector<double>& n_list,
                        const SchemeConfig& c, const ElasticParams& p, int snapshot_every) {
  RunOptions o;
  o.snapshot_every = snapshot_every;
  SchemeConfig singular = c;
  if (singular.kind == SchemeKind::approx_flow) singular.kind = SchemeKind::semi_implicit;

  auto run_reference = [&] { return run(q0, horizon, singular, p, o); };
  auto run_approx = [&](double n) { return approx_flow_run(q0, horizon, n, c, p, o); };

  Trajectory ref;
  std::vector<Trajectory> approx(n_list.size());
  if (thread_count() > 1) {
    auto fr = std::async(std::launch::async, run_reference);
    std::vector<std::future<Trajectory>> fa;
    for (double n : n_list) fa.push_back(std::async(std::launch::async, run_approx, n));
    ref = fr.get();
    for (std::size_t k = 0; k < fa.size(); ++k) approx[k] = fa[k].get();
  } else {
    ref = run_reference();
    for (std::size_t k = 0; k < n_list.size(); ++k) approx[k] = run_approx(n_list[k]);
  }

  GammaReport report;
  report.reference_stalled = ref.stalled;
  const SpeedSeries ref_speed = speeds(ref);
  report.reference_velocity_sq_integral = velocity_sq_integral(ref_speed);
  report.reference_slope_sq_integral = slope_sq_integral(ref);

  std::vector<double> dist, excess, vel;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const Trajectory& tr = approx[k];
    GammaRow row;
    row.n = n_list[k];
    row.stalled = tr.stalled;
    row.final_distance = l2_norm(tr.snapshots.back().field - ref.snapshots.back().field);
    row.energy_excess = tr.series.back().energy - ref.series.back().energy;
    const SpeedSeries sp = speeds(tr);
    std::vector<double> terms;
    for (std::size_t j = 0; j < sp.t.size(); ++j)
      terms.push_back(sp.dt[j] * std::pow(sp.speed[j] - speed_at(ref_speed, sp.t[j]), 2));
    row.velocity_distance = std::sqrt(tree_sum(terms));
    row.velocity_sq_integral = velocity_sq_integral(sp);
    row.slope_sq_integral = slope_sq_integral(tr);
    for (const auto& s : tr.snapshots)
      if (const Snapshot* r = snapshot_at(ref, s.t)) {
        row.times.push_back(s.t);
        row.distance_series.push_back(l2_norm(s.field - r->field));
      }
    dist.push_back(row.final_distance);
    excess.push_back(std::abs(row.energy_excess));
    vel.push_back(row.velocity_distance);
    report.rows.push_back(std::move(row));
  }
  report.monotone_distance = strictly_decreasing(dist);
  report.monotone_excess = strictly_decreasing(excess);
  report.monotone_velocity = strictly_decreasing(vel);
  if (!excess.empty())
    report.excess_reduction = excess.back() > 0 ? excess.front() / excess.back()
                                                : (excess.front() > 0 ? std::numeric_limits<double>::infinity() : 1.0);
  return report;
}

// ---- JSON ----

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const DecayBound& b) {
  return {{"poincare_constant", b.poincare}, {"rate_bound", b.rate_bound},
          {"hypothesis_margin", b.hypothesis_margin}, {"hypothesis", b.hypothesis}, {"satisfied", b.satisfied}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

json to_json(const DecayReport& r) {
  return {{"status", r.status},
          {"rate_measured", r.rate_measured},
          {"rate_bound", r.rate_bound},
          {"tolerance_slack", r.tolerance_slack},
          {"fit_window", {r.fit_start, r.fit_end}},
          {"configured", to_json(r.configured)},
          {"spectral_gap", to_json(r.spectral_gap)},
          {"power", to_json(r.power)},
          {"times", r.times},
          {"margin_series", r.margin_series},
          {"kappa", r.kappa},
          {"T0_detected", optional_number(r.T0_detected)},
          {"stays_above_kappa", r.stays_above_kappa},
          {"passed", r.passed}};
}

json to_json(const std::vector<MeanDeviationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"t", r.t}, {"linf_dev", r.linf_dev}, {"grad_norm", r.grad_norm},
                   {"laplacian_norm", r.laplacian_norm}, {"ratio", optional_number(r.ratio)}});
  return out;
}

json to_json(const std::vector<H2Row>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"t", r.t}, {"laplacian_norm", r.laplacian_norm}, {"slope", r.slope},
                   {"q_norm", r.q_norm}, {"elastic_grad_norm", r.elastic_grad_norm},
                   {"uniform_bound", r.uniform_bound}, {"mechanism_bound", r.mechanism_bound},
                   {"chain_lhs", r.chain_lhs}, {"chain_rhs", r.chain_rhs},
                   {"uniform_holds", r.uniform_holds}, {"mechanism_holds", r.mechanism_holds},
                   {"chain_holds", r.chain_holds}});
  return out;
}

json to_json(const BlowupScan& s) {
  json rows = json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"config", r.config}, {"theta", r.theta}, {"margin", r.margin},
                    {"lambda", {r.lambda[0], r.lambda[1], r.lambda[2]}}, {"grad_norm", r.grad_norm},
                    {"product", r.product}, {"asserted", r.asserted}});
  return {{"C1", s.C1}, {"min_product", finite_or_null(s.min_product)}, {"passed", s.passed}, {"rows", rows}};
}

json to_json(const ContactReport& r) {
  json counts = json::array();
  for (const auto& c : r.box_counts) counts.push_back({{"side", c.side}, {"r", c.r}, {"count", c.count}});
  std::vector<std::int64_t> cells;
  for (std::size_t p = 0; p < r.mask.size(); ++p)
    if (r.mask[p]) cells.push_back(std::int64_t(p));
  return {{"epsilon", r.epsilon},
          {"mask", cells},
          {"mask_size", r.mask_size},
          {"box_counts", counts},
          {"status", r.fit.status},
          {"dim_estimate", r.dim_estimate},
          {"fit_points", r.fit.points},
          {"exponent_s", r.exponent_s},
          {"content2", r.content2},
          {"slope_norm_sq", r.slope_norm_sq},
          {"holder_constant", r.holder_constant},
          {"C_tilde", finite_or_null(r.C_tilde)},
          {"surrogate_rhs", r.surrogate_rhs},
          {"surrogate_holds", r.surrogate_holds},
          {"nesting_holds", r.nesting_holds}};
}

json to_json(const GammaReport& r) {
  json rows = json::array();
  for (const auto& g : r.rows)
    rows.push_back({{"n", g.n},
                    {"final_distance", g.final_distance},
                    {"energy_excess", g.energy_excess},
                    {"velocity_distance", g.velocity_distance},
                    {"velocity_sq_integral", g.velocity_sq_integral},
                    {"slope_sq_integral", g.slope_sq_integral},
                    {"times", g.times},
                    {"distance_series", g.distance_series},
                    {"stalled", g.stalled}});
  return {{"rows", rows},
          {"reference_velocity_sq_integral", r.reference_velocity_sq_integral},
          {"reference_slope_sq_integral", r.reference_slope_sq_integral},
          {"reference_stalled", r.reference_stalled},
          {"monotone_distance", r.monotone_distance},
          {"monotone_excess", r.monotone_excess},
          {"monotone_velocity", r.monotone_velocity},
          {"excess_reduction", finite_or_null(r.excess_reduction)}};
}

} // namespace qflow

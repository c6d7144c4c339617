#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cli.hpp"
#include "qflow/diagnostics.hpp"
#include "qflow/snapshot.hpp"

namespace qflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path prepare(const RunConfig& c) {
  validate(c);
  const fs::path dir(c.output_dir);
  ensure_dir(dir);
  write_text(dir / "config.txt", serialize(c));
  return dir;
}

std::string series_csv(const Trajectory& tr) {
  std::string out = std::string(time_series_header()) + "\n";
  for (const auto& row : tr.series) out += format_row(row) + "\n";
  return out;
}

} // namespace

void run_command(const RunConfig& c) {
  const fs::path dir = prepare(c);
  const SpectralGrid g = make_grid(c);
  const std::string hash = config_hash(c);
  const QField q0 = generate_initial(c.initial, g, c.seed);

  RunOptions o;
  o.snapshot_every = c.snapshot_every;
  FlowState last;
  o.on_step = [&](const FlowState& s) { last = s; };
  const Trajectory tr = c.scheme.kind == SchemeKind::approx_flow
                            ? approx_flow_run(q0, c.horizon, c.scheme.approx_n, c.scheme, c.params, o)
                            : run(q0, c.horizon, c.scheme, c.params, o);

  write_text(dir / "timeseries.csv", series_csv(tr));
  ensure_dir(dir / "snapshots");
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "snap_%06zu", k);
    write_snapshot((dir / "snapshots" / stem).string(), tr.snapshots[k].field, tr.snapshots[k].t, hash);
  }

  json report;
  report["config_hash"] = hash;
  report["scheme"] = to_string(c.scheme.kind);
  report["steps"] = tr.series.size() - 1;
  report["final_time"] = tr.series.back().t;
  report["stalled"] = tr.stalled;
  report["stall_message"] = tr.stall_message;
  const EnergyIdentity ei = energy_identity_residual(tr, tr.series.front().t, tr.series.back().t);
  report["energy_identity"] = {{"lhs", ei.lhs}, {"rhs", ei.rhs}, {"residual", ei.residual}, {"relative", ei.relative}};
  report["decay"] = to_json(grad_decay_check(tr, c.params, c.dim, c.kappa));
  report["mean_deviation"] = to_json(mean_deviation_check(tr));
  if (tr.envelope_n == 0) report["h2"] = to_json(h2_bound_check(tr, c.params, tr.series.front().energy));
  write_text(dir / "report.json", report.dump(2) + "\n");

  if (tr.stalled) {
    write_snapshot((dir / "stall_state").string(), last.field, last.t, hash);
    throw StallError(tr.stall_message + " at t = " + num(last.t));
  }
}

void check_potential_command(const RunConfig& c) {
  const fs::path dir = prepare(c);
  // eigenvalues lambda_i = a_i / K - 1/3 over interior compositions a1 <= a2 <= a3
  const int K = c.potential_divisions;
  std::string out = "lambda1,lambda2,lambda3,psi,grad_norm,margin\n";
  for (int a1 = 1; a1 <= K; ++a1)
    for (int a2 = a1; a1 + a2 < K; ++a2) {
      const int a3 = K - a1 - a2;
      if (a3 < a2) continue;
      const Vector3d lam(double(a1) / K - 1.0 / 3, double(a2) / K - 1.0 / 3, double(a3) / K - 1.0 / 3);
      const double margin = rho_margin(lam);
      if (!(margin > 0) || margin < c.potential_margin_min) continue;
      const QTensor q = QTensor::from_eigenvalues(lam, Matrix3d::Identity());
      const PsiEval v = psi_eval(q);
      out += num(lam[0]) + "," + num(lam[1]) + "," + num(lam[2]) + "," + num(v.value) + "," +
             num(v.gradient.norm()) + "," + num(margin) + "\n";
    }
  write_text(dir / "potential.csv", out);
}

void check_elastic_command(const RunConfig& c) {
  const fs::path dir = prepare(c);
  const SpectralGrid g = make_grid(c);
  std::string out = "kx,ky,kz,min_eig,max_eig,lower_bound,upper_bound\n";
  for (Index p = 0; p < g.size(); ++p) {
    const auto m = g.mode(p);
    const ModeSpectrum s = mode_spectrum(g.wave_tensor(p), c.params);
    out += std::to_string(m[0]) + "," + std::to_string(m[1]) + "," + std::to_string(m[2]) + "," +
           num(s.min_eig) + "," + num(s.max_eig) + "," + num(s.lower_bound) + "," + num(s.upper_bound) + "\n";
  }
  write_text(dir / "elastic_spectrum.csv", out);
}

void scan_blowup_command(const RunConfig& c) {
  const fs::path dir = prepare(c);
  BlowupScanSpec spec;
  spec.configurations = c.blowup_configurations;
  spec.margin_min = c.blowup_margin_min;
  spec.margin_max = c.blowup_margin_max;
  spec.margins_per_decade = c.blowup_margins_per_decade;
  spec.assert_max = c.blowup_assert_max;
  spec.seed = c.seed;
  const BlowupScan scan = blowup_rate_scan(spec);
  std::string out = "config,theta,margin,lambda1,lambda2,lambda3,grad_norm,product,asserted\n";
  for (const auto& r : scan.rows)
    out += std::to_string(r.config) + "," + num(r.theta) + "," + num(r.margin) + "," + num(r.lambda[0]) + "," +
           num(r.lambda[1]) + "," + num(r.lambda[2]) + "," + num(r.grad_norm) + "," + num(r.product) + "," +
           (r.asserted ? "1" : "0") + "\n";
  write_text(dir / "blowup.csv", out);
  json summary = to_json(scan);
  summary.erase("rows");
  write_text(dir / "blowup.json", summary.dump(2) + "\n");
}

void boxdim_command(const RunConfig& c) {
  const fs::path dir = prepare(c);
  QField f;
  if (!c.snapshot.empty()) {
    f = read_snapshot(c.snapshot).field;
  } else {
    f = generate_initial(c.initial, make_grid(c), c.seed);
  }
  ContactOptions o;
  o.beta = c.beta;
  o.holder.seed = c.seed;
  const auto reports = contact_report(f, c.epsilons, o);
  std::string out = "epsilon,side,r,count\n";
  json doc = json::array();
  for (const auto& r : reports) {
    for (const auto& b : r.box_counts)
      out += num(r.epsilon) + "," + std::to_string(b.side) + "," + num(b.r) + "," + std::to_string(b.count) + "\n";
    doc.push_back(to_json(r));
  }
  write_text(dir / "boxdim.csv", out);
  write_text(dir / "boxdim.json", doc.dump(2) + "\n");
}

void gamma_study_command(const RunConfig& c) {
  const fs::path dir = prepare(c);
  SchemeConfig scheme = c.scheme;
  for (double n : c.n_list) {
    SchemeConfig a = scheme;
    a.kind = SchemeKind::approx_flow;
    a.approx_n = n;
    validate(a, c.params);
  }
  const QField q0 = generate_initial(c.initial, make_grid(c), c.seed);
  const GammaReport r = gamma_study(q0, c.horizon, c.n_list, scheme, c.params, c.snapshot_every);
  write_text(dir / "gamma.json", to_json(r).dump(2) + "\n");
  if (r.reference_stalled) throw StallError("singular reference run stalled");
  for (const auto& row : r.rows)
    if (row.stalled) throw StallError("approximate run stalled for n = " + num(row.n));
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return config_error;
  if (dynamic_cast<const StallError*>(&e)) return stalled;
  if (dynamic_cast<const IoError*>(&e)) return io_error;
  return failure;
}

json error_document(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return {{"error", {{"kind", err ? err->kind() : "internal"}, {"message", e.what()}}},
          {"exit_code", exit_code_for(e)}};
}

} // namespace qflow::cli

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "qflow/parallel.hpp"

using namespace qflow;

int main(int argc, char** argv) {
  CLI::App app{"Q-tensor gradient flow simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, output;
  int threads = 1;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option("--output", output, "output directory, overriding output.dir");
  app.add_option("--threads", threads, "worker threads for per-point loops")->check(CLI::PositiveNumber);
  app.add_option("--override", overrides, "key=value applied after the file; repeatable");

  struct Command {
    const char* name;
    const char* help;
    void (*fn)(const RunConfig&);
  };
  const Command commands[] = {
      {"run", "integrate a trajectory and write the time series, snapshots and report", cli::run_command},
      {"check-potential", "tabulate psi over a grid of eigenvalue triples", cli::check_potential_command},
      {"check-elastic", "per-mode spectra of the elastic operator", cli::check_elastic_command},
      {"scan-blowup", "scan |psi'| times the margin toward the boundary", cli::scan_blowup_command},
      {"boxdim", "box-counting report of near-contact sets", cli::boxdim_command},
      {"gamma-study", "compare envelope flows with the singular flow", cli::gamma_study_command},
  };
  const Command* chosen = nullptr;
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->callback([&chosen, &c] { chosen = &c; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::config_error;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& kv : overrides) apply_override(config, kv);
    if (!output.empty()) config.output_dir = output;
    set_thread_count(threads);
    chosen->fn(config);
    return cli::ok;
  } catch (const std::exception& e) {
    const auto doc = cli::error_document(e);
    std::cerr << doc.dump() << "\n";
    std::error_code ec;
    if (std::filesystem::is_directory(config.output_dir, ec)) {
      std::ofstream out(std::filesystem::path(config.output_dir) / "error.json");
      out << doc.dump(2) << "\n";
    }
    return cli::exit_code_for(e);
  }
}

#pragma once

#include <string>

#include <json.hpp>

#include "qflow/config.hpp"

namespace qflow::cli {

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, stalled = 3, io_error = 4 };

// Raised when a trajectory stalls; artifacts up to the stall are on disk.
class StallError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "stall"; }
};

// Each command validates, writes its artifacts under c.output_dir and
// returns normally on success.
void run_command(const RunConfig& c);
void check_potential_command(const RunConfig& c);
void check_elastic_command(const RunConfig& c);
void scan_blowup_command(const RunConfig& c);
void boxdim_command(const RunConfig& c);
void gamma_study_command(const RunConfig& c);

// Maps an exception to an exit code and its error document.
int exit_code_for(const std::exception& e);
nlohmann::json error_document(const std::exception& e);

} // namespace qflow::cli

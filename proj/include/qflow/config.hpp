#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qflow/elastic.hpp"
#include "qflow/flow.hpp"
#include "qflow/initial.hpp"

namespace qflow {

// Everything one CLI invocation needs.  Text form: one `key = value` per
// line with dotted sections, `#` comments, lists comma-separated.
struct RunConfig {
  int dim = 2;
  int n = 32;
  ElasticParams params;
  SchemeConfig scheme;
  double horizon = 1;
  int snapshot_every = 0;
  std::uint64_t seed = 1;
  InitialSpec initial;
  std::string output_dir = "out";

  std::vector<double> n_list{4, 16, 64, 256};

  double kappa = 1.0 / 12;
  std::vector<double> epsilons{1e-3, 1e-2};
  double beta = 0.5;
  std::string snapshot; // boxdim input; generated initial data when empty

  int potential_divisions = 12;
  double potential_margin_min = 0;

  int blowup_configurations = 21;
  double blowup_margin_min = 1e-6;
  double blowup_margin_max = 1e-1;
  int blowup_margins_per_decade = 4;
  double blowup_assert_max = 1e-2;
};

// Throws ConfigError on unknown keys or malformed values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path); // IoError when unreadable
void apply_override(RunConfig& c, const std::string& key_value);
void set_value(RunConfig& c, const std::string& key, const std::string& value);

// Canonical text; parse_config(serialize(c)) serializes back identically.
std::string serialize(const RunConfig& c);

// Validates the grid, the elastic constants, the scheme and the initial
// data before any compute.
void validate(const RunConfig& c);

SpectralGrid make_grid(const RunConfig& c);

std::uint64_t fnv1a64(const std::string& bytes);
std::string config_hash(const RunConfig& c); // "fnv1a64:<16 hex digits>"

std::string format_double(double v); // shortest round-trip form

} // namespace qflow

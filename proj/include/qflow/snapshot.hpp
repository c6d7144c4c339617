#pragma once

#include <string>

#include <json.hpp>

#include "qflow/field.hpp"

namespace qflow {

// A snapshot is `<stem>.json` (header) plus `<stem>.bin`: little-endian
// float64 values, grid points in row-major order with the five tensor
// coordinates fastest.
inline constexpr const char* kBasisId = "qflow-traceless-v1";

struct SnapshotFile {
  QField field;
  double t = 0;
  std::string config_hash;
  nlohmann::json header;
};

nlohmann::json snapshot_header(const SpectralGrid& g, double t, const std::string& config_hash);

// Throws IoError on any file failure and DomainError on a malformed header.
void write_snapshot(const std::string& stem, const QField& f, double t, const std::string& config_hash);
SnapshotFile read_snapshot(const std::string& stem);

} // namespace qflow

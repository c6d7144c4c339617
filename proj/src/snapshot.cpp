#include <bit>
#include <cstring>
#include <fstream>

#include "qflow/errors.hpp"
#include "qflow/snapshot.hpp"

namespace qflow {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xff) << (8 * (7 - i));
  return r;
}

} // namespace

nlohmann::json snapshot_header(const SpectralGrid& g, double t, const std::string& config_hash) {
  return {{"format", "qflow-snapshot"},
          {"version", 1},
          {"dim", g.dim()},
          {"n", g.n()},
          {"points", g.size()},
          {"components", 5},
          {"basis", kBasisId},
          {"basis_vectors", "E1=diag(1,-1,0)/sqrt2, E2=diag(1,1,-2)/sqrt6, E3=(e1e2+e2e1)/sqrt2, "
                            "E4=(e1e3+e3e1)/sqrt2, E5=(e2e3+e3e2)/sqrt2"},
          {"endianness", "little"},
          {"dtype", "float64"},
          {"layout", "row-major points, last axis fastest; 5 coordinates per point"},
          {"t", t},
          {"config_hash", config_hash}};
}

void write_snapshot(const std::string& stem, const QField& f, double t, const std::string& config_hash) {
  {
    std::ofstream h(stem + ".json", std::ios::binary);
    h << snapshot_header(f.grid, t, config_hash).dump(2) << "\n";
    if (!h) throw IoError("cannot write snapshot header '" + stem + ".json'");
  }
  std::vector<std::uint64_t> words(f.values.size());
  for (Index i = 0; i < f.values.size(); ++i) words[i] = to_little(std::bit_cast<std::uint64_t>(f.values.data()[i]));
  std::ofstream b(stem + ".bin", std::ios::binary);
  b.write(reinterpret_cast<const char*>(words.data()), std::streamsize(words.size() * 8));
  if (!b) throw IoError("cannot write snapshot data '" + stem + ".bin'");
}

SnapshotFile read_snapshot(const std::string& stem) {
  std::ifstream h(stem + ".json", std::ios::binary);
  if (!h) throw IoError("cannot read snapshot header '" + stem + ".json'");
  SnapshotFile out;
  try {
    out.header = nlohmann::json::parse(h);
    if (out.header.at("format") != "qflow-snapshot" || out.header.at("basis") != kBasisId ||
        out.header.at("endianness") != "little" || out.header.at("dtype") != "float64" ||
        out.header.at("components") != 5)
      throw DomainError("unsupported snapshot header in '" + stem + ".json'");
    out.field = QField(SpectralGrid(out.header.at("dim").get<int>(), out.header.at("n").get<int>()));
    out.t = out.header.at("t").get<double>();
    out.config_hash = out.header.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("malformed snapshot header '" + stem + ".json': " + e.what());
  }
  std::ifstream b(stem + ".bin", std::ios::binary);
  if (!b) throw IoError("cannot read snapshot data '" + stem + ".bin'");
  std::vector<std::uint64_t> words(out.field.values.size());
  b.read(reinterpret_cast<char*>(words.data()), std::streamsize(words.size() * 8));
  if (b.gcount() != std::streamsize(words.size() * 8) || b.peek() != std::char_traits<char>::eof())
    throw IoError("snapshot data '" + stem + ".bin' has the wrong size");
  for (Index i = 0; i < out.field.values.size(); ++i)
    out.field.values.data()[i] = std::bit_cast<double>(to_little(words[i]));
  return out;
}

} // namespace qflow

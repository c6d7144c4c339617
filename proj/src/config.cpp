#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "qflow/config.hpp"
#include "qflow/errors.hpp"

namespace qflow {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("key '" + key + "': expected a finite number, got '" + v + "'");
  return out;
}

template <typename Int> Int parse_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define QF_DOUBLE(name, member)                                                                  \
  Field {                                                                                        \
    name, [](const RunConfig& c) { return format_double(c.member); },                             \
        [](RunConfig& c, const std::string& v) { c.member = parse_double(name, v); }              \
  }
#define QF_INT(name, member, type)                                                               \
  Field {                                                                                        \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                            \
        [](RunConfig& c, const std::string& v) { c.member = parse_int<type>(name, v); }           \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      QF_INT("grid.dim", dim, int),
      QF_INT("grid.n", n, int),
      QF_DOUBLE("elastic.L1", params.L1),
      QF_DOUBLE("elastic.L2", params.L2),
      QF_DOUBLE("elastic.L3", params.L3),
      QF_DOUBLE("elastic.alpha", params.alpha),
      QF_DOUBLE("elastic.poincare_constant", params.poincare_constant),
      Field{"scheme.kind", [](const RunConfig& c) { return to_string(c.scheme.kind); },
            [](RunConfig& c, const std::string& v) { c.scheme.kind = scheme_from_string(v); }},
      QF_DOUBLE("scheme.tau", scheme.tau),
      QF_DOUBLE("scheme.inner_tol", scheme.inner_tol),
      QF_DOUBLE("scheme.stationarity_tol", scheme.stationarity_tol),
      QF_INT("scheme.max_inner", scheme.max_inner, int),
      QF_DOUBLE("scheme.backtrack_factor", scheme.backtrack_factor),
      QF_INT("scheme.max_retries", scheme.max_retries, int),
      QF_DOUBLE("scheme.approx_n", scheme.approx_n),
      QF_DOUBLE("run.horizon", horizon),
      QF_INT("run.snapshot_every", snapshot_every, int),
      QF_INT("run.seed", seed, std::uint64_t),
      Field{"initial.kind", [](const RunConfig& c) { return to_string(c.initial.kind); },
            [](RunConfig& c, const std::string& v) { c.initial.kind = initial_kind_from_string(v); }},
      QF_DOUBLE("initial.s", initial.s),
      Field{"initial.axis",
            [](const RunConfig& c) {
              return format_list({c.initial.axis[0], c.initial.axis[1], c.initial.axis[2]});
            },
            [](RunConfig& c, const std::string& v) {
              const auto a = parse_list("initial.axis", v);
              if (a.size() != 3) throw ConfigError("key 'initial.axis': expected three components");
              c.initial.axis = Vector3d(a[0], a[1], a[2]);
            }},
      QF_INT("initial.kmax", initial.kmax, int),
      QF_DOUBLE("initial.margin_min", initial.margin_min),
      Field{"initial.geometry", [](const RunConfig& c) { return to_string(c.initial.geometry); },
            [](RunConfig& c, const std::string& v) { c.initial.geometry = geometry_from_string(v); }},
      Field{"initial.profile", [](const RunConfig& c) { return to_string(c.initial.profile); },
            [](RunConfig& c, const std::string& v) { c.initial.profile = profile_from_string(v); }},
      QF_DOUBLE("initial.floor", initial.floor),
      QF_DOUBLE("initial.top", initial.top),
      Field{"output.dir", [](const RunConfig& c) { return c.output_dir; },
            [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      Field{"gamma.n_list", [](const RunConfig& c) { return format_list(c.n_list); },
            [](RunConfig& c, const std::string& v) { c.n_list = parse_list("gamma.n_list", v); }},
      QF_DOUBLE("diagnostics.kappa", kappa),
      Field{"diagnostics.epsilons", [](const RunConfig& c) { return format_list(c.epsilons); },
            [](RunConfig& c, const std::string& v) { c.epsilons = parse_list("diagnostics.epsilons", v); }},
      QF_DOUBLE("diagnostics.beta", beta),
      Field{"diagnostics.snapshot", [](const RunConfig& c) { return c.snapshot; },
            [](RunConfig& c, const std::string& v) { c.snapshot = v; }},
      QF_INT("potential.divisions", potential_divisions, int),
      QF_DOUBLE("potential.margin_min", potential_margin_min),
      QF_INT("blowup.configurations", blowup_configurations, int),
      QF_DOUBLE("blowup.margin_min", blowup_margin_min),
      QF_DOUBLE("blowup.margin_max", blowup_margin_max),
      QF_INT("blowup.margins_per_decade", blowup_margins_per_decade, int),
      QF_DOUBLE("blowup.assert_max", blowup_assert_max),
  };
  return table;
}

#undef QF_DOUBLE
#undef QF_INT

} // namespace

void set_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (key == f.key) {
      f.set(c, value);
      return;
    }
  throw ConfigError("unknown configuration key '" + key + "'");
}

void apply_override(RunConfig& c, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + key_value + "' is not of the form key=value");
  set_value(c, trim(key_value.substr(0, eq)), trim(key_value.substr(eq + 1)));
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    apply_override(c, line);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const RunConfig& c) {
  std::string out = "# qflow configuration\n";
  std::string section;
  for (const auto& f : fields()) {
    const std::string key = f.key;
    const std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      if (!section.empty()) out += "\n";
      section = sec;
    }
    out += key + " = " + f.get(c) + "\n";
  }
  return out;
}

void validate(const RunConfig& c) {
  if (c.dim != 2 && c.dim != 3) throw ConfigError("grid.dim must be 2 or 3");
  if (c.n < 2 || (c.n & (c.n - 1)) != 0) throw ConfigError("grid.n must be a power of two >= 2");
  validate(c.params);
  validate(c.scheme, c.params);
  if (!(c.horizon > 0)) throw ConfigError("run.horizon must be positive");
  if (c.snapshot_every < 0) throw ConfigError("run.snapshot_every must be non-negative");
  validate(c.initial, c.dim);
  for (double n : c.n_list)
    if (!(n > 0)) throw ConfigError("gamma.n_list entries must be positive");
  if (!(c.kappa > 0 && c.kappa < 1.0 / 6)) throw ConfigError("diagnostics.kappa must lie in (0, 1/6)");
  for (double e : c.epsilons)
    if (!(e > 0)) throw ConfigError("diagnostics.epsilons entries must be positive");
  if (!(c.beta > 0 && c.beta < 1)) throw ConfigError("diagnostics.beta must lie in (0, 1)");
  if (c.potential_divisions < 3) throw ConfigError("potential.divisions must be at least 3");
  if (c.blowup_configurations < 1 || c.blowup_margins_per_decade < 1)
    throw ConfigError("blowup scan sizes must be positive");
  if (!(c.blowup_margin_min > 0 && c.blowup_margin_min < c.blowup_margin_max && c.blowup_margin_max < 1.0 / 3))
    throw ConfigError("blowup margins must satisfy 0 < min < max < 1/3");
}

SpectralGrid make_grid(const RunConfig& c) {
  try {
    return SpectralGrid(c.dim, c.n);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(serialize(c))));
  return buf;
}

} // namespace qflow

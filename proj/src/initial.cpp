#include <cmath>
#include <limits>
#include <numbers>

#include "qflow/errors.hpp"
#include "qflow/initial.hpp"
#include "qflow/random.hpp"

namespace qflow {

using std::numbers::pi;

std::string to_string(InitialKind k) {
  switch (k) {
  case InitialKind::zero: return "zero";
  case InitialKind::uniform_uniaxial: return "uniform_uniaxial";
  case InitialKind::random_bandlimited: return "random_bandlimited";
  case InitialKind::near_boundary: return "near_boundary";
  }
  return "zero";
}

std::string to_string(ContactGeometry g) {
  switch (g) {
  case ContactGeometry::point: return "point";
  case ContactGeometry::line: return "line";
  case ContactGeometry::plane: return "plane";
  }
  return "point";
}

std::string to_string(MarginProfile m) { return m == MarginProfile::linear ? "linear" : "quadratic"; }

InitialKind initial_kind_from_string(const std::string& s) {
  for (auto k : {InitialKind::zero, InitialKind::uniform_uniaxial, InitialKind::random_bandlimited,
                 InitialKind::near_boundary})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown initial data kind '" + s + "'");
}

ContactGeometry geometry_from_string(const std::string& s) {
  for (auto g : {ContactGeometry::point, ContactGeometry::line, ContactGeometry::plane})
    if (s == to_string(g)) return g;
  throw ConfigError("unknown contact geometry '" + s + "'");
}

MarginProfile profile_from_string(const std::string& s) {
  if (s == "quadratic") return MarginProfile::quadratic;
  if (s == "linear") return MarginProfile::linear;
  throw ConfigError("unknown margin profile '" + s + "'");
}

void validate(const InitialSpec& s, int dim) {
  switch (s.kind) {
  case InitialKind::zero: return;
  case InitialKind::uniform_uniaxial:
    if (!(s.s > -0.5 && s.s < 1)) throw ConfigError("uniaxial order parameter must lie in (-1/2, 1)");
    if (!(s.axis.norm() > 0) || !s.axis.allFinite()) throw ConfigError("uniaxial axis must be a nonzero vector");
    return;
  case InitialKind::random_bandlimited:
    if (s.kmax < 0) throw ConfigError("kmax must be non-negative");
    if (!(s.margin_min > 0 && s.margin_min < 1.0 / 3)) throw ConfigError("margin floor must lie in (0, 1/3)");
    return;
  case InitialKind::near_boundary:
    if (!(s.floor > 0 && s.floor < 1.0 / 3)) throw ConfigError("margin floor must lie in (0, 1/3)");
    if (!(s.top > s.floor && s.top <= 1.0 / 3)) throw ConfigError("margin top must lie in (floor, 1/3]");
    if (s.geometry == ContactGeometry::plane && dim != 3) throw ConfigError("a contact plane needs a 3D grid");
    return;
  }
}

namespace {

QField bandlimited(const InitialSpec& spec, const SpectralGrid& g, std::uint64_t seed) {
  const CounterRng rng(seed, 1);
  const int k = spec.kmax, kz = g.dim() == 3 ? k : 0;
  QField f(g);
  std::uint64_t mode = 0;
  for (int i = -k; i <= k; ++i)
    for (int j = -k; j <= k; ++j)
      for (int l = -kz; l <= kz; ++l) {
        const int first = i != 0 ? i : (j != 0 ? j : l);
        if (first <= 0) continue; // one of each +-m pair, no mean
        const CounterRng r = rng.split(mode++);
        Vector5d a, b;
        for (int c = 0; c < 5; ++c) {
          a[c] = r.uniform(c, -1, 1);
          b[c] = r.uniform(5 + c, -1, 1);
        }
        const Vector3d m(i, j, l);
        for (Index p = 0; p < g.size(); ++p) {
          const double th = 2 * pi * m.dot(g.position(p));
          f.values.col(p) += a * std::cos(th) + b * std::sin(th);
        }
      }
  // largest scale keeping every point at margin >= margin_min
  double scale = std::numeric_limits<double>::infinity();
  for (Index p = 0; p < g.size(); ++p) {
    const Vector3d lam = eigen(f.at(p)).lambda;
    if (lam[0] < 0) scale = std::min(scale, (1.0 / 3 - spec.margin_min) / -lam[0]);
    if (lam[2] > 0) scale = std::min(scale, (2.0 / 3 - spec.margin_min) / lam[2]);
  }
  if (std::isfinite(scale)) f.values *= scale * (1 - 1e-12);
  return f;
}

QField near_boundary(const InitialSpec& spec, const SpectralGrid& g, std::uint64_t seed) {
  const Matrix3d frame = random_rotation(CounterRng(seed, 2), 0);
  const int transverse = spec.geometry == ContactGeometry::point  ? g.dim()
                         : spec.geometry == ContactGeometry::line ? g.dim() - 1
                                                                  : g.dim() - 2;
  QField f(g);
  for (Index p = 0; p < g.size(); ++p) {
    const Vector3d x = g.position(p);
    double shape = 0;
    for (int a = 0; a < transverse; ++a) {
      const double s = std::sin(pi * (x[a] - 0.5));
      shape += spec.profile == MarginProfile::quadratic ? s * s : std::abs(s);
    }
    shape /= transverse;
    const double m = spec.floor + (spec.top - spec.floor) * shape;
    f.set(p, QTensor::from_eigenvalues(Vector3d(-1.0 / 3 + m, (1.0 / 3 - m) / 2, (1.0 / 3 - m) / 2), frame));
  }
  return f;
}

} // namespace

QField generate_initial(const InitialSpec& spec, const SpectralGrid& g, std::uint64_t seed) {
  validate(spec, g.dim());
  switch (spec.kind) {
  case InitialKind::zero: return QField(g);
  case InitialKind::uniform_uniaxial: {
    QField f(g);
    const QTensor q = QTensor::uniaxial(spec.s, spec.axis);
    for (Index p = 0; p < g.size(); ++p) f.set(p, q);
    return f;
  }
  case InitialKind::random_bandlimited: return bandlimited(spec, g, seed);
  case InitialKind::near_boundary: return near_boundary(spec, g, seed);
  }
  return QField(g);
}

} // namespace qflow

#include <algorithm>
#include <array>
#include <cmath>
#include <bit>
#include <numbers>
#include <sstream>
#include <vector>

#include "qflow/potential.hpp"

namespace qflow {
namespace {

struct GaussLegendre {
  std::vector<double> x; // nodes on [0, 1]
  std::vector<double> w;
};

GaussLegendre make_gauss_legendre(int n) {
  GaussLegendre g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
    }
    const double w = 2 / ((1 - z * z) * dp * dp);
    g.x[i] = 0.5 * (1 - z);
    g.x[n - 1 - i] = 0.5 * (1 + z);
    g.w[i] = g.w[n - 1 - i] = 0.5 * w;
  }
  return g;
}

const GaussLegendre& gauss_legendre(int n) {
  // Powers of two from 2 to 1024.
  static const std::vector<GaussLegendre> table = [] {
    std::vector<GaussLegendre> t;
    for (int k = 2; k <= 1024; k *= 2) t.push_back(make_gauss_legendre(k));
    return t;
  }();
  if (n < 2 || n > 1024 || (n & (n - 1)) != 0)
    throw DomainError("gauss_legendre: node count must be a power of two up to 1024");
  return table[std::countr_zero(unsigned(n)) - 1];
}

// Composite rule on [0, length] whose panels double in width away from the
// origin, starting from `scale`; the integrands peak at the origin with
// width about `scale`.
void graded_rule(double length, double scale, int n, std::vector<double>& x,
                 std::vector<double>& w, int& panels) {
  const GaussLegendre& g = gauss_legendre(n);
  x.clear();
  w.clear();
  panels = 0;
  auto add_panel = [&](double a, double b) {
    for (int i = 0; i < n; ++i) {
      x.push_back(a + (b - a) * g.x[i]);
      w.push_back((b - a) * g.w[i]);
    }
    ++panels;
  };
  if (!(scale < 0.5 * length)) {
    add_panel(0, length);
    return;
  }
  double a = 0, b = scale;
  while (b < 0.75 * length) {
    add_panel(a, b);
    a = b;
    b *= 2;
  }
  add_panel(a, length);
}

double peak_scale(double curvature) {
  return curvature > 0 ? 1 / std::sqrt(curvature) : 1e300;
}

// J_k(c) = integral over t in [0, pi/2] of sin^{2k} t exp(-c sin^2 t), k = 0, 1, 2.
// With y = sin^2 t these are confluent hypergeometric functions.  Small c
// uses the Kummer-transformed series (positive terms), large c the
// asymptotic expansion in 1/c whose error is of order exp(-c).
constexpr double kSeriesLimit = 200;

std::array<double, 3> azimuthal_series(double c) {
  constexpr double pi = std::numbers::pi;
  double a = 1, s0 = 0, s1 = 0, s2 = 0;
  for (int j = 0; j < 2000; ++j) {
    s0 += a;
    s1 += a / (j + 1);
    s2 += a / ((j + 1.0) * (j + 2.0));
    if (a < 1e-17 * s0 && j > c) break;
    a *= (0.5 + j) * c / ((j + 1.0) * (j + 1.0));
  }
  const double e = std::exp(-c);
  return {0.5 * pi * e * s0, 0.25 * pi * e * s1, 0.375 * pi * e * s2};
}

// Valid for c > kSeriesLimit, where the terms decrease for the first
// kSeriesLimit indices and 60 of them reach rounding level.
std::array<double, 3> azimuthal_asymptotic(double c) {
  static const auto ratio = [] {
    std::array<std::array<double, 60>, 3> r{};
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 60; ++j) r[k][j] = (0.5 + j) * (k + 0.5 + j) / (j + 1.0);
    return r;
  }();
  std::array<double, 3> out{};
  const double ic = 1 / c;
  double lead = 0.5 * std::sqrt(std::numbers::pi * ic);
  for (int k = 0; k < 3; ++k) {
    double g = lead, sum = 0;
    for (int j = 0; j < 60; ++j) {
      sum += g;
      g *= ratio[k][j] * ic;
      if (g < 1e-17 * sum) break;
    }
    out[k] = sum;
    lead *= (k + 0.5) * ic;
  }
  return out;
}

// Piecewise Chebyshev interpolants of the series on [0, kSeriesLimit];
// panels of width 2 with degree 16 resolve these entire functions to
// rounding level.
struct AzimuthalTable {
  static constexpr int kDegree = 16;
  static constexpr double kWidth = 2;
  static constexpr int kPanels = int(kSeriesLimit / kWidth);
  std::array<std::array<std::array<double, kDegree + 1>, 3>, kPanels> coef{};

  AzimuthalTable() {
    constexpr int m = kDegree + 1;
    for (int p = 0; p < kPanels; ++p) {
      std::array<std::array<double, 3>, m> f;
      for (int i = 0; i < m; ++i) {
        const double x = std::cos(std::numbers::pi * (i + 0.5) / m);
        f[i] = azimuthal_series(kWidth * (p + 0.5 + 0.5 * x));
      }
      for (int k = 0; k < 3; ++k) {
        for (int j = 0; j < m; ++j) {
          double s = 0;
          for (int i = 0; i < m; ++i) s += f[i][k] * std::cos(std::numbers::pi * j * (i + 0.5) / m);
          coef[p][k][j] = (j == 0 ? 1.0 : 2.0) * s / m;
        }
      }
    }
  }

  std::array<double, 3> operator()(double c) const {
    const int p = std::min(kPanels - 1, int(c / kWidth));
    const double x = 2 * (c / kWidth - p) - 1;
    const double x2 = 2 * x;
    std::array<double, 3> out;
    for (int k = 0; k < 3; ++k) {
      const auto& a = coef[p][k];
      double b1 = 0, b2 = 0;
      for (int j = kDegree; j >= 1; --j) {
        const double b0 = a[j] + x2 * b1 - b2;
        b2 = b1;
        b1 = b0;
      }
      out[k] = a[0] + x * b1 - b2;
    }
    return out;
  }
};

std::array<double, 3> azimuthal_integrals(double c) {
  static const AzimuthalTable table;
  return c <= kSeriesLimit ? table(c) : azimuthal_asymptotic(c);
}

struct Level {
  double s0 = 0;
  // indices: 0 pole (smallest nu), 1 mid, 2 top
  std::array<double, 3> m{};
  double pp = 0, pm = 0, mm = 0;
  int panels = 0;
};

// Pole u = p_pole in [0,1]; the remaining circle is p_mid = s sin t,
// p_top = s cos t with s^2 = 1 - u^2.  Exponent shifted by nu_top:
// -a u^2 - b s^2 sin^2 t.  The t integral is done in closed form.
Level integrate(double a, double b, int n) {
  thread_local std::vector<double> xu, wu;
  int pu = 0;
  graded_rule(1.0, peak_scale(a), n, xu, wu, pu);
  double s0 = 0, su = 0, smid = 0, stop = 0, suu = 0, sum = 0, smm = 0;
  for (std::size_t i = 0; i < xu.size(); ++i) {
    const double u = xu[i];
    const double u2 = u * u;
    const double s2 = 1 - u2;
    const double eu = wu[i] * std::exp(-a * u2);
    if (eu == 0) continue;
    const auto [j0, j1, j2] = azimuthal_integrals(b * s2);
    s0 += eu * j0;
    su += eu * u2 * j0;
    smid += eu * s2 * j1;
    stop += eu * s2 * (j0 - j1);
    suu += eu * u2 * u2 * j0;
    sum += eu * u2 * s2 * j1;
    smm += eu * s2 * s2 * j2;
  }
  Level lv;
  lv.s0 = s0;
  lv.m = {su / s0, smid / s0, stop / s0};
  lv.pp = suu / s0 - lv.m[0] * lv.m[0];
  lv.pm = sum / s0 - lv.m[0] * lv.m[1];
  lv.mm = smm / s0 - lv.m[1] * lv.m[1];
  lv.panels = pu;
  return lv;
}

} // namespace

PartitionData log_partition(const Vector3d& nu, const QuadratureOptions& opt) {
  if (!nu.allFinite()) throw DomainError("log_partition: non-finite exponent");
  std::array<int, 3> ord = {0, 1, 2};
  std::sort(ord.begin(), ord.end(), [&](int i, int j) { return nu[i] < nu[j]; });
  const double top = nu[ord[2]];
  const double a = top - nu[ord[0]];
  const double b = top - nu[ord[1]];

  Level prev;
  bool have_prev = false;
  for (int n = opt.min_nodes; n <= opt.max_nodes; n *= 2) {
    const Level cur = integrate(a, b, n);
    if (have_prev) {
      const double dz = std::abs(cur.s0 - prev.s0) / cur.s0;
      double dm = 0;
      for (int k = 0; k < 3; ++k) dm = std::max(dm, std::abs(cur.m[k] - prev.m[k]));
      if (dz < opt.tolerance && dm < opt.tolerance) {
        PartitionData out;
        // The symmetric octant covers one eighth of the sphere.
        out.log_z = top + std::log(8 * cur.s0);
        // Rows of the covariance sum to zero because sum p_i^2 = 1; the
        // top row is recovered from that identity instead of from a
        // difference of nearly equal numbers.
        Eigen::Matrix3d c;
        c(0, 0) = cur.pp;
        c(0, 1) = c(1, 0) = cur.pm;
        c(1, 1) = cur.mm;
        c(0, 2) = c(2, 0) = -(cur.pp + cur.pm);
        c(1, 2) = c(2, 1) = -(cur.pm + cur.mm);
        c(2, 2) = cur.pp + 2 * cur.pm + cur.mm;
        for (int i = 0; i < 3; ++i) {
          out.moments[ord[i]] = cur.m[i];
          for (int j = 0; j < 3; ++j) out.covariance(ord[i], ord[j]) = c(i, j);
        }
        out.nodes_per_panel = n;
        out.panels = cur.panels;
        return out;
      }
    }
    prev = cur;
    have_prev = true;
  }
  std::ostringstream msg;
  msg.precision(17);
  msg << "log_partition: node doubling did not converge by " << opt.max_nodes
      << " nodes per panel for nu = (" << nu[0] << ", " << nu[1] << ", " << nu[2]
      << "); last two iterates of the scaled integral: " << prev.s0;
  const Level last = integrate(a, b, opt.max_nodes / 2);
  msg << " and " << last.s0;
  throw ConvergenceError(msg.str(), std::abs(prev.s0 - last.s0) / prev.s0);
}

} // namespace qflow

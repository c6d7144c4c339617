#include <numbers>
#include <sstream>

#include "qflow/elastic.hpp"

namespace qflow {

void validate(const ElasticParams& p) {
  std::ostringstream msg;
  if (!std::isfinite(p.L1) || !std::isfinite(p.L2) || !std::isfinite(p.L3) ||
      !std::isfinite(p.alpha) || !std::isfinite(p.poincare_constant))
    msg << "elastic constants must be finite";
  else if (!(legendre_margin(p) > 0))
    msg << "elastic constants violate L1 > 3|L2 + L3| (L1 = " << p.L1
        << ", L2 + L3 = " << anisotropy(p) << ")";
  else if (p.alpha < 0)
    msg << "alpha must be non-negative";
  else if (p.poincare_constant < 0)
    msg << "poincare_constant must be non-negative";
  else
    return;
  throw ConfigError(msg.str());
}

double constant_CL(const ElasticParams& p) {
  const double a = std::abs(anisotropy(p));
  const double s = p.L1 + a;
  return 1 / (2 * (p.L1 - a)) * std::sqrt(s / (s - 2 * std::sqrt(p.L1 * a)));
}

double spectral_gap_poincare() { return 1 / (2 * std::numbers::pi); }

double power_poincare(int dim) { return std::pow(2 * std::numbers::pi, dim); }

double poincare_constant(const ElasticParams& p, int dim) {
  return p.poincare_constant > 0 ? p.poincare_constant : power_poincare(dim);
}

double decay_rate_bound(const ElasticParams& p, double c) {
  return 4 * (-(p.L1 - std::abs(anisotropy(p))) / (c * c) + p.alpha);
}

double decay_hypothesis_margin(const ElasticParams& p, double c) {
  return legendre_margin(p) - p.alpha * c * c;
}

namespace {

const std::array<Matrix3d, 5>& basis() {
  static const std::array<Matrix3d, 5> b = [] {
    std::array<Matrix3d, 5> out;
    for (int i = 0; i < 5; ++i) out[i] = basis_matrix<double>(i);
    return out;
  }();
  return b;
}

} // namespace

Matrix5d mode_operator(const Matrix3d& kk, const ElasticParams& p) {
  const double l = anisotropy(p);
  const double k2 = kk.trace();
  Matrix5d m = 2 * p.L1 * k2 * Matrix5d::Identity();
  if (l == 0) return m;
  const auto& e = basis();
  for (int j = 0; j < 5; ++j) {
    const Matrix3d ek = e[j] * kk;
    const Matrix3d img = ek + ek.transpose() - (2.0 / 3) * ek.trace() * Matrix3d::Identity();
    for (int i = 0; i <= j; ++i) {
      const double v = l * e[i].cwiseProduct(img).sum();
      m(i, j) += v;
      if (i != j) m(j, i) += v;
    }
  }
  return m;
}

Matrix5d mode_operator(const Vector3d& k, const ElasticParams& p) {
  return mode_operator(Matrix3d(k * k.transpose()), p);
}

ModeSpectrum mode_spectrum(const Matrix3d& kk, const ElasticParams& p) {
  Eigen::SelfAdjointEigenSolver<Matrix5d> es(mode_operator(kk, p), Eigen::EigenvaluesOnly);
  const double k2 = kk.trace();
  const double l = std::abs(anisotropy(p));
  return {es.eigenvalues()[0], es.eigenvalues()[4], 2 * (p.L1 - l) * k2, 2 * (p.L1 + l) * k2};
}

ElasticOperator::ElasticOperator(const SpectralGrid& g, const ElasticParams& p)
    : grid_(g), params_(p) {}

SpectralCoeffs ElasticOperator::apply(const SpectralCoeffs& c) const {
  SpectralCoeffs out(5, c.cols());
  for (Index p = 0; p < c.cols(); ++p) {
    const Matrix5d a = mode(p);
    out.col(p).real() = a * c.col(p).real();
    out.col(p).imag() = a * c.col(p).imag();
  }
  return out;
}

double ElasticOperator::energy(const SpectralCoeffs& c) const {
  std::vector<double> t(c.cols());
  for (Index p = 0; p < c.cols(); ++p) {
    const Matrix5d a = mode(p);
    const Vector5d re = c.col(p).real(), im = c.col(p).imag();
    t[p] = 0.5 * (re.dot(a * re) + im.dot(a * im));
  }
  return tree_sum(t);
}

ShiftedInverse::ShiftedInverse(const ElasticOperator& op, double c0, double c1)
    : c0_(c0), c1_(c1), inverse_(op.grid().size()) {
  for (Index p = 0; p < op.grid().size(); ++p) {
    const Matrix5d m = c0 * Matrix5d::Identity() + c1 * op.mode(p);
    Eigen::LLT<Matrix5d> llt(m);
    if (llt.info() != Eigen::Success) throw DomainError("shifted elastic operator is not positive");
    inverse_[p] = llt.solve(Matrix5d::Identity());
  }
}

SpectralCoeffs ShiftedInverse::solve(const SpectralCoeffs& rhs) const {
  SpectralCoeffs out(5, rhs.cols());
  for (Index p = 0; p < rhs.cols(); ++p) {
    out.col(p).real() = inverse_[p] * rhs.col(p).real();
    out.col(p).imag() = inverse_[p] * rhs.col(p).imag();
  }
  return out;
}

double elastic_energy(const QField& f, const ElasticParams& p) {
  return ElasticOperator(f.grid, p).energy(fft_forward(f));
}

QField elastic_gradient(const QField& f, const ElasticParams& p) {
  return fft_inverse(f.grid, ElasticOperator(f.grid, p).apply(fft_forward(f)));
}

QField laplacian(const QField& f) {
  SpectralCoeffs c = fft_forward(f);
  for (Index p = 0; p < c.cols(); ++p) c.col(p) *= -f.grid.wave_tensor(p).trace();
  return fft_inverse(f.grid, c);
}

double gradient_norm_sq(const QField& f) {
  const SpectralCoeffs c = fft_forward(f);
  std::vector<double> t(c.cols());
  for (Index p = 0; p < c.cols(); ++p) t[p] = f.grid.wave_tensor(p).trace() * c.col(p).squaredNorm();
  return tree_sum(t);
}

double laplacian_norm_sq(const QField& f) {
  const SpectralCoeffs c = fft_forward(f);
  std::vector<double> t(c.cols());
  for (Index p = 0; p < c.cols(); ++p) {
    const double k2 = f.grid.wave_tensor(p).trace();
    t[p] = k2 * k2 * c.col(p).squaredNorm();
  }
  return tree_sum(t);
}

QTensor mean_value(const QField& f) {
  std::vector<double> t(f.size());
  Vector5d m;
  for (int i = 0; i < 5; ++i) {
    for (Index p = 0; p < f.size(); ++p) t[p] = f.values(i, p);
    m[i] = tree_sum(t) * f.grid.cell_volume();
  }
  return QTensor(m);
}

} // namespace qflow

#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "qflow/field.hpp"

namespace qflow {

SpectralGrid::SpectralGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim != 2 && dim != 3) throw DomainError("grid dimension must be 2 or 3");
  if (n < 2 || (n & (n - 1)) != 0) throw DomainError("points per axis must be a power of two");
  size_ = 1;
  for (int d = 0; d < dim; ++d) size_ *= n;
}

std::array<int, 3> SpectralGrid::multi_index(Index p) const {
  std::array<int, 3> i{0, 0, 0};
  for (int d = dim_ - 1; d >= 0; --d) {
    i[d] = int(p % n_);
    p /= n_;
  }
  return i;
}

Index SpectralGrid::flat_index(const std::array<int, 3>& i) const {
  Index p = 0;
  for (int d = 0; d < dim_; ++d) p = p * n_ + ((i[d] % n_) + n_) % n_;
  return p;
}

std::array<int, 3> SpectralGrid::mode(Index p) const {
  std::array<int, 3> m = multi_index(p);
  for (int d = 0; d < dim_; ++d) m[d] = wavenumber(m[d]);
  return m;
}

Vector3d SpectralGrid::wavevector(Index p) const {
  const auto m = mode(p);
  return 2 * std::numbers::pi * Vector3d(m[0], m[1], m[2]);
}

Matrix3d SpectralGrid::wave_tensor(Index p) const {
  const auto idx = multi_index(p);
  const Vector3d k = wavevector(p);
  Matrix3d kk = k * k.transpose();
  for (int d = 0; d < dim_; ++d) {
    if (!is_nyquist(idx[d])) continue;
    for (int e = 0; e < 3; ++e)
      if (e != d) kk(d, e) = kk(e, d) = 0;
  }
  return kk;
}

Vector3d SpectralGrid::position(Index p) const {
  const auto i = multi_index(p);
  return Vector3d(i[0], i[1], i[2]) / double(n_);
}

QField::QField(const SpectralGrid& g, Coeffs v) : grid(g), values(std::move(v)) {
  if (values.cols() != g.size()) throw DomainError("field size does not match its grid");
  if (!values.allFinite()) throw DomainError("field has non-finite coordinates");
}

QField& QField::operator+=(const QField& o) {
  if (grid != o.grid) throw DomainError("fields live on different grids");
  values += o.values;
  return *this;
}

QField& QField::operator-=(const QField& o) {
  if (grid != o.grid) throw DomainError("fields live on different grids");
  values -= o.values;
  return *this;
}

QField& QField::operator*=(double s) {
  values *= s;
  return *this;
}

double tree_sum(std::span<const double> terms) {
  if (terms.size() <= 8) {
    double s = 0;
    for (double t : terms) s += t;
    return s;
  }
  const std::size_t half = terms.size() / 2;
  return tree_sum(terms.first(half)) + tree_sum(terms.subspan(half));
}

double inner(const QField& a, const QField& b) {
  if (a.grid != b.grid) throw DomainError("fields live on different grids");
  std::vector<double> t(a.size());
  for (Index p = 0; p < a.size(); ++p) t[p] = a.values.col(p).dot(b.values.col(p));
  return tree_sum(t) * a.grid.cell_volume();
}

double l2_norm_sq(const QField& f) { return inner(f, f); }
double l2_norm(const QField& f) { return std::sqrt(l2_norm_sq(f)); }

namespace {

// In-place transform of all five components along every axis.
void transform(const SpectralGrid& g, SpectralCoeffs& c, bool forward) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  const int n = g.n();
  std::vector<std::complex<double>> in(n), out(n);
  for (int axis = 0; axis < g.dim(); ++axis) {
    Index stride = 1;
    for (int d = g.dim() - 1; d > axis; --d) stride *= n;
    for (Index start = 0; start < g.size(); ++start) {
      // lines begin where the axis index is zero
      if ((start / stride) % n != 0) continue;
      for (int comp = 0; comp < 5; ++comp) {
        for (int i = 0; i < n; ++i) in[i] = c(comp, start + i * stride);
        if (forward)
          fft.fwd(out, in);
        else
          fft.inv(out, in);
        for (int i = 0; i < n; ++i) c(comp, start + i * stride) = out[i];
      }
    }
  }
}

} // namespace

SpectralCoeffs fft_forward(const QField& f) {
  SpectralCoeffs c = f.values.cast<std::complex<double>>();
  transform(f.grid, c, true);
  c /= double(f.grid.size());
  return c;
}

QField fft_inverse(const SpectralGrid& g, const SpectralCoeffs& c, double* max_imag) {
  if (c.cols() != g.size()) throw DomainError("coefficient count does not match the grid");
  SpectralCoeffs x = c;
  transform(g, x, false);
  if (max_imag != nullptr) *max_imag = x.imag().cwiseAbs().maxCoeff();
  return QField(g, x.real());
}

double spectral_norm_sq(const SpectralCoeffs& c) {
  std::vector<double> t(c.cols());
  for (Index p = 0; p < c.cols(); ++p) t[p] = c.col(p).squaredNorm();
  return tree_sum(t);
}

} // namespace qflow

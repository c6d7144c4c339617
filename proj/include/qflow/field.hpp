#pragma once

#include <array>
#include <complex>
#include <span>

#include "qflow/tensor.hpp"

namespace qflow {

using Index = Eigen::Index;
using Coeffs = Eigen::Matrix<double, 5, Eigen::Dynamic>;
using SpectralCoeffs = Eigen::Matrix<std::complex<double>, 5, Eigen::Dynamic>;

// Uniform grid on the unit torus [0,1)^dim with n points per axis.  Points
// are stored row-major (last axis fastest); Fourier modes use the same
// layout with integer wavenumbers in [-n/2, n/2).
class SpectralGrid {
public:
  SpectralGrid() = default;
  SpectralGrid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  Index size() const { return size_; }
  double cell_volume() const { return 1.0 / double(size_); }

  std::array<int, 3> multi_index(Index p) const;
  Index flat_index(const std::array<int, 3>& i) const;
  int wavenumber(int i) const { return i < n_ / 2 ? i : i - n_; }
  bool is_nyquist(int i) const { return i == n_ / 2; }

  // Integer mode m of a flat spectral index; unused axes are zero.
  std::array<int, 3> mode(Index p) const;
  Vector3d wavevector(Index p) const;
  // k k^T with the cross terms of a Nyquist component removed: the two
  // signs of the Nyquist wavenumber alias onto one mode, and averaging over
  // them keeps every operator Hermitian-symmetric.
  Matrix3d wave_tensor(Index p) const;
  Vector3d position(Index p) const;

  bool operator==(const SpectralGrid& o) const { return dim_ == o.dim_ && n_ == o.n_; }
  bool operator!=(const SpectralGrid& o) const { return !(*this == o); }

private:
  int dim_ = 2;
  int n_ = 0;
  Index size_ = 0;
};

// Periodic Q-tensor field; column p holds the coordinates at grid point p.
struct QField {
  SpectralGrid grid;
  Coeffs values;

  QField() = default;
  explicit QField(const SpectralGrid& g) : grid(g), values(Coeffs::Zero(5, g.size())) {}
  QField(const SpectralGrid& g, Coeffs v);

  Index size() const { return grid.size(); }
  QTensor at(Index p) const { return QTensor(values.col(p)); }
  void set(Index p, const QTensor& q) { values.col(p) = q.coords(); }

  QField& operator+=(const QField& o);
  QField& operator-=(const QField& o);
  QField& operator*=(double s);
  friend QField operator+(QField a, const QField& b) { return a += b; }
  friend QField operator-(QField a, const QField& b) { return a -= b; }
  friend QField operator*(double s, QField a) { return a *= s; }
  friend QField operator*(QField a, double s) { return a *= s; }
};

// Pairwise summation; the order depends only on the length, so results are
// independent of how the terms were produced.
double tree_sum(std::span<const double> terms);

// L2(T^n) inner product and norms by the grid sum times the cell volume.
double inner(const QField& a, const QField& b);
double l2_norm_sq(const QField& f);
double l2_norm(const QField& f);

// Fourier coefficients Q_k = (1/N^d) sum_x Q(x) exp(-2 pi i m.x).
SpectralCoeffs fft_forward(const QField& f);
// Inverse transform; the imaginary part, which vanishes for coefficients
// with Hermitian symmetry, is dropped and its size reported if requested.
QField fft_inverse(const SpectralGrid& g, const SpectralCoeffs& c, double* max_imag = nullptr);

// sum_k |c_k|^2, the squared L2 norm by Parseval.
double spectral_norm_sq(const SpectralCoeffs& c);

} // namespace qflow

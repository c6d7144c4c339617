#pragma once

#include <vector>

#include "qflow/field.hpp"

namespace qflow {

struct ElasticParams {
  double L1 = 1;
  double L2 = 0;
  double L3 = 0;
  double alpha = 0;
  // Constant C in ||grad Q|| <= C ||Delta Q||; zero selects (2 pi)^dim.
  double poincare_constant = 0;
};

// Throws ConfigError unless L1 > 3|L2 + L3| and alpha >= 0.
void validate(const ElasticParams& p);

// Periodic boundary conditions make the L2 and L3 terms equal, so the
// operator depends on their sum only.
inline double anisotropy(const ElasticParams& p) { return p.L2 + p.L3; }

// L1 - 3|L2 + L3|: lower bound of G(Q) / ||grad Q||^2.
inline double legendre_margin(const ElasticParams& p) { return p.L1 - 3 * std::abs(anisotropy(p)); }

double constant_CL(const ElasticParams& p);

// Two conventions for the Poincare constant on the unit torus: the
// spectral gap 1/(2 pi), and (2 pi)^dim.
double spectral_gap_poincare();
double power_poincare(int dim);
double poincare_constant(const ElasticParams& p, int dim);

// 4(-(L1 - |L2+L3|)/C^2 + alpha): Gronwall rate for ||grad Q||^2.
double decay_rate_bound(const ElasticParams& p, double poincare);
// L1 - 3|L2+L3| - alpha C^2, positive when the decay statement applies.
double decay_hypothesis_margin(const ElasticParams& p, double poincare);

// Symbol of the elastic subdifferential on the 5 coordinates for a
// positive semidefinite wave tensor K (k k^T for a plain wavevector):
// Q -> 2 L1 tr(K) Q + (L2+L3)(Q K + K Q - (2/3) tr(Q K) I).
Matrix5d mode_operator(const Matrix3d& wave_tensor, const ElasticParams& p);
Matrix5d mode_operator(const Vector3d& k, const ElasticParams& p);

struct ModeSpectrum {
  double min_eig = 0;
  double max_eig = 0;
  double lower_bound = 0; // 2(L1 - |L2+L3|)|k|^2
  double upper_bound = 0; // 2(L1 + |L2+L3|)|k|^2
};

ModeSpectrum mode_spectrum(const Matrix3d& wave_tensor, const ElasticParams& p);

// Per-mode application of the symbol on a fixed grid.
class ElasticOperator {
public:
  ElasticOperator(const SpectralGrid& g, const ElasticParams& p);

  const SpectralGrid& grid() const { return grid_; }
  const ElasticParams& params() const { return params_; }
  Matrix5d mode(Index p) const { return mode_operator(grid_.wave_tensor(p), params_); }

  SpectralCoeffs apply(const SpectralCoeffs& c) const;
  // (1/2) sum_k c_k^H A_k c_k
  double energy(const SpectralCoeffs& c) const;

private:
  SpectralGrid grid_;
  ElasticParams params_;
};

// Factored (c0 I + c1 A_k)^{-1} for every mode, for repeated implicit solves.
class ShiftedInverse {
public:
  ShiftedInverse(const ElasticOperator& op, double c0, double c1);
  SpectralCoeffs solve(const SpectralCoeffs& rhs) const;
  double c0() const { return c0_; }
  double c1() const { return c1_; }

private:
  double c0_, c1_;
  std::vector<Matrix5d> inverse_;
};

double elastic_energy(const QField& f, const ElasticParams& p);
QField elastic_gradient(const QField& f, const ElasticParams& p);

QField laplacian(const QField& f);
// ||grad Q||^2 and ||Delta Q||^2
double gradient_norm_sq(const QField& f);
double laplacian_norm_sq(const QField& f);
QTensor mean_value(const QField& f);

} // namespace qflow

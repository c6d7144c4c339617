#pragma once

#include "qflow/tensor.hpp"

namespace qflow {

// Z(nu) = integral over the unit sphere of exp(sum_i nu_i p_i^2), together
// with the moments <p_i^2> and their covariance under the Gibbs density.
struct PartitionData {
  double log_z = 0;
  Vector3d moments = Vector3d::Zero();
  Matrix3d covariance = Matrix3d::Zero();
  int nodes_per_panel = 0;  // level at which node doubling converged
  int panels = 0;           // u-panels times phi-panels at that level
};

struct QuadratureOptions {
  int min_nodes = 8;
  int max_nodes = 256;
  double tolerance = 1e-13;
};

PartitionData log_partition(const Vector3d& nu, const QuadratureOptions& opt = {});

// Dual variables for the entropy potential at sorted eigenvalues lambda:
// the Gibbs density with exponent nu (traceless gauge) has <p_i^2> = lambda_i + 1/3.
struct DualSolution {
  Vector3d nu = Vector3d::Zero();
  double log_z = 0;
  Vector3d moments = Vector3d::Zero();
  Matrix3d covariance = Matrix3d::Zero();
  int iterations = 0;
  double residual = 0;
};

inline constexpr double kMarginFloor = 1e-12;
inline constexpr double kContinuationMargin = 1e-3;

struct DualOptions {
  double target_residual = 1e-12;
  double accept_residual = 1e-10;
  int max_iterations = 100;
  QuadratureOptions quadrature{};
};

// Throws BoundaryProximityError below kMarginFloor and ConvergenceError when
// the Newton iteration stalls above accept_residual.  A warm start is any
// earlier nu in the same eigenvalue ordering.
DualSolution solve_dual(const Vector3d& lambda, const Vector3d* warm = nullptr,
                        const DualOptions& opt = {});

struct PsiEval {
  double value = 0;
  QTensor gradient;
  Vector3d nu = Vector3d::Zero();
  double margin = 0;
  EigenData eig;
};

PsiEval psi_eval(const QTensor& q, const Vector3d* warm = nullptr, const DualOptions& opt = {});
double psi(const QTensor& q);
QTensor psi_grad(const QTensor& q);

// -ln(4 pi): the value at the isotropic tensor, which is also the minimum.
double psi_infimum();

struct MoreauYosida {
  double value = 0;
  QTensor prox;
  QTensor grad;
  Vector3d nu = Vector3d::Zero();
  int iterations = 0;
};

struct MoreauYosidaOptions {
  double gradient_tolerance = 1e-10;  // on the prox objective
  double accept_tolerance = 1e-8;
  int max_iterations = 200;
  QuadratureOptions quadrature{};
};

// min_A psi(A) + n |Q - A|^2 for any finite traceless Q.
MoreauYosida moreau_yosida(const QTensor& q, double n, const Vector3d* warm = nullptr,
                           const MoreauYosidaOptions& opt = {});

// Bound on the distance from the diagonal box (-1/3, 2/3)^3 used by the
// far-field growth estimate: the diameter of the eigenvalue box.
double physical_diameter();

// exp(-x) I0(x) for x >= 0.
double bessel_i0_scaled(double x);
double bessel_i0(double x);

// exp(-xi) I0(xi) / (exp(-xi/2) I0(xi/2)).
double c1_ratio(double xi);

// Lower bound in |psi'(Q)| rho(Q) >= C1.
double constant_C1();
double constant_C1_prefactor();

} // namespace qflow

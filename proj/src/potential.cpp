#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qflow/potential.hpp"

namespace qflow {
namespace {

// Orthonormal basis of the plane orthogonal to (1, 1, 1).
Eigen::Matrix<double, 3, 2> gauge_plane() {
  Eigen::Matrix<double, 3, 2> p;
  p << 1 / std::sqrt(2.0), 1 / std::sqrt(6.0), -1 / std::sqrt(2.0), 1 / std::sqrt(6.0), 0,
      -2 / std::sqrt(6.0);
  return p;
}

Vector3d traceless(const Vector3d& v) { return v - Vector3d::Constant(v.sum() / 3); }

// Concave objective nu . mu - log Z(nu) - |nu|^2 / (4n), with n = infinity
// for the plain dual problem.
struct DualPoint {
  Vector3d nu;
  PartitionData part;
  double objective = 0;
  Vector3d gradient;
  double residual = 0;
};

struct DualProblem {
  Vector3d mu;
  double inv_2n = 0; // 1/(2n), zero without regularization
  QuadratureOptions quad;

  DualPoint evaluate(const Vector3d& nu) const {
    DualPoint p;
    p.nu = nu;
    p.part = log_partition(nu, quad);
    p.objective = nu.dot(mu) - p.part.log_z - 0.5 * inv_2n * nu.squaredNorm();
    p.gradient = traceless(mu - p.part.moments - inv_2n * nu);
    p.residual = p.gradient.cwiseAbs().maxCoeff();
    return p;
  }

  // Damped Newton in the traceless plane.  Far from the optimum steps are
  // accepted on the Armijo condition; close to it log Z carries rounding
  // noise of order |nu| * eps, so a step that shrinks the gradient is
  // accepted as well.
  DualPoint maximize(const Vector3d& start, double target, double accept, int max_it,
                     int& iterations) const {
    static const Eigen::Matrix<double, 3, 2> plane = gauge_plane();
    DualPoint cur = evaluate(traceless(start));
    int stalls = 0;
    for (int it = 0; it < max_it; ++it) {
      iterations = it;
      if (cur.residual <= target) return cur;
      if (cur.residual <= accept && stalls >= 2) return cur;
      const Eigen::Matrix2d h =
          plane.transpose() * cur.part.covariance * plane + inv_2n * Eigen::Matrix2d::Identity();
      const Eigen::Vector2d rhs = plane.transpose() * cur.gradient;
      const Eigen::Vector2d d = h.ldlt().solve(rhs);
      const Vector3d step = plane * d;
      const double slope = cur.gradient.dot(step);
      double t = 1;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        DualPoint trial;
        try {
          trial = evaluate(cur.nu + t * step);
        } catch (const ConvergenceError&) {
          continue;
        }
        const bool armijo = trial.objective >= cur.objective + 1e-4 * t * slope;
        const bool shrink = trial.residual <= (1 - 1e-4 * t) * cur.residual;
        if (armijo || shrink) {
          if (!(trial.residual < cur.residual)) ++stalls;
          cur = trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        ++stalls;
        if (cur.residual <= accept) return cur;
        break;
      }
    }
    iterations = max_it;
    if (cur.residual <= accept) return cur;
    std::ostringstream msg;
    msg.precision(6);
    msg << "dual Newton iteration stalled with gradient residual " << cur.residual
        << " at mu = (" << mu[0] << ", " << mu[1] << ", " << mu[2] << ")";
    throw ConvergenceError(msg.str(), cur.residual);
  }
};

DualSolution to_solution(const DualPoint& p, int iterations) {
  DualSolution s;
  s.nu = p.nu;
  s.log_z = p.part.log_z;
  s.moments = p.part.moments;
  s.covariance = p.part.covariance;
  s.iterations = iterations;
  s.residual = p.residual;
  return s;
}

} // namespace

DualSolution solve_dual(const Vector3d& lambda, const Vector3d* warm, const DualOptions& opt) {
  if (!lambda.allFinite()) throw DomainError("solve_dual: non-finite eigenvalues");
  if (std::abs(lambda.sum()) > 1e-9)
    throw DomainError("solve_dual: eigenvalues must sum to zero");
  const double margin = rho_margin<double>(lambda);
  if (!(margin >= kMarginFloor)) {
    std::ostringstream msg;
    msg << "solve_dual: eigenvalue margin " << margin << " is below the floor " << kMarginFloor;
    if (margin <= 0) throw DomainError(msg.str());
    throw BoundaryProximityError(msg.str(), margin);
  }

  DualProblem prob{lambda + Vector3d::Constant(1.0 / 3), 0, opt.quadrature};
  int iterations = 0;
  if (warm != nullptr && warm->allFinite()) {
    try {
      const DualPoint p = prob.maximize(*warm, opt.target_residual, opt.accept_residual,
                                        opt.max_iterations, iterations);
      return to_solution(p, iterations);
    } catch (const ConvergenceError&) {
      // fall through to the cold path
    }
  }

  if (margin >= kContinuationMargin) {
    const DualPoint p = prob.maximize(Vector3d::Zero(), opt.target_residual,
                                      opt.accept_residual, opt.max_iterations, iterations);
    return to_solution(p, iterations);
  }

  // Continuation along t * lambda: the margin shrinks tenfold per stage,
  // each stage starting from the previous multiplier.
  const double lmin = lambda.minCoeff();
  Vector3d nu = Vector3d::Zero();
  int total = 0;
  for (double m = kContinuationMargin;; m *= 0.1) {
    const bool last = m * 0.1 < margin || m <= margin;
    const double stage_margin = last ? margin : m;
    const double t = (stage_margin - 1.0 / 3) / lmin;
    DualProblem stage{t * lambda + Vector3d::Constant(1.0 / 3), 0, opt.quadrature};
    if (last) stage.mu = prob.mu;
    const bool exact = last;
    const DualPoint p = stage.maximize(nu, exact ? opt.target_residual : 1e-8,
                                       exact ? opt.accept_residual : 1e-6, opt.max_iterations,
                                       iterations);
    total += iterations;
    nu = p.nu;
    if (last) return to_solution(p, total);
  }
}

PsiEval psi_eval(const QTensor& q, const Vector3d* warm, const DualOptions& opt) {
  PsiEval out;
  out.eig = eigen(q);
  // Renormalize the trace lost to rounding in the eigenvalues.
  const Vector3d lambda = out.eig.lambda - Vector3d::Constant(out.eig.lambda.sum() / 3);
  out.margin = rho_margin<double>(lambda);
  const DualSolution d = solve_dual(lambda, warm, opt);
  out.nu = d.nu;
  out.value = d.nu.dot(lambda + Vector3d::Constant(1.0 / 3)) - d.log_z;
  out.gradient = QTensor::from_matrix(out.eig.frame * d.nu.asDiagonal() * out.eig.frame.transpose());
  return out;
}

double psi(const QTensor& q) { return psi_eval(q).value; }
QTensor psi_grad(const QTensor& q) { return psi_eval(q).gradient; }

double psi_infimum() { return -std::log(4 * std::numbers::pi); }

double physical_diameter() { return std::sqrt(3.0); }

MoreauYosida moreau_yosida(const QTensor& q, double n, const Vector3d* warm,
                           const MoreauYosidaOptions& opt) {
  if (!(n > 0) || !std::isfinite(n)) throw DomainError("moreau_yosida: n must be positive");
  const EigenData e = eigen(q);
  const Vector3d lambda = e.lambda - Vector3d::Constant(e.lambda.sum() / 3);
  DualProblem prob{lambda + Vector3d::Constant(1.0 / 3), 1 / (2 * n), opt.quadrature};
  // Gradient of the prox objective at A(nu) is -2n times the dual gradient.
  const double target = opt.gradient_tolerance / (2 * n);
  const double accept = opt.accept_tolerance / (2 * n);
  int iterations = 0;
  DualPoint p;
  bool done = false;
  if (warm != nullptr && warm->allFinite()) {
    try {
      p = prob.maximize(*warm, target, accept, opt.max_iterations, iterations);
      done = true;
    } catch (const ConvergenceError&) {
    }
  }
  if (!done) p = prob.maximize(Vector3d::Zero(), target, accept, opt.max_iterations, iterations);

  MoreauYosida out;
  out.nu = p.nu;
  out.iterations = iterations;
  out.value = p.objective;
  const Vector3d a = p.part.moments - Vector3d::Constant(1.0 / 3);
  out.prox = QTensor::from_matrix(e.frame * a.asDiagonal() * e.frame.transpose());
  out.grad = QTensor::from_matrix(e.frame * p.nu.asDiagonal() * e.frame.transpose());
  return out;
}

} // namespace qflow

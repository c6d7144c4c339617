#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qflow/errors.hpp"

namespace qflow {

template <typename Scalar> using Vector3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Matrix3T = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Vector5T = Eigen::Matrix<Scalar, 5, 1>;
template <typename Scalar> using Matrix5T = Eigen::Matrix<Scalar, 5, 5>;

using Vector3d = Vector3T<double>;
using Matrix3d = Matrix3T<double>;
using Vector5d = Vector5T<double>;
using Matrix5d = Matrix5T<double>;

// Orthonormal basis of traceless symmetric 3x3 matrices under A:B = tr(A B).
//   E1 = diag(1,-1,0)/sqrt2       E2 = diag(1,1,-2)/sqrt6
//   E3 = (e1e2 + e2e1)/sqrt2      E4 = (e1e3 + e3e1)/sqrt2
//   E5 = (e2e3 + e3e2)/sqrt2
template <typename Scalar> Matrix3T<Scalar> basis_matrix(int i) {
  using std::sqrt;
  const Scalar r2 = Scalar(1) / sqrt(Scalar(2));
  const Scalar r6 = Scalar(1) / sqrt(Scalar(6));
  Matrix3T<Scalar> e = Matrix3T<Scalar>::Zero();
  switch (i) {
  case 0: e(0, 0) = r2; e(1, 1) = -r2; break;
  case 1: e(0, 0) = r6; e(1, 1) = r6; e(2, 2) = -2 * r6; break;
  case 2: e(0, 1) = e(1, 0) = r2; break;
  case 3: e(0, 2) = e(2, 0) = r2; break;
  case 4: e(1, 2) = e(2, 1) = r2; break;
  default: throw DomainError("basis index out of range");
  }
  return e;
}

template <typename Scalar>
Matrix3T<Scalar> coords_to_matrix(const Vector5T<Scalar>& c) {
  using std::sqrt;
  const Scalar r2 = Scalar(1) / sqrt(Scalar(2));
  const Scalar r6 = Scalar(1) / sqrt(Scalar(6));
  Matrix3T<Scalar> m;
  m(0, 0) = r2 * c[0] + r6 * c[1];
  m(1, 1) = -r2 * c[0] + r6 * c[1];
  m(2, 2) = -2 * r6 * c[1];
  m(0, 1) = m(1, 0) = r2 * c[2];
  m(0, 2) = m(2, 0) = r2 * c[3];
  m(1, 2) = m(2, 1) = r2 * c[4];
  return m;
}

// Projection onto the basis; the antisymmetric part and the trace drop out.
template <typename Scalar>
Vector5T<Scalar> matrix_to_coords(const Matrix3T<Scalar>& m) {
  using std::sqrt;
  const Scalar r2 = Scalar(1) / sqrt(Scalar(2));
  const Scalar r6 = Scalar(1) / sqrt(Scalar(6));
  Vector5T<Scalar> c;
  c[0] = r2 * (m(0, 0) - m(1, 1));
  c[1] = r6 * (m(0, 0) + m(1, 1) - 2 * m(2, 2));
  c[2] = r2 * (m(0, 1) + m(1, 0));
  c[3] = r2 * (m(0, 2) + m(2, 0));
  c[4] = r2 * (m(1, 2) + m(2, 1));
  return c;
}

template <typename Scalar> class QTensorT {
public:
  using Coords = Vector5T<Scalar>;
  using Matrix = Matrix3T<Scalar>;

  QTensorT() : c_(Coords::Zero()) {}

  explicit QTensorT(const Coords& c) : c_(c) {
    if (!c_.allFinite()) throw DomainError("tensor coordinates must be finite");
  }

  // Accepts any 3x3 matrix with finite entries; the result is its
  // symmetric traceless part.
  static QTensorT from_matrix(const Matrix& m) {
    if (!m.allFinite()) throw DomainError("matrix entries must be finite");
    return QTensorT(matrix_to_coords<Scalar>(m));
  }

  // Q = s (n n^T - I/3) with a unit director n.
  static QTensorT uniaxial(Scalar s, const Vector3T<Scalar>& n) {
    const Vector3T<Scalar> u = n.normalized();
    return from_matrix(s * (u * u.transpose() - Matrix::Identity() / Scalar(3)));
  }

  static QTensorT from_eigenvalues(const Vector3T<Scalar>& lambda, const Matrix& frame) {
    return from_matrix(frame * lambda.asDiagonal() * frame.transpose());
  }

  const Coords& coords() const { return c_; }
  Scalar operator[](int i) const { return c_[i]; }
  Matrix matrix() const { return coords_to_matrix<Scalar>(c_); }

  Scalar norm() const { return c_.norm(); }
  Scalar squared_norm() const { return c_.squaredNorm(); }
  Scalar dot(const QTensorT& o) const { return c_.dot(o.c_); }

  QTensorT operator+(const QTensorT& o) const { return QTensorT(c_ + o.c_, raw_tag{}); }
  QTensorT operator-(const QTensorT& o) const { return QTensorT(c_ - o.c_, raw_tag{}); }
  QTensorT operator-() const { return QTensorT(-c_, raw_tag{}); }
  QTensorT operator*(Scalar s) const { return QTensorT(s * c_, raw_tag{}); }
  friend QTensorT operator*(Scalar s, const QTensorT& q) { return q * s; }

private:
  struct raw_tag {};
  QTensorT(const Coords& c, raw_tag) : c_(c) {}
  Coords c_;
};

using QTensor = QTensorT<double>;

// Eigenvalues ascending; frame columns are the matching unit eigenvectors
// and form a proper rotation.
template <typename Scalar> struct EigenDataT {
  Vector3T<Scalar> lambda;
  Matrix3T<Scalar> frame;
};

using EigenData = EigenDataT<double>;

namespace detail {

template <typename Scalar>
Vector3T<Scalar> isolated_eigenvector(const Matrix3T<Scalar>& a, Scalar ev) {
  const Vector3T<Scalar> r0(a(0, 0) - ev, a(0, 1), a(0, 2));
  const Vector3T<Scalar> r1(a(0, 1), a(1, 1) - ev, a(1, 2));
  const Vector3T<Scalar> r2(a(0, 2), a(1, 2), a(2, 2) - ev);
  const Vector3T<Scalar> c01 = r0.cross(r1), c02 = r0.cross(r2), c12 = r1.cross(r2);
  const Scalar d01 = c01.squaredNorm(), d02 = c02.squaredNorm(), d12 = c12.squaredNorm();
  if (d01 >= d02 && d01 >= d12) return c01 / std::sqrt(d01);
  if (d02 >= d12) return c02 / std::sqrt(d02);
  return c12 / std::sqrt(d12);
}

template <typename Scalar>
void orthogonal_complement(const Vector3T<Scalar>& w, Vector3T<Scalar>& u, Vector3T<Scalar>& v) {
  if (std::abs(w[0]) > std::abs(w[1])) {
    u = Vector3T<Scalar>(-w[2], 0, w[0]) / std::sqrt(w[0] * w[0] + w[2] * w[2]);
  } else {
    u = Vector3T<Scalar>(0, w[2], -w[1]) / std::sqrt(w[1] * w[1] + w[2] * w[2]);
  }
  v = w.cross(u);
}

// Exact diagonalization of the restriction of a to the plane orthogonal to
// the unit vector w.  Returns the two eigenvalues ascending in `ev` and the
// matching eigenvectors.  The trigonometric formula loses half the digits
// of a nearly double root; one Jacobi rotation does not.
template <typename Scalar>
void complement_pair(const Matrix3T<Scalar>& a, const Vector3T<Scalar>& w, Scalar ev[2],
                     Vector3T<Scalar>& lo, Vector3T<Scalar>& hi) {
  Vector3T<Scalar> u, v;
  orthogonal_complement(w, u, v);
  const Vector3T<Scalar> au = a * u, av = a * v;
  const Scalar m00 = u.dot(au), m01 = 0.5 * (u.dot(av) + v.dot(au)), m11 = v.dot(av);
  const Scalar theta = Scalar(0.5) * std::atan2(2 * m01, m00 - m11);
  const Scalar c = std::cos(theta), s = std::sin(theta);
  const Scalar e0 = m00 * c * c + 2 * m01 * c * s + m11 * s * s;
  const Scalar e1 = m00 * s * s - 2 * m01 * c * s + m11 * c * c;
  const Vector3T<Scalar> x0 = c * u + s * v, x1 = c * v - s * u;
  if (e0 <= e1) {
    ev[0] = e0, ev[1] = e1, lo = x0, hi = x1;
  } else {
    ev[0] = e1, ev[1] = e0, lo = x1, hi = x0;
  }
}

// Gram-Schmidt of the first canonical axis that is not nearly parallel to w.
template <typename Scalar> Vector3T<Scalar> canonical_orthogonal(const Vector3T<Scalar>& w) {
  for (int i = 0; i < 3; ++i) {
    Vector3T<Scalar> s = Vector3T<Scalar>::Unit(i);
    s -= s.dot(w) * w;
    if (s.norm() > Scalar(0.5)) return s.normalized();
  }
  return Vector3T<Scalar>::UnitX(); // unreachable for unit w
}

} // namespace detail

inline constexpr double kEigenTieTolerance = 1e-12;

// Closed-form spectral decomposition of a symmetric traceless tensor.
// Eigenvalues within kEigenTieTolerance are treated as tied: the tied
// subspace is spanned deterministically from the canonical axes.
template <typename Scalar> EigenDataT<Scalar> eigen(const QTensorT<Scalar>& q) {
  using std::acos;
  using std::cos;
  using std::sqrt;
  const Matrix3T<Scalar> m = q.matrix();
  EigenDataT<Scalar> out;
  const Scalar scale = m.cwiseAbs().maxCoeff();
  if (!(scale > 0)) {
    out.lambda.setZero();
    out.frame.setIdentity();
    return out;
  }
  const Matrix3T<Scalar> a = m / scale;
  const Scalar shift = a.trace() / 3;
  Matrix3T<Scalar> b = a - shift * Matrix3T<Scalar>::Identity();
  const Scalar p2 = b(0, 0) * b(0, 0) + b(1, 1) * b(1, 1) + b(2, 2) * b(2, 2) +
                    2 * (b(0, 1) * b(0, 1) + b(0, 2) * b(0, 2) + b(1, 2) * b(1, 2));
  const Scalar p = sqrt(p2 / 6);
  b /= p;
  const Scalar half_det = std::clamp(b.determinant() / 2, Scalar(-1), Scalar(1));
  const Scalar angle = acos(half_det) / 3;
  const Scalar two_pi_3 = Scalar(2) * std::numbers::pi_v<Scalar> / 3;
  const Scalar beta2 = 2 * cos(angle);
  const Scalar beta0 = 2 * cos(angle + two_pi_3);
  const Scalar beta1 = -(beta0 + beta2);
  Vector3T<Scalar> ev(shift + p * beta0, shift + p * beta1, shift + p * beta2);

  const Scalar tie = Scalar(kEigenTieTolerance) / scale;
  if (ev[2] - ev[0] < tie) {
    out.lambda = ev * scale;
    out.frame.setIdentity();
    return out;
  }
  // The eigenvalue farther from the middle one comes out of the cosine
  // formula accurately; the other two are recomputed on its complement.
  Vector3T<Scalar> v0, v1, v2;
  Scalar pair[2];
  if (half_det >= 0) {
    v2 = detail::isolated_eigenvector(a, ev[2]);
    detail::complement_pair(a, v2, pair, v0, v1);
    ev[0] = pair[0];
    ev[1] = pair[1];
    if (ev[1] - ev[0] < tie) v0 = detail::canonical_orthogonal(v2);
    v1 = v2.cross(v0);
  } else {
    v0 = detail::isolated_eigenvector(a, ev[0]);
    detail::complement_pair(a, v0, pair, v1, v2);
    ev[1] = pair[0];
    ev[2] = pair[1];
    if (ev[2] - ev[1] < tie) v1 = detail::canonical_orthogonal(v0);
    v2 = v0.cross(v1);
  }
  out.lambda = ev * scale;
  out.frame.col(0) = v0;
  out.frame.col(1) = v1;
  out.frame.col(2) = v2;
  return out;
}

// Distance of the eigenvalues to the ends of (-1/3, 2/3); positive exactly
// on the physical domain.
template <typename Scalar> Scalar rho_margin(const Vector3T<Scalar>& lambda) {
  return std::min(lambda.minCoeff() + Scalar(1) / 3, Scalar(2) / 3 - lambda.maxCoeff());
}

template <typename Scalar> Scalar rho_margin(const QTensorT<Scalar>& q) {
  return rho_margin<Scalar>(eigen(q).lambda);
}

template <typename Scalar> bool is_physical(const QTensorT<Scalar>& q) {
  return rho_margin(q) > 0;
}

// Frobenius distance to the boundary of the physical domain.
template <typename Scalar> Scalar boundary_distance(const QTensorT<Scalar>& q) {
  const EigenDataT<Scalar> e = eigen(q);
  if (!(rho_margin<Scalar>(e.lambda) > 0))
    throw DomainError("boundary_distance: tensor is not physical");
  return std::sqrt(Scalar(6)) / 2 * (e.lambda[0] + Scalar(1) / 3);
}

template <typename Scalar> QTensorT<Scalar> rotate(const QTensorT<Scalar>& q, const Matrix3T<Scalar>& r) {
  return QTensorT<Scalar>::from_matrix(r * q.matrix() * r.transpose());
}

// Rotation taking a unit quaternion (w, x, y, z); the input need not be
// normalized.
template <typename Scalar>
Matrix3T<Scalar> rotation_from_quaternion(Scalar w, Scalar x, Scalar y, Scalar z) {
  return Eigen::Quaternion<Scalar>(w, x, y, z).normalized().toRotationMatrix();
}

} // namespace qflow

#pragma once

#include "qflow/field.hpp"
#include "qflow/potential.hpp"

namespace qflow {

using Multipliers = Eigen::Matrix<double, 3, Eigen::Dynamic>;

// Pointwise bulk potential on a field: psi or its Moreau-Yosida envelope.
struct BulkField {
  Eigen::VectorXd value;
  QField gradient;
  QField prox;           // envelope only
  Multipliers nu;        // dual multipliers per point, reusable as warm starts
  Eigen::VectorXd margin;
  double integral = 0;   // grid quadrature of value
  double min_margin = 0;
};

// Minimum eigenvalue margin over the grid; no potential evaluations.
double min_margin(const QField& f);
bool is_physical(const QField& f);

// Throws DomainError or BoundaryProximityError when a point is not
// evaluable; `warm` must match the grid size when given.
BulkField evaluate_psi(const QField& f, const Multipliers* warm = nullptr);
BulkField evaluate_envelope(const QField& f, double n, const Multipliers* warm = nullptr);

} // namespace qflow

#pragma once

#include <cstdint>
#include <string>

#include "qflow/field.hpp"

namespace qflow {

enum class InitialKind { zero, uniform_uniaxial, random_bandlimited, near_boundary };
enum class ContactGeometry { point, line, plane };
enum class MarginProfile { quadratic, linear };

std::string to_string(InitialKind k);
std::string to_string(ContactGeometry g);
std::string to_string(MarginProfile m);
InitialKind initial_kind_from_string(const std::string& s);
ContactGeometry geometry_from_string(const std::string& s);
MarginProfile profile_from_string(const std::string& s);

struct InitialSpec {
  InitialKind kind = InitialKind::random_bandlimited;
  // uniform_uniaxial
  double s = 0.3;
  Vector3d axis = Vector3d::UnitZ();
  // random_bandlimited
  int kmax = 2;
  double margin_min = 0.05;
  // near_boundary: margin = floor + (top - floor) * shape, where shape is
  // the mean of sin^2(pi (x_i - 1/2)) over the axes transverse to the
  // contact set (|sin| for the linear profile); the contact set passes
  // through the grid point at x = 1/2.
  ContactGeometry geometry = ContactGeometry::line;
  MarginProfile profile = MarginProfile::quadratic;
  double floor = 1e-3;
  double top = 1.0 / 3;
};

// Throws ConfigError for an infeasible spec.
void validate(const InitialSpec& s, int dim);

// Pointwise physical, with min-margin at least the requested floor;
// deterministic in the seed.
QField generate_initial(const InitialSpec& spec, const SpectralGrid& g, std::uint64_t seed);

} // namespace qflow

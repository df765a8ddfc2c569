#pragma once

#include "recfem/types.hpp"

namespace recfem {

enum class PlaneState { strain, stress };

struct Material {
  double youngs = 1.0;
  double poisson = 0.0;
  PlaneState state = PlaneState::strain;
};

// In-plane constitutive matrix D (Voigt xx, yy, xy with engineering shear).
// Throws std::invalid_argument for E <= 0 or poisson outside [0, 0.5).
Mat3 elasticity_matrix(const Material& m);

// Inverse of the in-plane D; weights the recovered-stress inner products.
Mat3 compliance_matrix(const Material& m);

}  // namespace recfem

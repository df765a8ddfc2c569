#include "recfem/material.hpp"

namespace recfem {

Mat3 elasticity_matrix(const Material& m) {
  const double E = m.youngs, nu = m.poisson;
  if (!(E > 0.0)) throw std::invalid_argument("elasticity_matrix: E must be positive");
  if (!(nu >= 0.0 && nu < 0.5))
    throw std::invalid_argument("elasticity_matrix: poisson must lie in [0, 0.5)");
  Mat3 d = Mat3::Zero();
  if (m.state == PlaneState::strain) {
    const double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
    d(0, 0) = d(1, 1) = c * (1.0 - nu);
    d(0, 1) = d(1, 0) = c * nu;
    d(2, 2) = c * (1.0 - 2.0 * nu) / 2.0;
  } else {
    const double c = E / (1.0 - nu * nu);
    d(0, 0) = d(1, 1) = c;
    d(0, 1) = d(1, 0) = c * nu;
    d(2, 2) = c * (1.0 - nu) / 2.0;
  }
  return d;
}

Mat3 compliance_matrix(const Material& m) {
  return elasticity_matrix(m).inverse();
}

}  // namespace recfem

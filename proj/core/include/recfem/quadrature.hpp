#pragma once

#include <vector>

#include "recfem/types.hpp"

namespace recfem {

struct GaussRule1D {
  std::vector<double> points;   // on [-1, 1]
  std::vector<double> weights;
};

// Gauss-Legendre rule with n points, exact for polynomials of degree 2n-1.
const GaussRule1D& gauss_rule(int n);

struct QuadPoint2D {
  Vec2 xi;
  double weight;
};

// Tensor-product rule on the [-1,1]^2 parent square, row-major over (eta, xi).
std::vector<QuadPoint2D> tensor_rule(int n);

}  // namespace recfem

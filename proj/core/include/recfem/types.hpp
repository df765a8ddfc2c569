#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>

namespace recfem {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;  // in-plane stress/strain in Voigt order (xx, yy, xy)
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

using NodeId = int;
using ElemId = int;

enum class ElementOrder { q4, q8 };

inline int nodes_per_element(ElementOrder order) { return order == ElementOrder::q4 ? 4 : 8; }

// polynomial degree of the displacement interpolation
inline int interpolation_degree(ElementOrder order) { return order == ElementOrder::q4 ? 1 : 2; }

enum class EdgeTag : std::uint8_t { neumann, dirichlet, symmetry_x, symmetry_y };

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VerificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Compensated (Kahan) accumulator so reduction results do not depend on
// chunking of the summation loop.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace recfem

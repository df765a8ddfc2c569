#pragma once

#include <Eigen/Sparse>

#include <functional>
#include <optional>

#include "recfem/material.hpp"
#include "recfem/mesh.hpp"
#include "recfem/quadrature.hpp"

namespace recfem {

struct PointPin {
  Vec2 where{0.0, 0.0};
  bool fix_x = false, fix_y = false;
  Vec2 value{0.0, 0.0};
};

struct LoadCase {
  std::function<Vec2(const Vec2&)> body;  // volumetric force b(x)
  // traction t(x, outward unit normal, tag) on neumann edges
  std::function<Vec2(const Vec2&, const Vec2&, EdgeTag)> traction;
  std::function<Vec2(const Vec2&)> dirichlet;  // boundary displacement on dirichlet edges
  std::vector<PointPin> pins;
};

// Displacement/stress fields evaluable per element in local coordinates; the
// common currency of recovery and error estimation.
class DisplacementStressField {
 public:
  virtual ~DisplacementStressField() = default;
  [[nodiscard]] virtual Vec2 value(ElemId e, const Vec2& xi) const = 0;
  [[nodiscard]] virtual Vec3 stress(ElemId e, const Vec2& xi) const = 0;
};

// Affine map from the reduced (free) dof vector to the full nodal vector:
// u_full = expansion * u_free + offset. Encodes hanging-node elimination,
// edge dirichlet/symmetry data, and point pins.
struct ConstraintMap {
  Eigen::SparseMatrix<double> expansion;
  Eigen::VectorXd offset;
  int free_count = 0;
  int full_count = 0;
};

ConstraintMap build_constraint_map(const QuadMesh& mesh, const LoadCase& load);

class FEField : public DisplacementStressField {
 public:
  FEField(const QuadMesh& mesh, const Material& material, Eigen::VectorXd nodal);

  [[nodiscard]] Vec2 value(ElemId e, const Vec2& xi) const override;
  [[nodiscard]] Vec3 stress(ElemId e, const Vec2& xi) const override;

  [[nodiscard]] const Eigen::VectorXd& nodal_values() const { return nodal_; }
  [[nodiscard]] const QuadMesh& mesh() const { return *mesh_; }
  [[nodiscard]] const Material& material() const { return material_; }

 private:
  const QuadMesh* mesh_;
  Material material_;
  Eigen::VectorXd nodal_;  // 2 dofs per node, x then y interleaved
};

struct SolveOptions {
  double residual_tol = 1e-10;
};

struct SolveResult {
  FEField field;
  int free_dofs = 0;
  double relative_residual = 0.0;
};

// Assembles the constrained linear elastic system and solves it with a sparse
// Cholesky factorization. Throws NumericalError if the reduced operator is
// not SPD or the relative residual exceeds options.residual_tol.
SolveResult assemble_and_solve(const QuadMesh& mesh, const Material& material,
                               const LoadCase& load, const SolveOptions& options = {});

// Consistent load vector over all nodal dofs (body at 5x5, tractions at the
// (p+3)-point edge rule).
Eigen::VectorXd consistent_load_vector(const QuadMesh& mesh, const LoadCase& load);

// Stiffness in full nodal dofs (no constraints applied).
Eigen::SparseMatrix<double> assemble_stiffness(const QuadMesh& mesh, const Material& material);

using StressEval = std::function<Vec3(ElemId, const Vec2& xi, const Vec2& x)>;

// Complementary-energy inner product  integral of sA : D^-1 : sB  at 5x5.
double energy_inner_product(const QuadMesh& mesh, const Material& material, const StressEval& a,
                            const StressEval& b);
std::vector<double> energy_inner_product_per_element(const QuadMesh& mesh,
                                                     const Material& material,
                                                     const StressEval& a, const StressEval& b);

StressEval stress_eval_of(const DisplacementStressField& f);

// Quadrature orders used across the library.
inline int stiffness_rule(ElementOrder order) { return order == ElementOrder::q4 ? 2 : 3; }
inline constexpr int kFieldRule = 5;                                   // estimator/load volume rule
inline int edge_rule(ElementOrder order) { return interpolation_degree(order) + 3; }

}  // namespace recfem

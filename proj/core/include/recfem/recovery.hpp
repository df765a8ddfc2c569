#pragma once

#include <array>
#include <vector>

#include "recfem/analytic.hpp"
#include "recfem/fem.hpp"

namespace recfem {

// Number of 2D monomials of total degree <= degree.
int monomial_count(int degree);

// One fitted patch: a polynomial displacement per component over the patch,
// expressed in centroid-centered, half-extent-scaled coordinates.
struct PatchPolynomial {
  NodeId vertex = -1;
  Vec2 origin{0.0, 0.0};
  double scale = 1.0;
  int degree = 2;            // element degree + 1
  int active_monomials = 0;  // kept after conditioning truncation
  Eigen::VectorXd ax, ay;    // coefficients, length monomial_count(degree)

  // constraint bookkeeping (row indices refer to the assembled row list)
  int rows_total = 0;
  std::vector<int> rows_kept;
  std::vector<int> rows_dropped;     // redundant under the rank tolerance
  bool fallback_unconstrained = false;
  double constraint_residual = 0.0;  // max violation of the kept rows
};

PatchPolynomial fit_patch(const QuadMesh& mesh, const VertexPatch& patch,
                          const DisplacementStressField& field, const LoadCase& load,
                          const Material& material);

// Displacement of one fitted patch polynomial at a physical point.
Vec2 patch_value(const PatchPolynomial& p, const Vec2& x);

// The blended recovered displacement field and its derived stresses. Fitted
// polynomials live at the non-hanging corner vertices; hanging vertices borrow
// the average of their edge endpoints, which keeps the blend conforming.
class RecoveredField {
 public:
  struct BlendEntry {
    int poly = -1;                      // index into polynomials()
    std::array<double, 4> w{};          // weight on each corner hat function
  };

  [[nodiscard]] const QuadMesh& mesh() const { return *mesh_; }
  [[nodiscard]] const Material& material() const { return material_; }
  [[nodiscard]] const std::vector<PatchPolynomial>& polynomials() const { return polynomials_; }
  [[nodiscard]] const PatchPolynomial& polynomial_of(NodeId vertex) const;
  [[nodiscard]] const std::vector<BlendEntry>& blend(ElemId e) const {
    return blends_[static_cast<std::size_t>(e)];
  }
  [[nodiscard]] int fallback_count() const { return fallback_count_; }
  [[nodiscard]] double worst_constraint_residual() const { return worst_constraint_residual_; }

  friend RecoveredField recover_displacement(const QuadMesh&, const DisplacementStressField&,
                                             const LoadCase&, const Material&);

 private:
  const QuadMesh* mesh_ = nullptr;
  Material material_;
  std::vector<PatchPolynomial> polynomials_;
  std::vector<int> poly_of_node_;  // -1 for nodes without a fitted patch
  std::vector<std::vector<BlendEntry>> blends_;
  int fallback_count_ = 0;
  double worst_constraint_residual_ = 0.0;
};

RecoveredField recover_displacement(const QuadMesh& mesh, const DisplacementStressField& field,
                                    const LoadCase& load, const Material& material);

// u*_u: partition-of-unity blend of the vertex patch polynomials.
Vec2 conjoint_displacement(const RecoveredField& rec, ElemId e, const Vec2& xi);

struct StressSplit {
  Vec3 total;          // sigma of the blended displacement
  Vec3 continuous;     // blend of the patch stresses; continuous across edges
  Vec3 discontinuous;  // blend-gradient term; total = continuous + discontinuous
};

StressSplit conjoint_stress_split(const RecoveredField& rec, ElemId e, const Vec2& xi);

// s = -div(continuous stress) - b, by exact differentiation of the blend.
Vec2 internal_default_s(const RecoveredField& rec, ElemId e, const Vec2& xi,
                        const LoadCase& load);

// Boundary equilibrium default of the continuous stress on a boundary edge at
// edge parameter s. Neumann: sigma.n - t. Symmetry: the tangential traction
// (the normal part is reacted by the support). Dirichlet edges carry no
// default; calling with one is an error.
Vec2 boundary_default_r(const RecoveredField& rec, const BoundaryEdge& edge, double s,
                        const LoadCase& load);

}  // namespace recfem

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recfem/fem.hpp"

namespace recfem {

// Closed-form displacement/stress pair used as reference data for a benchmark.
struct AnalyticSolution {
  std::function<Vec2(const Vec2&)> displacement;
  std::function<Vec3(const Vec2&)> stress;  // Voigt (xx, yy, xy)
};

// A ready-to-run problem: geometry, material, loads, and the reference field.
struct Benchmark {
  std::string name;
  DomainSpec domain;
  Material material;
  AnalyticSolution exact;
  LoadCase load;
  bool has_singularity = false;
  Vec2 singular_point{0.0, 0.0};
  // Independently specified traction on (parts of) the Neumann boundary, from
  // the physical statement of the problem rather than from the exact stress.
  // Returns nullopt where no independent datum exists.
  std::function<std::optional<Vec2>(const Vec2& x, const Vec2& n)> physical_traction;
};

Benchmark benchmark_by_name(const std::string& name);
std::vector<std::string> benchmark_names();

// Evaluates the analytic fields through an element's geometric map, so the
// exact solution can stand in wherever a discrete field is expected.
class ExactFieldAdapter : public DisplacementStressField {
 public:
  ExactFieldAdapter(const QuadMesh& mesh, AnalyticSolution solution)
      : mesh_(&mesh), solution_(std::move(solution)) {}

  Vec2 value(ElemId e, const Vec2& xi) const override {
    return solution_.displacement(mesh_->map_point(e, xi).x);
  }
  Vec3 stress(ElemId e, const Vec2& xi) const override {
    return solution_.stress(mesh_->map_point(e, xi).x);
  }

 private:
  const QuadMesh* mesh_;
  AnalyticSolution solution_;
};

// Cross-checks a benchmark's data set against itself: the stress field must be
// the constitutive image of the displacement field, equilibrium must hold
// against the body load, boundary data must match the stress on the exact
// geometry, and symmetry faces must be kinematically admissible.
struct ConsistencyReport {
  double max_constitutive = 0.0;        // relative, finite-difference strains
  double max_equilibrium = 0.0;         // scaled divergence residual
  double max_traction = 0.0;            // relative, Neumann data vs sigma . n
  double max_symmetry_displacement = 0.0;  // |u . n| scaled
  double max_symmetry_traction = 0.0;      // tangential traction scaled
  int interior_samples = 0;
  int boundary_samples = 0;
  bool pass = false;
};

ConsistencyReport verify_consistency(const Benchmark& bench, int interior_samples = 200,
                                     int boundary_samples_per_side = 25);

}  // namespace recfem

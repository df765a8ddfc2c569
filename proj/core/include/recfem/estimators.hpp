#pragma once

#include <vector>

#include "recfem/analytic.hpp"
#include "recfem/fem.hpp"
#include "recfem/recovery.hpp"

namespace recfem {

// A global scalar together with its per-element decomposition. The global
// value is always the compensated sum of the per-element entries.
struct ScalarMap {
  double global = 0.0;
  std::vector<double> per_element;
};

// Estimated FE error e_es = u*_u - u^h at a local point. Both fields must
// live on the same mesh; the L2 variant throws std::invalid_argument if not.
Vec2 estimated_error(const FEField& field, const RecoveredField& rec, ElemId e, const Vec2& xi);
double estimated_error_l2(const FEField& field, const RecoveredField& rec);

// ZZ-style estimate of the squared FE error in the energy norm:
// the complementary norm of (continuous recovered stress - raw stress).
ScalarMap zz_estimate(const FEField& field, const RecoveredField& rec);

// Error indicators for the recovered solution built from the equilibrium
// defaults s (interior) and r (boundary) worked against e_es. All three are
// squared-energy quantities. e1 is signed and never clamped; e2 takes
// absolute values of the per-element integrals; e3 takes the absolute value
// of the integrand pointwise, so e3 >= e2 >= |e1|.
double indicator_e1(const RecoveredField& rec, const FEField& field, const LoadCase& load);
ScalarMap indicator_e2(const RecoveredField& rec, const FEField& field, const LoadCase& load);
ScalarMap indicator_e3(const RecoveredField& rec, const FEField& field, const LoadCase& load);

// Product bound |e_es|_L2 * |s|_L2 on the squared recovered-solution error.
struct UpperBound {
  double value = 0.0;
  double e_es_l2 = 0.0;
  double s_l2 = 0.0;
};
UpperBound upper_bound(const RecoveredField& rec, const FEField& field, const LoadCase& load);

// Complementary-energy mismatch between the benchmark's reference stress and
// an approximate stress field, per element and globally. On a singular
// benchmark, elements touching the singular point are integrated with a
// corner-directed dyadic subdivision until the ring contributions are
// negligible; everything else uses the tensor rule of the given order.
ScalarMap exact_stress_mismatch(const Benchmark& bench, const QuadMesh& mesh,
                                const Material& material, const StressEval& approx,
                                int rule = kFieldRule);

struct ExactErrors {
  double fe2 = 0.0;      // squared energy error of the FE solution
  double rec2 = 0.0;     // squared energy error of the continuous recovered stress
  double energy2 = 0.0;  // squared energy norm of the reference solution
  std::vector<double> fe2_per_element;
  std::vector<double> rec2_per_element;
};
ExactErrors exact_errors(const FEField& field, const RecoveredField& rec, const Benchmark& bench);

// Checks the recovered-stress error bound: the exact squared FE error (lhs)
// against the complementary norm of (recovered - raw stress) minus twice the
// defect work of the exact error (rhs). In exact arithmetic rhs - lhs equals
// the squared energy mismatch of the continuous recovered stress.
struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
};
BoundCheck error_bound_check(const FEField& field, const RecoveredField& rec,
                             const LoadCase& load, const Benchmark& bench);

// Residual of the defect identity: for every constrained FE basis function v,
//   integral(sigma*_c : strain(v)) - l(v) - integral(v . s) - integral(v . r)
// must vanish. Returned per free dof, with |l(v)| alongside for scaling.
struct ResidualCheck {
  Eigen::VectorXd residual;
  Eigen::VectorXd load_scale;
  double worst = 0.0;  // max |residual_j| / (1 + load_scale_j)
};
ResidualCheck weighted_residual(const FEField& field, const RecoveredField& rec,
                                const LoadCase& load);

// Everything the reporting pipeline needs for one mesh. Exact quantities and
// effectivities are negative when no reference solution is supplied.
struct ErrorReport {
  int mesh_index = 0;
  int dofs = 0;  // free dofs after constraints
  double zz2 = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  double e_ub = 0.0;
  double e_es_l2 = 0.0;
  double s_l2 = 0.0;
  double energy_fe2 = 0.0;   // a(sigma_h, sigma_h), energy of the solved field
  double energy_rec2 = 0.0;  // a(sigma_c, sigma_c), energy of the recovered stress
  double exact_fe2 = -1.0;
  double exact_rec2 = -1.0;
  double exact_energy2 = -1.0;
  std::vector<double> zz2_k;
  std::vector<double> e2_k;
  std::vector<double> e3_k;
  std::vector<double> exact_fe2_k;
  std::vector<double> exact_rec2_k;
  // Effectivities: theta_zz compares energy norms, the indicator variants
  // compare squared quantities against the exact recovered-solution error.
  double theta_zz = -1.0;
  double theta_e1 = -1.0;
  double theta_e2 = -1.0;
  double theta_e3 = -1.0;
  double theta_ub = -1.0;
};

ErrorReport assemble_report(const FEField& field, const RecoveredField& rec, const LoadCase& load,
                            const Benchmark* reference = nullptr, int mesh_index = 0);

// Spearman rank correlation of two equally long value arrays (average ranks
// on ties). Returns 0 for degenerate inputs (constant arrays).
double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace recfem

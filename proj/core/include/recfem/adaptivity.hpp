#pragma once

#include <string>
#include <vector>

#include "recfem/analytic.hpp"
#include "recfem/estimators.hpp"
#include "recfem/mesh.hpp"

namespace recfem {

// Which global error measure ends the refinement loop. Marking is driven by
// the per-element FE estimate either way; only the stop test differs.
enum class StopCriterion { fe, recovered };

struct AdaptiveConfig {
  std::string benchmark;
  ElementOrder order = ElementOrder::q4;
  double target_percent = 1.0;  // relative error in energy norm, percent
  StopCriterion criterion = StopCriterion::recovered;
  int initial_divisions = 2;
  double fallback_fraction = 0.10;  // marked share when the threshold marks nothing
  int max_level = kMaxRefinementLevel;
  int max_iterations = 25;
  bool with_reference = false;  // attach exact-error data to every report
};

enum class StopReason { target_met, max_iterations, level_cap };

struct AdaptiveStep {
  int iteration = 0;
  QuadMesh mesh;
  ErrorReport report;
  double rel_fe = 0.0;         // percent, from the zz estimate
  double rel_recovered = 0.0;  // percent, from the recovered-solution estimate
  bool stopped = false;        // the governing criterion met the target here
  int marked = 0;              // elements marked to build the next mesh
  double seconds = 0.0;        // solve + recover + estimate wall time
};

struct AdaptiveTrace {
  std::vector<AdaptiveStep> steps;
  StopReason stop_reason = StopReason::target_met;
  int final_dofs = 0;
  double total_seconds = 0.0;
  // Logged oddities that are expected near a singularity but worth surfacing:
  // iterations where the recovered estimate exceeds the FE estimate, and the
  // max-iterations warning.
  std::vector<std::string> anomalies;
};

// Relative error in energy norm, percent: the chosen squared estimate over
// itself plus the matching solution energy. Throws when the total is zero.
double relative_error(const ErrorReport& report, StopCriterion which);

// Equal-error-distribution marking from the per-element FE estimate: element k
// is marked when zz2_k exceeds budget2 / Nel with budget2 the squared absolute
// target. Returns the empty set when the FE measure already meets the target.
std::vector<ElemId> mark_elements(const ErrorReport& report, const QuadMesh& mesh,
                                  double target_percent);

AdaptiveTrace run_adaptive(const AdaptiveConfig& config);

}  // namespace recfem

#include "recfem/adaptivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "recfem/fem.hpp"
#include "recfem/recovery.hpp"

namespace recfem {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<ElemId> top_fraction(const std::vector<double>& zz2_k, double fraction) {
  std::vector<ElemId> order(zz2_k.size());
  std::iota(order.begin(), order.end(), ElemId{0});
  std::sort(order.begin(), order.end(), [&](ElemId a, ElemId b) {
    const double za = zz2_k[static_cast<std::size_t>(a)];
    const double zb = zz2_k[static_cast<std::size_t>(b)];
    return za != zb ? za > zb : a < b;
  });
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(order.size()))));
  order.resize(std::min(count, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

double relative_error(const ErrorReport& report, StopCriterion which) {
  const double err2 = which == StopCriterion::fe ? report.zz2 : report.e3;
  const double energy2 =
      which == StopCriterion::fe ? report.energy_fe2 : report.energy_rec2;
  const double total = err2 + energy2;
  if (!(total > 0.0)) throw std::invalid_argument("relative_error: zero total energy");
  return 100.0 * std::sqrt(err2 / total);
}

std::vector<ElemId> mark_elements(const ErrorReport& report, const QuadMesh& mesh,
                                  double target_percent) {
  if (!(target_percent > 0.0) || !(target_percent < 100.0))
    throw std::invalid_argument("mark_elements: target must be in (0, 100) percent");
  const auto nel = static_cast<std::size_t>(mesh.element_count());
  if (report.zz2_k.size() != nel)
    throw std::invalid_argument("mark_elements: report does not match the mesh");

  const double frac = target_percent / 100.0;
  const double budget2 = frac * frac * (report.zz2 + report.energy_fe2);
  if (report.zz2 <= budget2) return {};

  // zz2 > budget2 guarantees at least one element above the per-element share
  const double threshold = budget2 / static_cast<double>(nel);
  std::vector<ElemId> marked;
  for (std::size_t k = 0; k < nel; ++k)
    if (report.zz2_k[k] > threshold) marked.push_back(static_cast<ElemId>(k));
  return marked;
}

AdaptiveTrace run_adaptive(const AdaptiveConfig& config) {
  if (!(config.target_percent > 0.0) || !(config.target_percent < 100.0))
    throw std::invalid_argument("run_adaptive: target must be in (0, 100) percent");
  if (config.max_level < 0 || config.max_level > kMaxRefinementLevel)
    throw std::invalid_argument("run_adaptive: max level out of range");
  if (config.max_iterations < 1)
    throw std::invalid_argument("run_adaptive: need at least one iteration");

  const Benchmark bench = benchmark_by_name(config.benchmark);
  QuadMesh mesh = build_structured_mesh(bench.domain, config.initial_divisions, config.order);

  AdaptiveTrace trace;
  const auto run_start = std::chrono::steady_clock::now();
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult sol = assemble_and_solve(mesh, bench.material, bench.load);
    const RecoveredField rec =
        recover_displacement(mesh, sol.field, bench.load, bench.material);
    ErrorReport report = assemble_report(sol.field, rec, bench.load,
                                         config.with_reference ? &bench : nullptr, iter);

    AdaptiveStep step;
    step.iteration = iter;
    step.report = std::move(report);
    step.rel_fe = relative_error(step.report, StopCriterion::fe);
    step.rel_recovered = relative_error(step.report, StopCriterion::recovered);
    step.seconds = seconds_since(t0);

    if (step.report.e3 > step.report.zz2)
      trace.anomalies.push_back("iteration " + std::to_string(iter) +
                                ": recovered estimate exceeds the fe estimate");

    const double governing =
        config.criterion == StopCriterion::fe ? step.rel_fe : step.rel_recovered;
    if (governing <= config.target_percent) {
      step.stopped = true;
      step.mesh = std::move(mesh);
      trace.steps.push_back(std::move(step));
      trace.stop_reason = StopReason::target_met;
      break;
    }
    if (iter + 1 == config.max_iterations) {
      step.mesh = std::move(mesh);
      trace.steps.push_back(std::move(step));
      trace.stop_reason = StopReason::max_iterations;
      trace.anomalies.push_back("stopped at max iterations above the target");
      break;
    }

    std::vector<ElemId> marks = mark_elements(step.report, mesh, config.target_percent);
    if (marks.empty()) marks = top_fraction(step.report.zz2_k, config.fallback_fraction);
    std::erase_if(marks, [&](ElemId e) {
      return mesh.element(e).cell.level >= config.max_level;
    });
    if (!marks.empty()) {
      RefineResult next = refine_elements(mesh, marks);
      if (next.skipped.size() == marks.size()) marks.clear();
      if (!marks.empty()) {
        step.marked = static_cast<int>(marks.size());
        step.mesh = std::move(mesh);
        trace.steps.push_back(std::move(step));
        mesh = std::move(next.mesh);
        continue;
      }
    }
    step.mesh = std::move(mesh);
    trace.steps.push_back(std::move(step));
    trace.stop_reason = StopReason::level_cap;
    trace.anomalies.push_back("every marked element sits at the refinement level cap");
    break;
  }

  trace.final_dofs = trace.steps.back().report.dofs;
  trace.total_seconds = seconds_since(run_start);
  return trace;
}

}  // namespace recfem

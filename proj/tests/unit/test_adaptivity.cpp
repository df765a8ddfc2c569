#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "recfem/adaptivity.hpp"
#include "recfem/estimators.hpp"
#include "recfem/fem.hpp"
#include "recfem/recovery.hpp"

using namespace recfem;

namespace {

ErrorReport report_on(const Benchmark& b, const QuadMesh& mesh) {
  const SolveResult sol = assemble_and_solve(mesh, b.material, b.load);
  const RecoveredField rec = recover_displacement(mesh, sol.field, b.load, b.material);
  return assemble_report(sol.field, rec, b.load);
}

std::vector<ElemId> corner_adjacent(const QuadMesh& mesh, const Vec2& corner) {
  std::vector<ElemId> out;
  for (ElemId e = 0; e < mesh.element_count(); ++e)
    for (int c = 0; c < 4; ++c)
      if ((mesh.node(mesh.element(e).nodes[static_cast<std::size_t>(c)]) - corner).norm() <
          1e-12) {
        out.push_back(e);
        break;
      }
  return out;
}

double trace_slope(const AdaptiveTrace& t, bool use_e3) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(t.steps.size());
  for (const AdaptiveStep& s : t.steps) {
    const double x = std::log(static_cast<double>(s.report.dofs));
    const double y = 0.5 * std::log(use_e3 ? s.report.e3 : s.report.zz2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("relative error formula and edge cases") {
  ErrorReport r;
  r.zz2 = 3.7;
  r.energy_fe2 = 3.7;
  r.e3 = 0.0;
  r.energy_rec2 = 1.0;
  CHECK(relative_error(r, StopCriterion::fe) ==
        doctest::Approx(100.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(relative_error(r, StopCriterion::recovered) == 0.0);

  ErrorReport mixed;
  mixed.zz2 = 0.04;
  mixed.energy_fe2 = 99.96;
  mixed.e3 = 1.0;
  mixed.energy_rec2 = 3.0;
  CHECK(relative_error(mixed, StopCriterion::fe) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(relative_error(mixed, StopCriterion::recovered) == doctest::Approx(50.0).epsilon(1e-12));

  ErrorReport zero;
  CHECK_THROWS_AS(static_cast<void>(relative_error(zero, StopCriterion::fe)),
                  std::invalid_argument);
}

TEST_CASE("relative error decreases under uniform refinement of the pipe") {
  const Benchmark b = benchmark_by_name("pipe");
  const ErrorReport coarse = report_on(b, build_structured_mesh(b.domain, 2, ElementOrder::q4));
  const ErrorReport fine = report_on(b, build_structured_mesh(b.domain, 4, ElementOrder::q4));
  const double fe_c = relative_error(coarse, StopCriterion::fe);
  const double fe_f = relative_error(fine, StopCriterion::fe);
  const double rec_c = relative_error(coarse, StopCriterion::recovered);
  const double rec_f = relative_error(fine, StopCriterion::recovered);
  CHECK(fe_f < fe_c);
  CHECK(rec_f < rec_c);
  // the recovered solution reads as the more accurate one on both meshes
  CHECK(rec_c < fe_c);
  CHECK(rec_f < fe_f);
  CHECK(fe_c == doctest::Approx(68.5576).epsilon(1e-3));
  CHECK(fe_f == doctest::Approx(30.0189).epsilon(1e-3));
}

TEST_CASE("marking follows the equal error distribution threshold") {
  const Benchmark b = benchmark_by_name("square4");
  const QuadMesh mesh = build_structured_mesh(b.domain, 2, ElementOrder::q4);
  ErrorReport synthetic;
  synthetic.zz2_k = {1.0, 1.0, 1.0, 1.0};
  synthetic.zz2 = 4.0;
  synthetic.energy_fe2 = 9996.0;

  // every element shares the error and the budget is exceeded: all marked
  CHECK(mark_elements(synthetic, mesh, 1.0).size() == 4);
  // target met by the fe measure (2 percent here): nothing marked
  CHECK(mark_elements(synthetic, mesh, 5.0).empty());

  CHECK_THROWS_AS(mark_elements(synthetic, mesh, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mark_elements(synthetic, mesh, 100.0), std::invalid_argument);
  const QuadMesh other = build_structured_mesh(b.domain, 3, ElementOrder::q4);
  CHECK_THROWS_AS(mark_elements(synthetic, other, 1.0), std::invalid_argument);
}

TEST_CASE("marking concentrates at the reentrant corner") {
  const Benchmark b = benchmark_by_name("lshape");
  const QuadMesh mesh = build_structured_mesh(b.domain, 8, ElementOrder::q4);
  const ErrorReport rep = report_on(b, mesh);
  const std::vector<ElemId> marks = mark_elements(rep, mesh, 2.0);
  REQUIRE(!marks.empty());
  // selective, not a uniform split
  CHECK(marks.size() < static_cast<std::size_t>(mesh.element_count()));
  CHECK(marks.size() > static_cast<std::size_t>(mesh.element_count()) / 2);
  const std::vector<ElemId> corner = corner_adjacent(mesh, Vec2(0.0, 0.0));
  REQUIRE(corner.size() == 3);
  for (ElemId e : corner)
    CHECK(std::find(marks.begin(), marks.end(), e) != marks.end());
}

TEST_CASE("a huge target stops the loop on the first mesh") {
  AdaptiveConfig cfg;
  cfg.benchmark = "square4";
  cfg.target_percent = 96.0;
  AdaptiveTrace t = run_adaptive(cfg);
  REQUIRE(t.steps.size() == 1);
  CHECK(t.stop_reason == StopReason::target_met);
  CHECK(t.steps.back().stopped);
  CHECK(t.final_dofs == 15);
  CHECK(t.anomalies.empty());
}

TEST_CASE("paired pipe runs stop far apart in dofs") {
  AdaptiveConfig cfg;
  cfg.benchmark = "pipe";
  cfg.target_percent = 3.0;
  cfg.criterion = StopCriterion::fe;
  const AdaptiveTrace fe = run_adaptive(cfg);
  cfg.criterion = StopCriterion::recovered;
  const AdaptiveTrace rec = run_adaptive(cfg);

  CHECK(fe.stop_reason == StopReason::target_met);
  CHECK(rec.stop_reason == StopReason::target_met);
  CHECK(fe.steps.back().rel_fe <= 3.0);
  CHECK(rec.steps.back().rel_recovered <= 3.0);
  CHECK(rec.final_dofs < fe.final_dofs);
  CHECK(5 * rec.final_dofs <= fe.final_dofs);

  for (const AdaptiveTrace* t : {&fe, &rec}) {
    CHECK(t->anomalies.empty());
    for (std::size_t i = 0; i < t->steps.size(); ++i) {
      const AdaptiveStep& s = t->steps[i];
      CHECK(s.rel_fe > 0.0);
      CHECK(s.rel_recovered > 0.0);
      CHECK(s.rel_recovered < s.rel_fe);
      CHECK(s.report.e3 <= s.report.zz2);
      CHECK(static_cast<std::size_t>(s.mesh.element_count()) == s.report.zz2_k.size());
      if (i + 1 < t->steps.size()) {
        CHECK(s.marked > 0);
        CHECK(!s.stopped);
      }
    }
  }
  const std::size_t nf = fe.steps.size();
  const std::size_t nr = rec.steps.size();
  CHECK(fe.steps[nf - 1].rel_fe <= fe.steps[nf - 2].rel_fe);
  CHECK(rec.steps[nr - 1].rel_recovered <= rec.steps[nr - 2].rel_recovered);
}

TEST_CASE("recovered estimate converges faster along the adaptive trace") {
  AdaptiveConfig cfg;
  cfg.benchmark = "pipe";
  cfg.target_percent = 1.0;
  cfg.criterion = StopCriterion::recovered;
  const AdaptiveTrace t = run_adaptive(cfg);
  REQUIRE(t.steps.size() >= 3);
  const double zz_slope = trace_slope(t, false);
  const double e3_slope = trace_slope(t, true);
  CAPTURE(zz_slope);
  CAPTURE(e3_slope);
  CHECK(zz_slope - e3_slope >= 0.2);
  // the governing measure never increases across the final two iterations
  const std::size_t n = t.steps.size();
  CHECK(t.steps[n - 1].rel_recovered <= t.steps[n - 2].rel_recovered);
}

TEST_CASE("level cap ends the loop with an explicit reason") {
  AdaptiveConfig cfg;
  cfg.benchmark = "lshape";
  cfg.target_percent = 1.0;
  cfg.max_level = 4;
  cfg.max_iterations = 12;
  const AdaptiveTrace t = run_adaptive(cfg);
  CHECK(t.stop_reason == StopReason::level_cap);
  CHECK(!t.steps.back().stopped);
  CHECK(t.steps.back().marked == 0);
  bool noted = false;
  for (const auto& a : t.anomalies) noted |= a.find("level cap") != std::string::npos;
  CHECK(noted);
  const std::size_t n = t.steps.size();
  REQUIRE(n >= 2);
  CHECK(t.steps[n - 1].rel_recovered <= t.steps[n - 2].rel_recovered + 1e-9);
  for (const AdaptiveStep& s : t.steps)
    for (const Element& el : s.mesh.elements()) CHECK(el.cell.level <= 4);
}

TEST_CASE("max iterations ends the loop with a warning") {
  AdaptiveConfig cfg;
  cfg.benchmark = "square4";
  cfg.target_percent = 0.5;
  cfg.max_iterations = 3;
  const AdaptiveTrace t = run_adaptive(cfg);
  CHECK(t.stop_reason == StopReason::max_iterations);
  CHECK(t.steps.size() == 3);
  CHECK(!t.steps.back().stopped);
  bool noted = false;
  for (const auto& a : t.anomalies) noted |= a.find("max iterations") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("adapted singular meshes keep the recovered indicator effective") {
  AdaptiveConfig cfg;
  cfg.benchmark = "lshape";
  cfg.order = ElementOrder::q8;
  cfg.target_percent = 2.0;
  cfg.criterion = StopCriterion::recovered;
  cfg.with_reference = true;
  const AdaptiveTrace t = run_adaptive(cfg);
  CHECK(t.stop_reason == StopReason::target_met);
  CHECK(t.anomalies.empty());
  for (const AdaptiveStep& s : t.steps) {
    CAPTURE(s.iteration);
    CHECK(s.report.theta_e3 >= 0.3);
    CHECK(s.report.theta_e3 <= 3.0);
    CHECK(s.report.theta_zz >= 0.8);
    CHECK(s.report.theta_zz <= 2.0);
  }
}

TEST_CASE("identical configs produce identical traces") {
  AdaptiveConfig cfg;
  cfg.benchmark = "pipe";
  cfg.target_percent = 3.0;
  const AdaptiveTrace a = run_adaptive(cfg);
  const AdaptiveTrace b = run_adaptive(cfg);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.final_dofs == b.final_dofs);
  CHECK(a.stop_reason == b.stop_reason);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].report.dofs == b.steps[i].report.dofs);
    CHECK(a.steps[i].report.zz2 == b.steps[i].report.zz2);
    CHECK(a.steps[i].report.e1 == b.steps[i].report.e1);
    CHECK(a.steps[i].report.e3 == b.steps[i].report.e3);
    CHECK(a.steps[i].report.e_ub == b.steps[i].report.e_ub);
    CHECK(a.steps[i].marked == b.steps[i].marked);
    CHECK(a.steps[i].report.zz2_k == b.steps[i].report.zz2_k);
  }
}

TEST_CASE("config validation") {
  AdaptiveConfig cfg;
  cfg.benchmark = "square4";
  cfg.target_percent = 0.0;
  CHECK_THROWS_AS(run_adaptive(cfg), std::invalid_argument);
  cfg.target_percent = 100.0;
  CHECK_THROWS_AS(run_adaptive(cfg), std::invalid_argument);
  cfg.target_percent = 1.0;
  cfg.max_iterations = 0;
  CHECK_THROWS_AS(run_adaptive(cfg), std::invalid_argument);
  cfg.max_iterations = 25;
  cfg.max_level = kMaxRefinementLevel + 1;
  CHECK_THROWS_AS(run_adaptive(cfg), std::invalid_argument);
  cfg.max_level = kMaxRefinementLevel;
  cfg.benchmark = "plate9";
  CHECK_THROWS_AS(run_adaptive(cfg), std::invalid_argument);
}

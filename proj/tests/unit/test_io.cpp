// Serialization, reporting, and plotting round trips.
#include <cstddef>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "recfem/adaptivity.hpp"
#include "recfem/analytic.hpp"
#include "recfem/estimators.hpp"
#include "recfem/fem.hpp"
#include "recfem/io.hpp"
#include "recfem/mesh.hpp"
#include "recfem/recovery.hpp"

using namespace recfem;
using nlohmann::json;

namespace {

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

void check_meshes_identical(const QuadMesh& a, const QuadMesh& b) {
  REQUIRE(a.node_count() == b.node_count());
  REQUIRE(a.element_count() == b.element_count());
  CHECK(a.order() == b.order());
  CHECK(a.divisions() == b.divisions());
  for (NodeId n = 0; n < a.node_count(); ++n) {
    CHECK(a.node(n)[0] == b.node(n)[0]);
    CHECK(a.node(n)[1] == b.node(n)[1]);
  }
  const int npe = nodes_per_element(a.order());
  for (ElemId e = 0; e < a.element_count(); ++e)
    for (int k = 0; k < npe; ++k) CHECK(a.element(e).nodes[k] == b.element(e).nodes[k]);
  REQUIRE(a.boundary_edges().size() == b.boundary_edges().size());
  for (std::size_t i = 0; i < a.boundary_edges().size(); ++i) {
    CHECK(a.boundary_edges()[i].element == b.boundary_edges()[i].element);
    CHECK(a.boundary_edges()[i].side == b.boundary_edges()[i].side);
    CHECK(a.boundary_edges()[i].tag == b.boundary_edges()[i].tag);
  }
  REQUIRE(a.constraints().size() == b.constraints().size());
  for (std::size_t i = 0; i < a.constraints().size(); ++i) {
    CHECK(a.constraints()[i].slave == b.constraints()[i].slave);
    REQUIRE(a.constraints()[i].terms.size() == b.constraints()[i].terms.size());
    for (std::size_t t = 0; t < a.constraints()[i].terms.size(); ++t) {
      CHECK(a.constraints()[i].terms[t].master == b.constraints()[i].terms[t].master);
      CHECK(a.constraints()[i].terms[t].weight == b.constraints()[i].terms[t].weight);
    }
  }
}

}  // namespace

TEST_CASE("mesh json round trip preserves nodes elements and tags") {
  const Benchmark square = benchmark_by_name("square4");
  const Benchmark pipe = benchmark_by_name("pipe");

  QuadMesh uniform = build_structured_mesh(square.domain, 3, ElementOrder::q4);
  check_meshes_identical(uniform, mesh_from_json(mesh_to_json(uniform)));

  QuadMesh curved = build_structured_mesh(pipe.domain, 2, ElementOrder::q8);
  check_meshes_identical(curved, mesh_from_json(mesh_to_json(curved)));

  // Hanging nodes and two refinement levels.
  QuadMesh refined = refine_elements(curved, {0, 3}).mesh;
  refined = refine_elements(refined, {1, 4, 9}).mesh;
  REQUIRE(!refined.constraints().empty());
  check_meshes_identical(refined, mesh_from_json(mesh_to_json(refined)));

  const Benchmark lshape = benchmark_by_name("lshape");
  QuadMesh corner = build_structured_mesh(lshape.domain, 2, ElementOrder::q8);
  corner = refine_elements(corner, {0}).mesh;
  check_meshes_identical(corner, mesh_from_json(mesh_to_json(corner)));
}

TEST_CASE("mesh json rejects malformed and tampered documents") {
  const Benchmark pipe = benchmark_by_name("pipe");
  QuadMesh mesh = build_structured_mesh(pipe.domain, 2, ElementOrder::q4);
  mesh = refine_elements(mesh, {0}).mesh;
  const std::string good = mesh_to_json(mesh);
  REQUIRE_NOTHROW(mesh_from_json(good));

  CHECK_THROWS_AS(mesh_from_json("not json at all"), std::invalid_argument);
  CHECK_THROWS_AS(mesh_from_json("{}"), std::invalid_argument);
  CHECK_THROWS_AS(mesh_from_json(good.substr(0, good.size() / 2)), std::invalid_argument);

  {
    json doc = json::parse(good);
    doc["schema"] = "recfem-mesh-2";
    CHECK_THROWS_AS(mesh_from_json(doc.dump()), std::invalid_argument);
  }
  {
    // A perturbed stored node must fail the bitwise verification.
    json doc = json::parse(good);
    doc["nodes"][0][0] = doc["nodes"][0][0].get<double>() + 1e-9;
    CHECK_THROWS_AS(mesh_from_json(doc.dump()), std::invalid_argument);
  }
  {
    json doc = json::parse(good);
    doc["nodes"].erase(doc["nodes"].size() - 1);
    CHECK_THROWS_AS(mesh_from_json(doc.dump()), std::invalid_argument);
  }
  {
    json doc = json::parse(good);
    auto& first = doc["elements"][0];
    std::swap(first[0], first[1]);
    CHECK_THROWS_AS(mesh_from_json(doc.dump()), std::invalid_argument);
  }
  {
    json doc = json::parse(good);
    doc["boundary_edges"].erase(0);
    CHECK_THROWS_AS(mesh_from_json(doc.dump()), std::invalid_argument);
  }
  {
    json doc = json::parse(good);
    doc["divisions"] = 0;
    CHECK_THROWS_AS(mesh_from_json(doc.dump()), std::invalid_argument);
  }
  {
    json doc = json::parse(good);
    doc["forest"] = json::array();
    CHECK_THROWS_AS(mesh_from_json(doc.dump()), std::invalid_argument);
  }
  {
    json doc = json::parse(good);
    doc["order"] = "q9";
    CHECK_THROWS_AS(mesh_from_json(doc.dump()), std::invalid_argument);
  }
}

TEST_CASE("restore mesh rebuilds from the forest and validates input") {
  const Benchmark lshape = benchmark_by_name("lshape");
  QuadMesh mesh = build_structured_mesh(lshape.domain, 4, ElementOrder::q4);
  mesh = refine_elements(mesh, {5, 6, 7}).mesh;
  mesh = refine_elements(mesh, {10}).mesh;

  const auto forest = mesh.forest_cells();
  const QuadMesh again = restore_mesh(lshape.domain, ElementOrder::q4, 4, forest);
  check_meshes_identical(mesh, again);

  CHECK_THROWS_AS(restore_mesh(lshape.domain, ElementOrder::q4, 0, forest), std::invalid_argument);
  CHECK_THROWS_AS(restore_mesh(lshape.domain, ElementOrder::q4, 65, forest), std::invalid_argument);
  CHECK_THROWS_AS(restore_mesh(lshape.domain, ElementOrder::q4, 4, {}), std::invalid_argument);
}

TEST_CASE("field json carries displacement stress and material") {
  const Benchmark square = benchmark_by_name("square4");
  const QuadMesh mesh = build_structured_mesh(square.domain, 2, ElementOrder::q4);
  const SolveResult sol = assemble_and_solve(mesh, square.material, square.load);

  const json doc = json::parse(field_to_json(sol.field));
  CHECK(doc["schema"].get<std::string>() == "recfem-field-1");
  REQUIRE(doc["displacement"].size() == static_cast<std::size_t>(2 * mesh.node_count()));
  REQUIRE(doc["element_stress"].size() == static_cast<std::size_t>(mesh.element_count()));
  CHECK(doc["element_stress"][0].size() == 3);
  CHECK(doc["material"]["youngs"].get<double>() == 1000.0);
  CHECK(doc["material"]["poisson"].get<double>() == 0.3);
  CHECK(doc["material"]["state"].get<std::string>() == "strain");

  // Doubles must survive the text encoding exactly.
  for (const NodeId n : {0, 3, 7}) {
    CHECK(doc["displacement"][static_cast<std::size_t>(2 * n)].get<double>() ==
          sol.field.nodal_values()[2 * n]);
    CHECK(doc["displacement"][static_cast<std::size_t>(2 * n + 1)].get<double>() ==
          sol.field.nodal_values()[2 * n + 1]);
  }
  const Vec3 s0 = sol.field.stress(0, Vec2(0.0, 0.0));
  CHECK(doc["element_stress"][0][0].get<double>() == s0[0]);
  CHECK(doc["element_stress"][0][2].get<double>() == s0[2]);

  // The embedded mesh document restores on its own.
  const QuadMesh back = mesh_from_json(doc.dump(1));
  check_meshes_identical(mesh, back);
}

TEST_CASE("vtk output lays out points cells and data blocks") {
  const Benchmark pipe = benchmark_by_name("pipe");
  QuadMesh mesh = build_structured_mesh(pipe.domain, 2, ElementOrder::q4);
  mesh = refine_elements(mesh, {0, 3}).mesh;
  const SolveResult sol = assemble_and_solve(mesh, pipe.material, pipe.load);

  std::vector<VtkPointVectors> pv{{"displacement", sol.field.nodal_values()}};
  std::vector<VtkCellScalars> cs{
      {"zz2 k", std::vector<double>(static_cast<std::size_t>(mesh.element_count()), 1.5)}};
  const std::string vtk = mesh_to_vtk(mesh, pv, cs);
  const auto lines = split_lines(vtk);

  REQUIRE(lines.size() > 10);
  CHECK(lines[0] == "# vtk DataFile Version 3.0");
  CHECK(lines[1] == "recfem annulus_quarter mesh");
  CHECK(lines[2] == "ASCII");
  CHECK(lines[3] == "DATASET UNSTRUCTURED_GRID");
  CHECK(lines[4] == "POINTS 19 double");
  CHECK(count_of(vtk, "CELLS 10 50") == 1);  // 10 quads, 10 * (1 + 4) entries
  CHECK(count_of(vtk, "CELL_TYPES 10") == 1);
  CHECK(count_of(vtk, "POINT_DATA 19") == 1);
  CHECK(count_of(vtk, "VECTORS displacement double") == 1);
  CHECK(count_of(vtk, "CELL_DATA 10") == 1);
  CHECK(count_of(vtk, "SCALARS zz2_k double 1") == 1);  // spaces sanitized
  CHECK(count_of(vtk, "LOOKUP_TABLE default") == 1);

  // Every point row is x y 0.
  for (std::size_t i = 5; i < 5 + 19; ++i) {
    CAPTURE(lines[i]);
    CHECK(lines[i].size() >= 5);
    CHECK(lines[i].substr(lines[i].size() - 2) == " 0");
  }
  // Quad rows list four corners.
  std::size_t cells_at = 0;
  while (lines[cells_at].rfind("CELLS", 0) != 0) ++cells_at;
  for (std::size_t i = cells_at + 1; i <= cells_at + 10; ++i) CHECK(lines[i].rfind("4 ", 0) == 0);
  std::size_t types_at = cells_at;
  while (lines[types_at].rfind("CELL_TYPES", 0) != 0) ++types_at;
  for (std::size_t i = types_at + 1; i <= types_at + 10; ++i) CHECK(lines[i] == "9");

  CHECK(mesh_to_vtk(mesh, pv, cs) == vtk);

  std::vector<VtkPointVectors> bad_pv{{"u", Eigen::VectorXd::Zero(5)}};
  CHECK_THROWS_AS(mesh_to_vtk(mesh, bad_pv, {}), std::invalid_argument);
  std::vector<VtkCellScalars> bad_cs{{"zz", std::vector<double>(3, 0.0)}};
  CHECK_THROWS_AS(mesh_to_vtk(mesh, {}, bad_cs), std::invalid_argument);
}

TEST_CASE("vtk quadratic cells use the midedge node order") {
  const QuadMesh mesh = build_structured_mesh(DomainSpec::square2x2(), 1, ElementOrder::q8);
  const std::string vtk = mesh_to_vtk(mesh);
  CHECK(count_of(vtk, "POINTS 8 double") == 1);
  CHECK(count_of(vtk, "CELLS 1 9") == 1);
  CHECK(count_of(vtk, "8 0 1 2 3 4 5 6 7") == 1);
  const auto lines = split_lines(vtk);
  std::size_t types_at = 0;
  while (lines[types_at].rfind("CELL_TYPES", 0) != 0) ++types_at;
  CHECK(lines[types_at + 1] == "23");
}

TEST_CASE("reports csv pins the column order and sentinel values") {
  ErrorReport r;
  r.mesh_index = 2;
  r.dofs = 100;
  r.zz2 = 0.5;
  r.e1 = -0.25;
  r.e2 = 0.25;
  r.e3 = 0.75;
  r.e_ub = 1.5;
  r.e_es_l2 = 0.1;
  r.s_l2 = 15.0;
  r.energy_fe2 = 40.0;
  r.energy_rec2 = 41.0;

  const std::string csv = reports_to_csv({r}, {3.25});
  const auto lines = split_lines(csv);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] ==
        "mesh_index,ndof,zz2,e1,e2,e3,e_ub,exact_e2,exact_estar2,theta_zz,theta_e3,"
        "theta_e1,theta_e2,theta_ub,theta_e1_root,theta_e2_root,theta_e3_root,theta_ub_root,"
        "e_es_l2,s_l2,energy_fe2,energy_rec2,wall_ms");
  CHECK(count_of(lines[0], ",") == count_of(lines[1], ","));
  // Without a reference solution the exact and effectivity slots carry -1.
  CHECK(lines[1].rfind("2,100,0.5,-0.25,0.25,0.75,1.5,-1,-1,-1,-1,-1,-1,-1,", 0) == 0);
  CHECK(lines[1].substr(lines[1].size() - 5) == ",3.25");

  // Signed square-root convention for the extra effectivity columns.
  ErrorReport t = r;
  t.theta_e1 = -4.0;
  t.theta_e2 = 2.25;
  t.theta_e3 = 4.0;
  t.theta_ub = 9.0;
  t.theta_zz = 1.0;
  const auto row = split_lines(reports_to_csv({t}, {}))[1];
  CHECK(count_of(row, ",-2,1.5,2,3,") == 1);

  CHECK_THROWS_AS(reports_to_csv({r, t}, {1.0}), std::invalid_argument);
  CHECK(reports_to_csv({r}, {3.25}) == csv);
}

TEST_CASE("reports csv round trips full precision doubles") {
  const Benchmark pipe = benchmark_by_name("pipe");
  const QuadMesh mesh = build_structured_mesh(pipe.domain, 2, ElementOrder::q4);
  const SolveResult sol = assemble_and_solve(mesh, pipe.material, pipe.load);
  const RecoveredField rec = recover_displacement(mesh, sol.field, pipe.load, pipe.material);
  const ErrorReport rep = assemble_report(sol.field, rec, pipe.load, &pipe, 0);

  const auto lines = split_lines(reports_to_csv({rep}, {1.0}));
  REQUIRE(lines.size() == 2);
  const auto cells = [&] {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t pos = lines[1].find(','); pos != std::string::npos;
         pos = lines[1].find(',', start)) {
      out.push_back(lines[1].substr(start, pos - start));
      start = pos + 1;
    }
    out.push_back(lines[1].substr(start));
    return out;
  }();
  REQUIRE(cells.size() == 23);
  CHECK(std::strtod(cells[2].c_str(), nullptr) == rep.zz2);
  CHECK(std::strtod(cells[3].c_str(), nullptr) == rep.e1);
  CHECK(std::strtod(cells[7].c_str(), nullptr) == rep.exact_fe2);
  CHECK(std::strtod(cells[8].c_str(), nullptr) == rep.exact_rec2);
  CHECK(std::strtod(cells[9].c_str(), nullptr) == rep.theta_zz);
  CHECK(std::strtod(cells[10].c_str(), nullptr) == rep.theta_e3);
  CHECK(rep.exact_fe2 > 0.0);  // reference attached, sentinels replaced
}

TEST_CASE("trace csv and summary json describe the adaptive run") {
  AdaptiveConfig config;
  config.benchmark = "square4";
  config.order = ElementOrder::q4;
  config.target_percent = 5.0;
  config.criterion = StopCriterion::recovered;
  config.initial_divisions = 2;
  const AdaptiveTrace trace = run_adaptive(config);
  REQUIRE(trace.steps.size() >= 2);

  const std::string csv = trace_to_csv(trace);
  const auto lines = split_lines(csv);
  REQUIRE(lines.size() == trace.steps.size() + 1);
  CHECK(lines[0].rfind("iteration,mesh_index,", 0) == 0);
  const std::string suffix = ",rel_fe,rel_recovered,stopped,marked,wall_ms";
  CHECK(lines[0].substr(lines[0].size() - suffix.size()) == suffix);
  CHECK(lines[1].rfind("0,0,", 0) == 0);
  CHECK(lines[2].rfind("1,1,", 0) == 0);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const bool last = i + 1 == lines.size();
    CHECK(count_of(lines[i], ",") == count_of(lines[0], ","));
    // stopped flag sits third from the end
    const auto tail = lines[i].substr(0, lines[i].rfind(','));
    const auto tail2 = tail.substr(0, tail.rfind(','));
    const char flag = tail2[tail2.rfind(',') + 1];
    CHECK(flag == (last ? '1' : '0'));
  }

  const json summary = json::parse(trace_summary_json(trace));
  CHECK(summary["stop_reason"].get<std::string>() == "target_met");
  CHECK(summary["final_dofs"].get<int>() == trace.final_dofs);
  CHECK(summary["iterations"].get<int>() == static_cast<int>(trace.steps.size()));
  CHECK(summary["total_seconds"].get<double>() >= 0.0);
  CHECK(summary["anomalies"].is_array());

  CHECK(stop_reason_name(StopReason::target_met) == "target_met");
  CHECK(stop_reason_name(StopReason::max_iterations) == "max_iterations");
  CHECK(stop_reason_name(StopReason::level_cap) == "level_cap");
}

TEST_CASE("svg plots filter log axes escape labels and draw the target line") {
  PlotSpec spec;
  spec.title = "theta & <bounds>";
  spec.x_label = "dof";
  spec.y_label = "effectivity";
  spec.series.push_back({"e3 <q4>", {10.0, 100.0, 1000.0}, {0.8, 1.0, 1.2}});
  spec.hline = 1.0;

  const std::string svg = plot_to_svg(spec);
  CHECK(svg.rfind("<?xml version=\"1.0\" encoding=\"UTF-8\"?>", 0) == 0);
  CHECK(count_of(svg, "<svg ") == 1);
  CHECK(count_of(svg, "</svg>") == 1);
  CHECK(count_of(svg, "<polyline ") == 1);
  CHECK(count_of(svg, "<circle ") == 3);
  CHECK(count_of(svg, "stroke-dasharray") == 1);
  CHECK(count_of(svg, "theta &amp; &lt;bounds&gt;") == 1);
  CHECK(count_of(svg, "e3 &lt;q4&gt;") == 1);
  CHECK(svg.find("<q4>") == std::string::npos);
  CHECK(plot_to_svg(spec) == svg);

  // Nonpositive values cannot sit on a log scale; the point drops out.
  PlotSpec logdrop;
  logdrop.title = "drop";
  logdrop.series.push_back({"s", {0.0, 10.0, 100.0}, {1.0, 1.0, 1.0}});
  CHECK(count_of(plot_to_svg(logdrop), "<circle ") == 2);

  PlotSpec linear;
  linear.title = "linear";
  linear.log_x = false;
  linear.log_y = false;
  linear.series.push_back({"s", {-1.0, 0.0, 1.0}, {-2.0, 0.0, 2.0}});
  CHECK(count_of(plot_to_svg(linear), "<circle ") == 3);

  // Two series get distinct colors and a legend entry each.
  PlotSpec two;
  two.title = "pair";
  two.series.push_back({"a", {1.0, 10.0}, {1.0, 2.0}});
  two.series.push_back({"b", {1.0, 10.0}, {2.0, 4.0}});
  const std::string duo = plot_to_svg(two);
  CHECK(count_of(duo, "<polyline ") == 2);
  CHECK(count_of(duo, "#1f77b4") >= 2);
  CHECK(count_of(duo, "#d62728") >= 2);
  CHECK(count_of(duo, ">a</text>") == 1);
  CHECK(count_of(duo, ">b</text>") == 1);
}

TEST_CASE("report json mirrors the per element maps") {
  const Benchmark square = benchmark_by_name("square4");
  const QuadMesh mesh = build_structured_mesh(square.domain, 3, ElementOrder::q4);
  const SolveResult sol = assemble_and_solve(mesh, square.material, square.load);
  const RecoveredField rec = recover_displacement(mesh, sol.field, square.load, square.material);
  const ErrorReport rep = assemble_report(sol.field, rec, square.load, &square, 4);

  const json doc = json::parse(report_to_json(rep));
  CHECK(doc["mesh_index"].get<int>() == 4);
  CHECK(doc["ndof"].get<int>() == rep.dofs);
  CHECK(doc["zz2"].get<double>() == rep.zz2);
  CHECK(doc["e3"].get<double>() == rep.e3);
  REQUIRE(doc["zz2_per_element"].size() == static_cast<std::size_t>(mesh.element_count()));
  REQUIRE(doc["e3_per_element"].size() == static_cast<std::size_t>(mesh.element_count()));
  CHECK(doc["zz2_per_element"][5].get<double>() == rep.zz2_k[5]);
  CHECK(doc["exact_e2"].get<double>() == rep.exact_fe2);
  CHECK(doc["theta_e3"].get<double>() == rep.theta_e3);
  REQUIRE(doc["exact_estar2_per_element"].size() ==
          static_cast<std::size_t>(mesh.element_count()));

  // Without the reference solution the exact keys disappear.
  const ErrorReport bare = assemble_report(sol.field, rec, square.load, nullptr, 0);
  const json plain = json::parse(report_to_json(bare));
  CHECK(!plain.contains("exact_e2"));
  CHECK(!plain.contains("theta_e3"));
  CHECK(!plain.contains("exact_estar2_per_element"));
  CHECK(plain["zz2"].get<double>() == bare.zz2);
}

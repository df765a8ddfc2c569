// recfem command line: solve, estimate, adapt, verify.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "recfem/adaptivity.hpp"
#include "recfem/analytic.hpp"
#include "recfem/estimators.hpp"
#include "recfem/fem.hpp"
#include "recfem/io.hpp"
#include "recfem/mesh.hpp"
#include "recfem/recovery.hpp"

namespace fs = std::filesystem;
using namespace recfem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string benchmark = "square4";
  std::string order = "q4";
  std::string out = "out";
  int divisions = 2;
  int meshes = 3;
  double target = 1.0;
  std::string stop_on = "both";
  int max_iterations = 25;
  bool negative_control = false;
};

ElementOrder order_from(const std::string& s) {
  if (s == "q4") return ElementOrder::q4;
  if (s == "q8") return ElementOrder::q8;
  throw std::invalid_argument("unknown element order '" + s + "' (expected q4 or q8)");
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out.good()) throw std::invalid_argument("cannot write " + path.string());
  std::printf("wrote %s\n", path.string().c_str());
}

fs::path prepare_out_dir(const Options& opt) {
  const fs::path dir(opt.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::invalid_argument("cannot create output directory " + dir.string());
  return dir;
}

double wall_ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Relative error in the energy norm, percent, against the exact energy.
double rel_exact_percent(const ErrorReport& r, StopCriterion crit) {
  const double err2 = crit == StopCriterion::fe ? r.exact_fe2 : r.exact_rec2;
  if (err2 < 0.0 || r.exact_energy2 <= 0.0) return -1.0;
  return 100.0 * std::sqrt(err2 / r.exact_energy2);
}

int cmd_verify(const Options& opt) {
  std::vector<std::string> names =
      opt.benchmark == "all" ? benchmark_names() : std::vector<std::string>{opt.benchmark};
  bool all_pass = true;
  for (const std::string& name : names) {
    Benchmark bench = benchmark_by_name(name);
    if (opt.negative_control) {
      // Corrupt the reference stress formula to prove the checks can fail.
      const AnalyticSolution clean = bench.exact;
      bench.exact.stress = [clean](const Vec2& x) {
        Vec3 s = clean.stress(x);
        s[0] += 0.01 * (1.0 + s.norm());
        return s;
      };
    }
    const ConsistencyReport rep = verify_consistency(bench);
    const auto line = [&](const char* check, double value, double tol) {
      std::printf("[%s] %-8s %-22s %.3e (tol %.0e)\n", value <= tol ? "PASS" : "FAIL",
                  name.c_str(), check, value, tol);
    };
    line("constitutive", rep.max_constitutive, 1e-6);
    line("equilibrium", rep.max_equilibrium, 1e-6);
    line("traction", rep.max_traction, 1e-6);
    line("symmetry-displacement", rep.max_symmetry_displacement, 1e-9);
    line("symmetry-traction", rep.max_symmetry_traction, 1e-9);
    all_pass = all_pass && rep.pass;
  }
  if (!all_pass) {
    std::printf("verification FAILED\n");
    return kExitVerification;
  }
  std::printf("verification passed\n");
  return kExitOk;
}

int cmd_solve(const Options& opt) {
  const Benchmark bench = benchmark_by_name(opt.benchmark);
  const ElementOrder order = order_from(opt.order);
  const fs::path dir = prepare_out_dir(opt);

  const QuadMesh mesh = build_structured_mesh(bench.domain, opt.divisions, order);
  const SolveResult sol = assemble_and_solve(mesh, bench.material, bench.load);
  std::printf("%s %s divisions %d: %d nodes, %d elements, %d free dofs\n", bench.name.c_str(),
              opt.order.c_str(), opt.divisions, mesh.node_count(), mesh.element_count(),
              sol.free_dofs);

  write_file(dir / "mesh.json", mesh_to_json(mesh));
  write_file(dir / "field.json", field_to_json(sol.field));

  std::vector<VtkCellScalars> stress(3);
  stress[0].name = "sigma_xx";
  stress[1].name = "sigma_yy";
  stress[2].name = "sigma_xy";
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    const Vec3 s = sol.field.stress(e, Vec2(0.0, 0.0));
    for (int c = 0; c < 3; ++c) stress[static_cast<std::size_t>(c)].values.push_back(s[c]);
  }
  const std::vector<VtkPointVectors> disp{{"displacement", sol.field.nodal_values()}};
  write_file(dir / "solution.vtk", mesh_to_vtk(mesh, disp, stress));
  return kExitOk;
}

int cmd_estimate(const Options& opt) {
  const Benchmark bench = benchmark_by_name(opt.benchmark);
  const ElementOrder order = order_from(opt.order);
  if (opt.meshes < 1) throw std::invalid_argument("--meshes must be at least 1");
  const fs::path dir = prepare_out_dir(opt);

  std::vector<ErrorReport> reports;
  std::vector<double> wall;
  int divisions = opt.divisions;
  for (int k = 0; k < opt.meshes; ++k, divisions *= 2) {
    const auto t0 = std::chrono::steady_clock::now();
    const QuadMesh mesh = build_structured_mesh(bench.domain, divisions, order);
    const SolveResult sol = assemble_and_solve(mesh, bench.material, bench.load);
    const RecoveredField rec = recover_displacement(mesh, sol.field, bench.load, bench.material);
    ErrorReport rep = assemble_report(sol.field, rec, bench.load, &bench, k);
    wall.push_back(wall_ms_since(t0));
    std::printf("mesh %d: divisions %d, ndof %d, theta_e3 %.4f\n", k, divisions, rep.dofs,
                rep.theta_e3);

    const std::vector<VtkCellScalars> maps{{"exact_estar2_k", rep.exact_rec2_k},
                                           {"e3_k", rep.e3_k}};
    write_file(dir / ("maps_mesh" + std::to_string(k) + ".vtk"), mesh_to_vtk(mesh, {}, maps));
    reports.push_back(std::move(rep));
  }
  write_file(dir / "estimate.csv", reports_to_csv(reports, wall));

  PlotSpec plot;
  plot.title = bench.name + " " + opt.order + " effectivity";
  plot.x_label = "degrees of freedom";
  plot.y_label = "effectivity";
  PlotSeries t1{"|theta_e1|", {}, {}}, t2{"theta_e2", {}, {}}, t3{"theta_e3", {}, {}};
  std::string data = "ndof,abs_theta_e1,theta_e2,theta_e3\n";
  const auto g17 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const ErrorReport& r : reports) {
    const double dof = static_cast<double>(r.dofs);
    t1.x.push_back(dof);
    t1.y.push_back(std::abs(r.theta_e1));
    t2.x.push_back(dof);
    t2.y.push_back(r.theta_e2);
    t3.x.push_back(dof);
    t3.y.push_back(r.theta_e3);
    data += g17(dof) + "," + g17(std::abs(r.theta_e1)) + "," + g17(r.theta_e2) + "," +
            g17(r.theta_e3) + "\n";
  }
  plot.series = {t1, t2, t3};
  plot.hline = 1.0;
  write_file(dir / "effectivity.csv", data);
  write_file(dir / "effectivity.svg", plot_to_svg(plot));
  return kExitOk;
}

int cmd_adapt(const Options& opt) {
  const Benchmark bench = benchmark_by_name(opt.benchmark);  // validates the name up front
  AdaptiveConfig config;
  config.benchmark = bench.name;
  config.order = order_from(opt.order);
  config.target_percent = opt.target;
  config.initial_divisions = opt.divisions;
  config.max_iterations = opt.max_iterations;
  config.with_reference = true;
  if (opt.stop_on != "both" && opt.stop_on != "fe" && opt.stop_on != "recovered")
    throw std::invalid_argument("--stop-on expects fe, recovered, or both");
  const fs::path dir = prepare_out_dir(opt);

  struct NamedTrace {
    StopCriterion criterion;
    std::string name;
    AdaptiveTrace trace;
  };
  std::vector<NamedTrace> runs;
  if (opt.stop_on != "recovered") runs.push_back({StopCriterion::fe, "fe", {}});
  if (opt.stop_on != "fe") runs.push_back({StopCriterion::recovered, "recovered", {}});

  nlohmann::json summary{{"benchmark", bench.name},
                         {"order", opt.order},
                         {"target_percent", opt.target}};
  for (NamedTrace& run : runs) {
    config.criterion = run.criterion;
    run.trace = run_adaptive(config);
    std::printf("stop on %s: %zu iterations, %d dofs, %s\n", run.name.c_str(),
                run.trace.steps.size(), run.trace.final_dofs,
                stop_reason_name(run.trace.stop_reason).c_str());
    write_file(dir / ("adapt_" + run.name + ".csv"), trace_to_csv(run.trace));
    summary[run.name] = nlohmann::json::parse(trace_summary_json(run.trace));
  }
  if (runs.size() == 2 && runs[1].trace.final_dofs > 0) {
    const double ratio = static_cast<double>(runs[0].trace.final_dofs) /
                         static_cast<double>(runs[1].trace.final_dofs);
    summary["dof_ratio"] = ratio;
    std::printf("dof ratio fe/recovered: %.2f\n", ratio);
  }
  write_file(dir / "adapt_summary.json", summary.dump(1));

  PlotSpec plot;
  plot.title = bench.name + " " + opt.order + " adaptive convergence";
  plot.x_label = "degrees of freedom";
  plot.y_label = "relative error [%]";
  plot.hline = opt.target;
  std::string data = "series,ndof,rel_percent\n";
  const auto g17 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const NamedTrace& run : runs) {
    PlotSeries est{run.name + " stop, estimated", {}, {}};
    PlotSeries exact{run.name + " stop, exact", {}, {}};
    for (const AdaptiveStep& step : run.trace.steps) {
      const double dof = static_cast<double>(step.report.dofs);
      const double est_rel =
          run.criterion == StopCriterion::fe ? step.rel_fe : step.rel_recovered;
      est.x.push_back(dof);
      est.y.push_back(est_rel);
      data += est.label + "," + g17(dof) + "," + g17(est_rel) + "\n";
      const double exact_rel = rel_exact_percent(step.report, run.criterion);
      if (exact_rel >= 0.0) {
        exact.x.push_back(dof);
        exact.y.push_back(exact_rel);
        data += exact.label + "," + g17(dof) + "," + g17(exact_rel) + "\n";
      }
    }
    plot.series.push_back(std::move(est));
    if (!exact.x.empty()) plot.series.push_back(std::move(exact));
  }
  write_file(dir / "convergence.csv", data);
  write_file(dir / "convergence.svg", plot_to_svg(plot));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D linear elastic FE solver with recovered-solution error estimation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value option file (dotted keys reach subcommands)");

  Options opt;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--benchmark", opt.benchmark, "problem name: square4, pipe, lshape")
        ->capture_default_str();
    sub->add_option("--order", opt.order, "element order: q4 or q8")->capture_default_str();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    return sub;
  };

  CLI::App* solve = add_common(app.add_subcommand("solve", "solve one mesh and write the field"));
  solve->add_option("--divisions", opt.divisions, "elements per macro patch side")
      ->capture_default_str();

  CLI::App* estimate = add_common(app.add_subcommand(
      "estimate", "error estimators on a uniform refinement sequence"));
  estimate->add_option("--divisions", opt.divisions, "starting divisions, doubled per mesh")
      ->capture_default_str();
  estimate->add_option("--meshes", opt.meshes, "length of the mesh sequence")
      ->capture_default_str();

  CLI::App* adapt =
      add_common(app.add_subcommand("adapt", "adaptive refinement to a target error"));
  adapt->add_option("--target", opt.target, "relative error target, percent")
      ->capture_default_str();
  adapt->add_option("--stop-on", opt.stop_on, "stop criterion: fe, recovered, or both")
      ->capture_default_str();
  adapt->add_option("--divisions", opt.divisions, "initial mesh divisions")
      ->capture_default_str();
  adapt->add_option("--max-iterations", opt.max_iterations, "iteration cap")
      ->capture_default_str();

  CLI::App* verify = app.add_subcommand("verify", "consistency checks of the shipped solutions");
  verify->add_option("--benchmark", opt.benchmark, "problem name, or all")->default_val("all");
  verify->add_flag("--negative-control", opt.negative_control,
                   "corrupt a reference formula to prove the checks can fail")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(solve)) return cmd_solve(opt);
    if (app.got_subcommand(estimate)) return cmd_estimate(opt);
    if (app.got_subcommand(adapt)) return cmd_adapt(opt);
    if (app.got_subcommand(verify)) return cmd_verify(opt);
    std::fprintf(stderr, "error: no command given\n");
    return kExitUsage;
  } catch (const VerificationError& e) {
    std::fprintf(stderr, "verification failure: %s\n", e.what());
    return kExitVerification;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}

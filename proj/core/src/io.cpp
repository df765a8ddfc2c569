#include "recfem/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace recfem {

namespace {

using nlohmann::json;

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* tag_name(EdgeTag t) {
  switch (t) {
    case EdgeTag::neumann: return "neumann";
    case EdgeTag::dirichlet: return "dirichlet";
    case EdgeTag::symmetry_x: return "symmetry_x";
    case EdgeTag::symmetry_y: return "symmetry_y";
  }
  throw std::logic_error("tag_name: bad tag");
}

EdgeTag tag_from(const std::string& s) {
  if (s == "neumann") return EdgeTag::neumann;
  if (s == "dirichlet") return EdgeTag::dirichlet;
  if (s == "symmetry_x") return EdgeTag::symmetry_x;
  if (s == "symmetry_y") return EdgeTag::symmetry_y;
  throw std::invalid_argument("unknown edge tag '" + s + "'");
}

json domain_to_json(const DomainSpec& d) {
  json patches = json::array();
  for (const MacroPatch& p : d.patches) {
    json tags = json::array();
    json neighbors = json::array();
    for (int s = 0; s < 4; ++s) {
      tags.push_back(tag_name(p.side_tag[static_cast<std::size_t>(s)]));
      neighbors.push_back(p.neighbor[static_cast<std::size_t>(s)]);
    }
    patches.push_back({{"polar", p.polar},
                       {"origin", {p.origin[0], p.origin[1]}},
                       {"scale", p.scale},
                       {"r0", p.r0},
                       {"r1", p.r1},
                       {"t0", p.t0},
                       {"t1", p.t1},
                       {"side_tags", tags},
                       {"neighbors", neighbors}});
  }
  return {{"kind", d.kind_name()},
          {"inner", d.inner},
          {"outer", d.outer},
          {"patches", patches}};
}

DomainSpec domain_from_json(const json& j) {
  DomainSpec d;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "square2x2") d.kind = DomainSpec::Kind::square2x2;
  else if (kind == "annulus_quarter") d.kind = DomainSpec::Kind::annulus_quarter;
  else if (kind == "lshape") d.kind = DomainSpec::Kind::lshape;
  else throw std::invalid_argument("unknown domain kind '" + kind + "'");
  d.inner = j.at("inner").get<double>();
  d.outer = j.at("outer").get<double>();
  for (const json& pj : j.at("patches")) {
    MacroPatch p;
    p.polar = pj.at("polar").get<bool>();
    p.origin = Vec2(pj.at("origin").at(0).get<double>(), pj.at("origin").at(1).get<double>());
    p.scale = pj.at("scale").get<double>();
    p.r0 = pj.at("r0").get<double>();
    p.r1 = pj.at("r1").get<double>();
    p.t0 = pj.at("t0").get<double>();
    p.t1 = pj.at("t1").get<double>();
    for (int s = 0; s < 4; ++s) {
      p.side_tag[static_cast<std::size_t>(s)] =
          tag_from(pj.at("side_tags").at(static_cast<std::size_t>(s)).get<std::string>());
      p.neighbor[static_cast<std::size_t>(s)] =
          pj.at("neighbors").at(static_cast<std::size_t>(s)).get<int>();
    }
    d.patches.push_back(p);
  }
  return d;
}

json mesh_document(const QuadMesh& mesh) {
  json forest = json::array();
  for (const auto& [key, refined] : mesh.forest_cells())
    forest.push_back({std::to_string(key), refined});

  json nodes = json::array();
  for (const Vec2& x : mesh.nodes()) nodes.push_back({x[0], x[1]});

  const int npe = nodes_per_element(mesh.order());
  json elements = json::array();
  for (const Element& e : mesh.elements()) {
    json conn = json::array();
    for (int i = 0; i < npe; ++i) conn.push_back(e.nodes[static_cast<std::size_t>(i)]);
    elements.push_back(conn);
  }

  json edges = json::array();
  for (const BoundaryEdge& be : mesh.boundary_edges())
    edges.push_back({be.element, be.side, tag_name(be.tag)});

  json constraints = json::array();
  for (const NodeConstraint& c : mesh.constraints()) {
    json terms = json::array();
    for (const ConstraintTerm& t : c.terms) terms.push_back({t.master, t.weight});
    constraints.push_back({{"slave", c.slave}, {"terms", terms}});
  }

  return {{"schema", "recfem-mesh-1"},
          {"domain", domain_to_json(mesh.domain())},
          {"order", mesh.order() == ElementOrder::q4 ? "q4" : "q8"},
          {"divisions", mesh.divisions()},
          {"forest", forest},
          {"nodes", nodes},
          {"elements", elements},
          {"boundary_edges", edges},
          {"constraints", constraints}};
}

}  // namespace

std::string mesh_to_json(const QuadMesh& mesh) { return mesh_document(mesh).dump(1); }

QuadMesh mesh_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("mesh_from_json: not JSON: ") + e.what());
  }
  try {
    const std::string schema = j.at("schema").get<std::string>();
    // A field document embeds the full mesh document, so it loads here too.
    if (schema != "recfem-mesh-1" && schema != "recfem-field-1")
      throw std::invalid_argument("mesh_from_json: unknown schema");
    const DomainSpec domain = domain_from_json(j.at("domain"));
    const std::string order_s = j.at("order").get<std::string>();
    if (order_s != "q4" && order_s != "q8")
      throw std::invalid_argument("mesh_from_json: unknown order '" + order_s + "'");
    const ElementOrder order = order_s == "q4" ? ElementOrder::q4 : ElementOrder::q8;
    const int divisions = j.at("divisions").get<int>();

    std::vector<std::pair<std::uint64_t, bool>> forest;
    for (const json& cell : j.at("forest"))
      forest.emplace_back(std::stoull(cell.at(0).get<std::string>()), cell.at(1).get<bool>());

    QuadMesh mesh = restore_mesh(domain, order, divisions, forest);

    // the stored views must match the rebuilt mesh exactly
    const json& nodes = j.at("nodes");
    if (nodes.size() != static_cast<std::size_t>(mesh.node_count()))
      throw std::invalid_argument("mesh_from_json: node count mismatch");
    for (NodeId n = 0; n < mesh.node_count(); ++n) {
      const auto& stored = nodes.at(static_cast<std::size_t>(n));
      if (stored.at(0).get<double>() != mesh.node(n)[0] ||
          stored.at(1).get<double>() != mesh.node(n)[1])
        throw std::invalid_argument("mesh_from_json: node coordinates mismatch");
    }
    const json& elements = j.at("elements");
    if (elements.size() != static_cast<std::size_t>(mesh.element_count()))
      throw std::invalid_argument("mesh_from_json: element count mismatch");
    const int npe = nodes_per_element(order);
    for (ElemId e = 0; e < mesh.element_count(); ++e)
      for (int i = 0; i < npe; ++i)
        if (elements.at(static_cast<std::size_t>(e)).at(static_cast<std::size_t>(i)).get<int>() !=
            mesh.element(e).nodes[static_cast<std::size_t>(i)])
          throw std::invalid_argument("mesh_from_json: connectivity mismatch");
    if (j.at("boundary_edges").size() != mesh.boundary_edges().size())
      throw std::invalid_argument("mesh_from_json: boundary edge count mismatch");
    if (j.at("constraints").size() != mesh.constraints().size())
      throw std::invalid_argument("mesh_from_json: constraint count mismatch");
    return mesh;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("mesh_from_json: bad document: ") + e.what());
  }
}

std::string field_to_json(const FEField& field) {
  json doc = mesh_document(field.mesh());
  doc["schema"] = "recfem-field-1";

  json displacement = json::array();
  for (Eigen::Index i = 0; i < field.nodal_values().size(); ++i)
    displacement.push_back(field.nodal_values()[i]);
  doc["displacement"] = displacement;

  json stress = json::array();
  for (ElemId e = 0; e < field.mesh().element_count(); ++e) {
    const Vec3 s = field.stress(e, Vec2(0.0, 0.0));
    stress.push_back({s[0], s[1], s[2]});
  }
  doc["element_stress"] = stress;

  doc["material"] = {{"youngs", field.material().youngs},
                     {"poisson", field.material().poisson},
                     {"state", field.material().state == PlaneState::strain ? "strain" : "stress"}};
  return doc.dump(1);
}

std::string mesh_to_vtk(const QuadMesh& mesh, const std::vector<VtkPointVectors>& point_vectors,
                        const std::vector<VtkCellScalars>& cell_scalars) {
  const int npe = nodes_per_element(mesh.order());
  for (const VtkPointVectors& pv : point_vectors)
    if (pv.values.size() != 2 * mesh.node_count())
      throw std::invalid_argument("mesh_to_vtk: point vector '" + pv.name + "' has wrong length");
  for (const VtkCellScalars& cs : cell_scalars)
    if (cs.values.size() != static_cast<std::size_t>(mesh.element_count()))
      throw std::invalid_argument("mesh_to_vtk: cell scalar '" + cs.name + "' has wrong length");

  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\n";
  out << "recfem " << mesh.domain().kind_name() << " mesh\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";

  out << "POINTS " << mesh.node_count() << " double\n";
  for (const Vec2& x : mesh.nodes()) out << g17(x[0]) << ' ' << g17(x[1]) << " 0\n";

  out << "CELLS " << mesh.element_count() << ' ' << mesh.element_count() * (npe + 1) << '\n';
  for (const Element& e : mesh.elements()) {
    out << npe;
    for (int i = 0; i < npe; ++i) out << ' ' << e.nodes[static_cast<std::size_t>(i)];
    out << '\n';
  }

  const int cell_type = mesh.order() == ElementOrder::q4 ? 9 : 23;
  out << "CELL_TYPES " << mesh.element_count() << '\n';
  for (ElemId e = 0; e < mesh.element_count(); ++e) out << cell_type << '\n';

  if (!point_vectors.empty()) {
    out << "POINT_DATA " << mesh.node_count() << '\n';
    for (const VtkPointVectors& pv : point_vectors) {
      std::string name = pv.name;
      std::replace(name.begin(), name.end(), ' ', '_');
      out << "VECTORS " << name << " double\n";
      for (NodeId n = 0; n < mesh.node_count(); ++n)
        out << g17(pv.values[2 * n]) << ' ' << g17(pv.values[2 * n + 1]) << " 0\n";
    }
  }
  if (!cell_scalars.empty()) {
    out << "CELL_DATA " << mesh.element_count() << '\n';
    for (const VtkCellScalars& cs : cell_scalars) {
      std::string name = cs.name;
      std::replace(name.begin(), name.end(), ' ', '_');
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : cs.values) out << g17(v) << '\n';
    }
  }
  return out.str();
}

namespace {

double signed_root(double theta) {
  return theta < 0.0 ? -std::sqrt(-theta) : std::sqrt(theta);
}

constexpr const char* kReportColumns =
    "mesh_index,ndof,zz2,e1,e2,e3,e_ub,exact_e2,exact_estar2,theta_zz,theta_e3,"
    "theta_e1,theta_e2,theta_ub,theta_e1_root,theta_e2_root,theta_e3_root,theta_ub_root,"
    "e_es_l2,s_l2,energy_fe2,energy_rec2";

void append_report_row(std::ostringstream& out, const ErrorReport& r) {
  out << r.mesh_index << ',' << r.dofs << ',' << g17(r.zz2) << ',' << g17(r.e1) << ','
      << g17(r.e2) << ',' << g17(r.e3) << ',' << g17(r.e_ub) << ',' << g17(r.exact_fe2) << ','
      << g17(r.exact_rec2) << ',' << g17(r.theta_zz) << ',' << g17(r.theta_e3) << ','
      << g17(r.theta_e1) << ',' << g17(r.theta_e2) << ',' << g17(r.theta_ub) << ','
      << g17(signed_root(r.theta_e1)) << ',' << g17(signed_root(r.theta_e2)) << ','
      << g17(signed_root(r.theta_e3)) << ',' << g17(signed_root(r.theta_ub)) << ','
      << g17(r.e_es_l2) << ',' << g17(r.s_l2) << ',' << g17(r.energy_fe2) << ','
      << g17(r.energy_rec2);
}

}  // namespace

std::string reports_to_csv(const std::vector<ErrorReport>& reports,
                           const std::vector<double>& wall_ms) {
  if (!wall_ms.empty() && wall_ms.size() != reports.size())
    throw std::invalid_argument("reports_to_csv: wall clock column length mismatch");
  std::ostringstream out;
  out << kReportColumns << ",wall_ms\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    append_report_row(out, reports[i]);
    out << ',' << g17(wall_ms.empty() ? 0.0 : wall_ms[i]) << '\n';
  }
  return out.str();
}

std::string trace_to_csv(const AdaptiveTrace& trace) {
  std::ostringstream out;
  out << "iteration," << kReportColumns << ",rel_fe,rel_recovered,stopped,marked,wall_ms\n";
  for (const AdaptiveStep& s : trace.steps) {
    out << s.iteration << ',';
    append_report_row(out, s.report);
    out << ',' << g17(s.rel_fe) << ',' << g17(s.rel_recovered) << ',' << (s.stopped ? 1 : 0)
        << ',' << s.marked << ',' << g17(s.seconds * 1000.0) << '\n';
  }
  return out.str();
}

std::string report_to_json(const ErrorReport& r) {
  json j{{"mesh_index", r.mesh_index}, {"ndof", r.dofs},
         {"zz2", r.zz2},               {"e1", r.e1},
         {"e2", r.e2},                 {"e3", r.e3},
         {"e_ub", r.e_ub},             {"e_es_l2", r.e_es_l2},
         {"s_l2", r.s_l2},             {"energy_fe2", r.energy_fe2},
         {"energy_rec2", r.energy_rec2}};
  if (r.exact_fe2 >= 0.0) {
    j["exact_e2"] = r.exact_fe2;
    j["exact_estar2"] = r.exact_rec2;
    j["exact_energy2"] = r.exact_energy2;
    j["theta_zz"] = r.theta_zz;
    j["theta_e1"] = r.theta_e1;
    j["theta_e2"] = r.theta_e2;
    j["theta_e3"] = r.theta_e3;
    j["theta_ub"] = r.theta_ub;
  }
  j["zz2_per_element"] = r.zz2_k;
  j["e2_per_element"] = r.e2_k;
  j["e3_per_element"] = r.e3_k;
  if (!r.exact_fe2_k.empty()) {
    j["exact_e2_per_element"] = r.exact_fe2_k;
    j["exact_estar2_per_element"] = r.exact_rec2_k;
  }
  return j.dump(1);
}

std::string stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::target_met: return "target_met";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::level_cap: return "level_cap";
  }
  throw std::logic_error("stop_reason_name: bad reason");
}

std::string trace_summary_json(const AdaptiveTrace& trace) {
  json j{{"stop_reason", stop_reason_name(trace.stop_reason)},
         {"final_dofs", trace.final_dofs},
         {"iterations", trace.steps.size()},
         {"total_seconds", trace.total_seconds},
         {"anomalies", trace.anomalies}};
  return j.dump(1);
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

}  // namespace

std::string plot_to_svg(const PlotSpec& spec) {
  constexpr double kw = 640, kh = 440;
  constexpr double l = 72, r = 620, t = 34, b = 390;

  // collect plottable points and the data ranges
  struct Pt {
    double x, y;
  };
  std::vector<std::vector<Pt>> data;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  auto admit = [&](double v, bool log_axis) { return !log_axis || v > 0.0; };
  for (const PlotSeries& s : spec.series) {
    std::vector<Pt> pts;
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!admit(s.x[i], spec.log_x) || !admit(s.y[i], spec.log_y)) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts.push_back({s.x[i], s.y[i]});
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
    data.push_back(std::move(pts));
  }
  if (!any) {
    xmin = ymin = spec.log_x || spec.log_y ? 1.0 : 0.0;
    xmax = ymax = 10.0;
  }
  if (spec.hline && admit(*spec.hline, spec.log_y)) {
    ymin = std::min(ymin, *spec.hline);
    ymax = std::max(ymax, *spec.hline);
  }
  auto widen = [](double& lo, double& hi, bool log_axis) {
    if (log_axis) {
      lo *= 0.8;
      hi *= 1.25;
    } else {
      const double pad = (hi - lo) * 0.06 + (hi == lo ? 1.0 : 0.0);
      lo -= pad;
      hi += pad;
    }
  };
  widen(xmin, xmax, spec.log_x);
  widen(ymin, ymax, spec.log_y);

  auto xmap = [&](double v) {
    const double u = spec.log_x ? (std::log10(v) - std::log10(xmin)) /
                                      (std::log10(xmax) - std::log10(xmin))
                                : (v - xmin) / (xmax - xmin);
    return l + u * (r - l);
  };
  auto ymap = [&](double v) {
    const double u = spec.log_y ? (std::log10(v) - std::log10(ymin)) /
                                      (std::log10(ymax) - std::log10(ymin))
                                : (v - ymin) / (ymax - ymin);
    return b - u * (b - t);
  };

  auto ticks = [](double lo, double hi, bool log_axis) {
    std::vector<double> out;
    if (log_axis) {
      const int klo = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
      const int khi = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
      for (int k = klo; k <= khi; ++k) out.push_back(std::pow(10.0, k));
      if (out.size() < 2)
        for (int k = klo - 1; k <= khi + 1; ++k)
          for (double m : {2.0, 5.0}) {
            const double v = m * std::pow(10.0, k);
            if (v >= lo && v <= hi) out.push_back(v);
          }
      std::sort(out.begin(), out.end());
    } else {
      const double span = hi - lo;
      const double raw = span / 5.0;
      const double mag = std::pow(10.0, std::floor(std::log10(raw)));
      double step = mag;
      for (double m : {1.0, 2.0, 5.0, 10.0})
        if (mag * m >= raw) {
          step = mag * m;
          break;
        }
      for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step)
        out.push_back(v);
    }
    return out;
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kw << "\" height=\"" << kh
      << "\" viewBox=\"0 0 " << kw << ' ' << kh << "\">\n";
  svg << "<rect width=\"" << kw << "\" height=\"" << kh << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (l + r) / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\" "
         "font-family=\"sans-serif\">"
      << xml_escape(spec.title) << "</text>\n";

  for (double v : ticks(xmin, xmax, spec.log_x)) {
    const double px = xmap(v);
    svg << "<line x1=\"" << f2(px) << "\" y1=\"" << t << "\" x2=\"" << f2(px) << "\" y2=\"" << b
        << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << f2(px) << "\" y=\"" << b + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << tick_label(v) << "</text>\n";
  }
  for (double v : ticks(ymin, ymax, spec.log_y)) {
    const double py = ymap(v);
    svg << "<line x1=\"" << l << "\" y1=\"" << f2(py) << "\" x2=\"" << r << "\" y2=\"" << f2(py)
        << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << l - 6 << "\" y=\"" << f2(py + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << tick_label(v)
        << "</text>\n";
  }
  svg << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << r - l << "\" height=\"" << b - t
      << "\" fill=\"none\" stroke=\"#404040\"/>\n";
  svg << "<text x=\"" << (l + r) / 2 << "\" y=\"" << kh - 10
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
      << xml_escape(spec.x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (t + b) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 18 "
      << (t + b) / 2 << ")\">" << xml_escape(spec.y_label) << "</text>\n";

  if (spec.hline && admit(*spec.hline, spec.log_y)) {
    const double py = ymap(*spec.hline);
    svg << "<line x1=\"" << l << "\" y1=\"" << f2(py) << "\" x2=\"" << r << "\" y2=\"" << f2(py)
        << "\" stroke=\"#404040\" stroke-dasharray=\"6 4\"/>\n";
  }

  for (std::size_t si = 0; si < data.size(); ++si) {
    const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
    if (data[si].size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
      for (const Pt& p : data[si]) svg << f2(xmap(p.x)) << ',' << f2(ymap(p.y)) << ' ';
      svg << "\"/>\n";
    }
    for (const Pt& p : data[si])
      svg << "<circle cx=\"" << f2(xmap(p.x)) << "\" cy=\"" << f2(ymap(p.y))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
  }

  double ly = t + 16;
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
    svg << "<line x1=\"" << r - 150 << "\" y1=\"" << f2(ly - 4) << "\" x2=\"" << r - 126
        << "\" y2=\"" << f2(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
    svg << "<text x=\"" << r - 120 << "\" y=\"" << f2(ly)
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << xml_escape(spec.series[si].label)
        << "</text>\n";
    ly += 16;
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace recfem

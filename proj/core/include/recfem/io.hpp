#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "recfem/adaptivity.hpp"
#include "recfem/estimators.hpp"
#include "recfem/fem.hpp"
#include "recfem/mesh.hpp"

namespace recfem {

// Mesh serialization. The JSON carries the generative state (domain, order,
// divisions, refinement forest) plus the derived views (nodes, connectivity,
// boundary tags, hanging constraints). The reader rebuilds the mesh from the
// generative state and verifies it against the stored views bit for bit.
std::string mesh_to_json(const QuadMesh& mesh);
QuadMesh mesh_from_json(const std::string& text);

// Solved field export: the mesh document extended with interleaved nodal
// displacements and the centroid stress per element.
std::string field_to_json(const FEField& field);

// Legacy-VTK text export for external viewers. Point vectors hold 2N
// interleaved in-plane components; cell scalars hold one value per element.
struct VtkPointVectors {
  std::string name;
  Eigen::VectorXd values;
};
struct VtkCellScalars {
  std::string name;
  std::vector<double> values;
};
std::string mesh_to_vtk(const QuadMesh& mesh,
                        const std::vector<VtkPointVectors>& point_vectors = {},
                        const std::vector<VtkCellScalars>& cell_scalars = {});

// One CSV row per mesh. The leading columns are fixed:
//   mesh_index, ndof, zz2, e1, e2, e3, e_ub, exact_e2, exact_estar2,
//   theta_zz, theta_e3
// followed by the remaining effectivities in both conventions and the energy
// scalars; the wall-clock column is always last so repeated runs can be
// compared after dropping it. Absent exact data keeps its -1 sentinel.
std::string reports_to_csv(const std::vector<ErrorReport>& reports,
                           const std::vector<double>& wall_ms);

// Adaptive flavor: iteration first, then the report columns, then the two
// relative errors, the stop flag, and the marking count; wall clock last.
std::string trace_to_csv(const AdaptiveTrace& trace);

std::string report_to_json(const ErrorReport& report);
std::string trace_summary_json(const AdaptiveTrace& trace);
std::string stop_reason_name(StopReason reason);

// Hand-rolled SVG line plot; series points with nonpositive coordinates are
// dropped on log axes.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  bool log_y = true;
  std::vector<PlotSeries> series;
  std::optional<double> hline;  // horizontal reference line (e.g. target)
};
std::string plot_to_svg(const PlotSpec& spec);

}  // namespace recfem

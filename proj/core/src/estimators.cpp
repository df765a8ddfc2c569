#include "recfem/estimators.hpp"

#include "recfem/shape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace recfem {

namespace {

struct LocalBasis {
  ShapeEval shape;
  std::array<Vec2, 8> grad{};
  double det = 0.0;
  Vec2 x{0.0, 0.0};
};

LocalBasis local_basis(const QuadMesh& mesh, ElemId e, const Vec2& xi) {
  LocalBasis out;
  out.shape = shape_values(mesh.order(), xi);
  const Element& el = mesh.element(e);
  Mat2 j = Mat2::Zero();
  for (int i = 0; i < out.shape.count; ++i) {
    const Vec2& xn = mesh.node(el.nodes[static_cast<std::size_t>(i)]);
    out.x += out.shape.n[static_cast<std::size_t>(i)] * xn;
    j += xn * out.shape.dn[static_cast<std::size_t>(i)].transpose();
  }
  out.det = j.determinant();
  if (!(out.det > 0.0)) throw NumericalError("estimators: element jacobian not positive");
  const Mat2 jinv_t = j.inverse().transpose();
  for (int i = 0; i < out.shape.count; ++i)
    out.grad[static_cast<std::size_t>(i)] = jinv_t * out.shape.dn[static_cast<std::size_t>(i)];
  return out;
}

void check_same_mesh(const FEField& field, const RecoveredField& rec) {
  if (&field.mesh() != &rec.mesh())
    throw std::invalid_argument("estimators: FE field and recovered field use different meshes");
}

// Work of the equilibrium defects against e_es, split per element into the
// signed integrals and the integrals of the absolute integrand, plus the L2
// factors of the product bound. One pass serves every indicator.
struct DefectData {
  std::vector<double> dom_signed, dom_abs, bnd_signed, bnd_abs;
  double e_l2sq = 0.0;
  double s_l2sq = 0.0;
};

DefectData defect_data(const RecoveredField& rec, const FEField& field, const LoadCase& load) {
  check_same_mesh(field, rec);
  const QuadMesh& mesh = rec.mesh();
  const std::size_t nel = static_cast<std::size_t>(mesh.element_count());
  DefectData out;
  out.dom_signed.assign(nel, 0.0);
  out.dom_abs.assign(nel, 0.0);
  out.bnd_signed.assign(nel, 0.0);
  out.bnd_abs.assign(nel, 0.0);

  const auto rule = tensor_rule(kFieldRule);
  KahanSum el2, sl2;
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    KahanSum acc_signed, acc_abs;
    for (const QuadPoint2D& q : rule) {
      const auto mp = mesh.map_point(e, q.xi);
      const Vec2 s = internal_default_s(rec, e, q.xi, load);
      const Vec2 ees = conjoint_displacement(rec, e, q.xi) - field.value(e, q.xi);
      const double w = q.weight * mp.det;
      const double work = s.dot(ees);
      acc_signed.add(w * work);
      acc_abs.add(w * std::abs(work));
      el2.add(w * ees.squaredNorm());
      sl2.add(w * s.squaredNorm());
    }
    out.dom_signed[static_cast<std::size_t>(e)] = acc_signed.value();
    out.dom_abs[static_cast<std::size_t>(e)] = acc_abs.value();
  }

  const GaussRule1D& g = gauss_rule(edge_rule(mesh.order()));
  for (const BoundaryEdge& be : mesh.boundary_edges()) {
    if (be.tag == EdgeTag::dirichlet) continue;  // no traction defect there
    const std::size_t k = static_cast<std::size_t>(be.element);
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double sp = g.points[q];
      const auto ep = mesh.map_edge_point(be.element, be.side, sp);
      const Vec2 r = boundary_default_r(rec, be, sp, load);
      const Vec2 xi = edge_point_xi(be.side, sp);
      const Vec2 ees = conjoint_displacement(rec, be.element, xi) - field.value(be.element, xi);
      const double w = g.weights[q] * ep.jacobian;
      const double work = r.dot(ees);
      out.bnd_signed[k] += w * work;
      out.bnd_abs[k] += w * std::abs(work);
    }
  }
  out.e_l2sq = el2.value();
  out.s_l2sq = sl2.value();
  return out;
}

double e1_from(const DefectData& d) {
  KahanSum acc;
  for (double v : d.dom_signed) acc.add(v);
  for (double v : d.bnd_signed) acc.add(v);
  return -acc.value();
}

ScalarMap e2_from(const DefectData& d) {
  ScalarMap out;
  out.per_element.resize(d.dom_signed.size());
  KahanSum acc;
  for (std::size_t k = 0; k < d.dom_signed.size(); ++k) {
    out.per_element[k] = std::abs(d.dom_signed[k]) + std::abs(d.bnd_signed[k]);
    acc.add(out.per_element[k]);
  }
  out.global = acc.value();
  return out;
}

ScalarMap e3_from(const DefectData& d) {
  ScalarMap out;
  out.per_element.resize(d.dom_abs.size());
  KahanSum acc;
  for (std::size_t k = 0; k < d.dom_abs.size(); ++k) {
    out.per_element[k] = d.dom_abs[k] + d.bnd_abs[k];
    acc.add(out.per_element[k]);
  }
  out.global = acc.value();
  return out;
}

UpperBound ub_from(const DefectData& d) {
  UpperBound out;
  out.e_es_l2 = std::sqrt(std::max(0.0, d.e_l2sq));
  out.s_l2 = std::sqrt(std::max(0.0, d.s_l2sq));
  out.value = out.e_es_l2 * out.s_l2;
  return out;
}

// Index of the element corner sitting on the singular point, or -1.
int singular_corner(const QuadMesh& mesh, ElemId e, const Vec2& xs, double tol) {
  const Element& el = mesh.element(e);
  for (int c = 0; c < 4; ++c)
    if ((mesh.node(el.nodes[static_cast<std::size_t>(c)]) - xs).norm() <= tol) return c;
  return -1;
}

// Integrates f (an integrand in parent coordinates, jacobian included) over
// the parent square by peeling dyadic rings toward the given corner. The
// rings of an r^alpha integrand decay geometrically, so the loop stops once
// a ring stops mattering; the innermost box is added in one shot.
double integrate_toward_corner(const std::function<double(const Vec2&)>& f, int corner,
                               int rule_n) {
  const Vec2 cx = corner_xi(corner);
  const GaussRule1D& g = gauss_rule(rule_n);
  const auto cell = [&](double a1, double b1, double a2, double b2) {
    KahanSum sum;
    for (std::size_t i = 0; i < g.points.size(); ++i)
      for (std::size_t j = 0; j < g.points.size(); ++j) {
        const double u1 = a1 + 0.5 * (g.points[i] + 1.0) * (b1 - a1);
        const double u2 = a2 + 0.5 * (g.points[j] + 1.0) * (b2 - a2);
        const double w = 0.25 * g.weights[i] * g.weights[j] * (b1 - a1) * (b2 - a2);
        sum.add(w * f(Vec2(cx[0] * (1.0 - u1), cx[1] * (1.0 - u2))));
      }
    return sum.value();
  };

  KahanSum total;
  double b = 2.0;
  for (int lev = 0; lev < 48; ++lev) {
    const double h = 0.5 * b;
    const double ring = cell(h, b, 0.0, b) + cell(0.0, h, h, b);
    total.add(ring);
    b = h;
    if (lev >= 3 && std::abs(ring) <= 1e-7 * std::abs(total.value())) break;
  }
  total.add(cell(0.0, b, 0.0, b));
  return total.value();
}

}  // namespace

Vec2 estimated_error(const FEField& field, const RecoveredField& rec, ElemId e, const Vec2& xi) {
  return conjoint_displacement(rec, e, xi) - field.value(e, xi);
}

double estimated_error_l2(const FEField& field, const RecoveredField& rec) {
  check_same_mesh(field, rec);
  const QuadMesh& mesh = rec.mesh();
  const auto rule = tensor_rule(kFieldRule);
  KahanSum acc;
  for (ElemId e = 0; e < mesh.element_count(); ++e)
    for (const QuadPoint2D& q : rule) {
      const auto mp = mesh.map_point(e, q.xi);
      acc.add(q.weight * mp.det * estimated_error(field, rec, e, q.xi).squaredNorm());
    }
  return std::sqrt(std::max(0.0, acc.value()));
}

ScalarMap zz_estimate(const FEField& field, const RecoveredField& rec) {
  check_same_mesh(field, rec);
  const QuadMesh& mesh = rec.mesh();
  const Mat3 s = compliance_matrix(field.material());
  const auto rule = tensor_rule(kFieldRule);
  ScalarMap out;
  out.per_element.resize(static_cast<std::size_t>(mesh.element_count()));
  KahanSum global;
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    KahanSum acc;
    for (const QuadPoint2D& q : rule) {
      const auto mp = mesh.map_point(e, q.xi);
      const Vec3 d = conjoint_stress_split(rec, e, q.xi).continuous - field.stress(e, q.xi);
      acc.add(q.weight * mp.det * d.dot(s * d));
    }
    out.per_element[static_cast<std::size_t>(e)] = acc.value();
    global.add(acc.value());
  }
  out.global = global.value();
  return out;
}

double indicator_e1(const RecoveredField& rec, const FEField& field, const LoadCase& load) {
  return e1_from(defect_data(rec, field, load));
}

ScalarMap indicator_e2(const RecoveredField& rec, const FEField& field, const LoadCase& load) {
  return e2_from(defect_data(rec, field, load));
}

ScalarMap indicator_e3(const RecoveredField& rec, const FEField& field, const LoadCase& load) {
  return e3_from(defect_data(rec, field, load));
}

UpperBound upper_bound(const RecoveredField& rec, const FEField& field, const LoadCase& load) {
  return ub_from(defect_data(rec, field, load));
}

ScalarMap exact_stress_mismatch(const Benchmark& bench, const QuadMesh& mesh,
                                const Material& material, const StressEval& approx, int rule) {
  const Mat3 s = compliance_matrix(material);
  const double tol = 1e-9 * mesh.characteristic_size();
  const auto tensor = tensor_rule(rule);
  ScalarMap out;
  out.per_element.resize(static_cast<std::size_t>(mesh.element_count()));
  KahanSum global;
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    const auto integrand = [&](const Vec2& xi) {
      const auto mp = mesh.map_point(e, xi);
      const Vec3 d = bench.exact.stress(mp.x) - approx(e, xi, mp.x);
      return mp.det * d.dot(s * d);
    };
    double val = 0.0;
    const int corner =
        bench.has_singularity ? singular_corner(mesh, e, bench.singular_point, tol) : -1;
    if (corner >= 0) {
      val = integrate_toward_corner(integrand, corner, rule);
    } else {
      KahanSum acc;
      for (const QuadPoint2D& q : tensor) acc.add(q.weight * integrand(q.xi));
      val = acc.value();
    }
    out.per_element[static_cast<std::size_t>(e)] = val;
    global.add(val);
  }
  out.global = global.value();
  return out;
}

ExactErrors exact_errors(const FEField& field, const RecoveredField& rec, const Benchmark& bench) {
  check_same_mesh(field, rec);
  const QuadMesh& mesh = rec.mesh();
  const Material& mat = field.material();
  ExactErrors out;

  const ScalarMap fe = exact_stress_mismatch(bench, mesh, mat, stress_eval_of(field));
  const StressEval rec_eval = [&rec](ElemId e, const Vec2& xi, const Vec2&) {
    return conjoint_stress_split(rec, e, xi).continuous;
  };
  const ScalarMap re = exact_stress_mismatch(bench, mesh, mat, rec_eval);
  const StressEval zero = [](ElemId, const Vec2&, const Vec2&) { return Vec3(0.0, 0.0, 0.0); };
  const ScalarMap en = exact_stress_mismatch(bench, mesh, mat, zero, 10);

  out.fe2 = fe.global;
  out.rec2 = re.global;
  out.energy2 = en.global;
  out.fe2_per_element = fe.per_element;
  out.rec2_per_element = re.per_element;
  return out;
}

BoundCheck error_bound_check(const FEField& field, const RecoveredField& rec,
                             const LoadCase& load, const Benchmark& bench) {
  check_same_mesh(field, rec);
  const QuadMesh& mesh = rec.mesh();
  const Material& mat = field.material();
  const Mat3 compliance = compliance_matrix(mat);
  // The defect-work terms pair discrete polynomials with the analytic error,
  // so a 10x10 volume rule and an 8-point edge rule keep every piecewise
  // polynomial integrand exact and the rest comfortably converged.
  const int volume_rule = 10;
  const auto rule = tensor_rule(volume_rule);

  BoundCheck out;
  out.lhs = exact_stress_mismatch(bench, mesh, mat, stress_eval_of(field), volume_rule).global;

  KahanSum diff_energy, volume_work;
  for (ElemId e = 0; e < mesh.element_count(); ++e)
    for (const QuadPoint2D& q : rule) {
      const auto mp = mesh.map_point(e, q.xi);
      const double w = q.weight * mp.det;
      const Vec3 d = conjoint_stress_split(rec, e, q.xi).continuous - field.stress(e, q.xi);
      diff_energy.add(w * d.dot(compliance * d));
      const Vec2 err = bench.exact.displacement(mp.x) - field.value(e, q.xi);
      volume_work.add(w * err.dot(internal_default_s(rec, e, q.xi, load)));
    }

  const GaussRule1D& g = gauss_rule(8);
  KahanSum edge_work;
  for (const BoundaryEdge& be : mesh.boundary_edges()) {
    if (be.tag == EdgeTag::dirichlet) continue;
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double sp = g.points[q];
      const auto ep = mesh.map_edge_point(be.element, be.side, sp);
      const Vec2 xi = edge_point_xi(be.side, sp);
      const Vec2 err = bench.exact.displacement(ep.x) - field.value(be.element, xi);
      edge_work.add(g.weights[q] * ep.jacobian * err.dot(boundary_default_r(rec, be, sp, load)));
    }
  }

  out.rhs = diff_energy.value() - 2.0 * volume_work.value() - 2.0 * edge_work.value();
  out.satisfied = out.rhs - out.lhs >= -1e-10 * (std::abs(out.rhs) + std::abs(out.lhs));
  return out;
}

ResidualCheck weighted_residual(const FEField& field, const RecoveredField& rec,
                                const LoadCase& load) {
  check_same_mesh(field, rec);
  const QuadMesh& mesh = rec.mesh();
  const int nd = 2 * mesh.node_count();
  Eigen::VectorXd g1 = Eigen::VectorXd::Zero(nd);
  Eigen::VectorXd vs = Eigen::VectorXd::Zero(nd);
  Eigen::VectorXd vr = Eigen::VectorXd::Zero(nd);

  const auto rule = tensor_rule(kFieldRule);
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    const Element& el = mesh.element(e);
    for (const QuadPoint2D& q : rule) {
      const LocalBasis basis = local_basis(mesh, e, q.xi);
      const Vec3 sc = conjoint_stress_split(rec, e, q.xi).continuous;
      const Vec2 s = internal_default_s(rec, e, q.xi, load);
      const double w = q.weight * basis.det;
      for (int i = 0; i < basis.shape.count; ++i) {
        const NodeId n = el.nodes[static_cast<std::size_t>(i)];
        const Vec2& gr = basis.grad[static_cast<std::size_t>(i)];
        const double nv = basis.shape.n[static_cast<std::size_t>(i)];
        g1[2 * n] += w * (gr[0] * sc[0] + gr[1] * sc[2]);
        g1[2 * n + 1] += w * (gr[1] * sc[1] + gr[0] * sc[2]);
        vs[2 * n] += w * nv * s[0];
        vs[2 * n + 1] += w * nv * s[1];
      }
    }
  }

  const GaussRule1D& g = gauss_rule(edge_rule(mesh.order()));
  for (const BoundaryEdge& be : mesh.boundary_edges()) {
    if (be.tag == EdgeTag::dirichlet) continue;
    const Element& el = mesh.element(be.element);
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double sp = g.points[q];
      const auto ep = mesh.map_edge_point(be.element, be.side, sp);
      const Vec2 r = boundary_default_r(rec, be, sp, load);
      const ShapeEval sv = shape_values(mesh.order(), edge_point_xi(be.side, sp));
      const double w = g.weights[q] * ep.jacobian;
      for (int i = 0; i < sv.count; ++i) {
        const NodeId n = el.nodes[static_cast<std::size_t>(i)];
        vr[2 * n] += w * sv.n[static_cast<std::size_t>(i)] * r[0];
        vr[2 * n + 1] += w * sv.n[static_cast<std::size_t>(i)] * r[1];
      }
    }
  }

  const Eigen::VectorXd l = consistent_load_vector(mesh, load);
  const ConstraintMap cm = build_constraint_map(mesh, load);
  const Eigen::VectorXd tau = g1 - vs - l - vr;

  ResidualCheck out;
  out.residual = cm.expansion.transpose() * tau;
  out.load_scale = (cm.expansion.transpose() * l).cwiseAbs();
  out.worst = 0.0;
  for (int j = 0; j < out.residual.size(); ++j)
    out.worst = std::max(out.worst, std::abs(out.residual[j]) / (1.0 + out.load_scale[j]));
  return out;
}

ErrorReport assemble_report(const FEField& field, const RecoveredField& rec, const LoadCase& load,
                            const Benchmark* reference, int mesh_index) {
  check_same_mesh(field, rec);
  ErrorReport rep;
  rep.mesh_index = mesh_index;
  rep.dofs = build_constraint_map(rec.mesh(), load).free_count;

  const ScalarMap zz = zz_estimate(field, rec);
  rep.zz2 = zz.global;
  rep.zz2_k = zz.per_element;

  const DefectData d = defect_data(rec, field, load);
  rep.e1 = e1_from(d);
  const ScalarMap e2 = e2_from(d);
  const ScalarMap e3 = e3_from(d);
  rep.e2 = e2.global;
  rep.e3 = e3.global;
  rep.e2_k = e2.per_element;
  rep.e3_k = e3.per_element;
  const UpperBound ub = ub_from(d);
  rep.e_ub = ub.value;
  rep.e_es_l2 = ub.e_es_l2;
  rep.s_l2 = ub.s_l2;

  const StressEval sh = stress_eval_of(field);
  const StressEval sc = [&rec](ElemId e, const Vec2& xi, const Vec2&) {
    return conjoint_stress_split(rec, e, xi).continuous;
  };
  rep.energy_fe2 = energy_inner_product(rec.mesh(), rec.material(), sh, sh);
  rep.energy_rec2 = energy_inner_product(rec.mesh(), rec.material(), sc, sc);

  if (reference != nullptr) {
    const ExactErrors ex = exact_errors(field, rec, *reference);
    rep.exact_fe2 = ex.fe2;
    rep.exact_rec2 = ex.rec2;
    rep.exact_energy2 = ex.energy2;
    rep.exact_fe2_k = ex.fe2_per_element;
    rep.exact_rec2_k = ex.rec2_per_element;
    if (ex.fe2 > 0.0) rep.theta_zz = std::sqrt(rep.zz2 / ex.fe2);
    if (ex.rec2 > 0.0) {
      rep.theta_e1 = rep.e1 / ex.rec2;
      rep.theta_e2 = rep.e2 / ex.rec2;
      rep.theta_e3 = rep.e3 / ex.rec2;
      rep.theta_ub = rep.e_ub / ex.rec2;
    }
  }
  return rep;
}

double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("spearman_rank_correlation: size mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;

  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size(), 0.0);
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };

  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double mean = 0.5 * (static_cast<double>(n) + 1.0);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double da = ra[k] - mean;
    const double db = rb[k] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace recfem

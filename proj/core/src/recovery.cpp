#include "recfem/recovery.hpp"

#include "recfem/shape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recfem {

namespace {

struct Monomial {
  int px = 0, py = 0;
};

// ascending total degree, x exponent descending within a degree:
// 1; x, y; x^2, xy, y^2; x^3, x^2 y, x y^2, y^3
const std::vector<Monomial>& monomial_table() {
  static const std::vector<Monomial> table = [] {
    std::vector<Monomial> v;
    for (int d = 0; d <= 3; ++d)
      for (int px = d; px >= 0; --px) v.push_back({px, d - px});
    return v;
  }();
  return table;
}

double ipow(double b, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Monomial basis data at one physical point, derivatives taken in physical
// coordinates (the normalization is an affine rescaling).
struct BasisEval {
  Eigen::RowVectorXd val, dx, dy, dxx, dxy, dyy;
};

BasisEval eval_basis(int count, const Vec2& origin, double scale, const Vec2& x, bool second) {
  const double xn = (x[0] - origin[0]) / scale;
  const double yn = (x[1] - origin[1]) / scale;
  const double s1 = 1.0 / scale, s2 = s1 * s1;
  BasisEval b;
  b.val.resize(count);
  b.dx.resize(count);
  b.dy.resize(count);
  if (second) {
    b.dxx.resize(count);
    b.dxy.resize(count);
    b.dyy.resize(count);
  }
  const auto& ms = monomial_table();
  for (int i = 0; i < count; ++i) {
    const int px = ms[static_cast<std::size_t>(i)].px, py = ms[static_cast<std::size_t>(i)].py;
    b.val[i] = ipow(xn, px) * ipow(yn, py);
    b.dx[i] = px > 0 ? s1 * px * ipow(xn, px - 1) * ipow(yn, py) : 0.0;
    b.dy[i] = py > 0 ? s1 * py * ipow(xn, px) * ipow(yn, py - 1) : 0.0;
    if (second) {
      b.dxx[i] = px > 1 ? s2 * px * (px - 1) * ipow(xn, px - 2) * ipow(yn, py) : 0.0;
      b.dxy[i] = (px > 0 && py > 0) ? s2 * px * py * ipow(xn, px - 1) * ipow(yn, py - 1) : 0.0;
      b.dyy[i] = py > 1 ? s2 * py * (py - 1) * ipow(xn, px) * ipow(yn, py - 2) : 0.0;
    }
  }
  return b;
}

// Rows mapping stacked coefficients (ax | ay) to the Voigt stress at a point.
struct StressRows {
  std::array<Eigen::RowVectorXd, 3> x, y;  // per Voigt component
};

StressRows stress_rows(const BasisEval& b, const Mat3& d) {
  StressRows r;
  for (int k = 0; k < 3; ++k) {
    r.x[static_cast<std::size_t>(k)] = d(k, 0) * b.dx + d(k, 2) * b.dy;
    r.y[static_cast<std::size_t>(k)] = d(k, 1) * b.dy + d(k, 2) * b.dx;
  }
  return r;
}

// Rows mapping stacked coefficients to div(sigma) at a point.
struct DivRows {
  Eigen::RowVectorXd xx, xy;  // x component of the divergence
  Eigen::RowVectorXd yx, yy;  // y component
};

DivRows divergence_rows(const BasisEval& b, const Mat3& d) {
  DivRows r;
  // d/dx sigma_xx + d/dy sigma_xy
  r.xx = d(0, 0) * b.dxx + d(0, 2) * b.dxy + d(2, 0) * b.dxy + d(2, 2) * b.dyy;
  r.xy = d(0, 1) * b.dxy + d(0, 2) * b.dxx + d(2, 1) * b.dyy + d(2, 2) * b.dxy;
  // d/dx sigma_xy + d/dy sigma_yy
  r.yx = d(2, 0) * b.dxx + d(2, 2) * b.dxy + d(1, 0) * b.dxy + d(1, 2) * b.dyy;
  r.yy = d(2, 1) * b.dxy + d(2, 2) * b.dxx + d(1, 1) * b.dyy + d(1, 2) * b.dxy;
  return r;
}

struct ConstraintRow {
  Eigen::RowVectorXd a;
  double rhs = 0.0;
};

// Straight boundary runs of one patch, merged across collinear edges with the
// same tag so a traction fit spans the whole visible segment.
struct BoundarySegment {
  EdgeTag tag = EdgeTag::neumann;
  Vec2 normal{0.0, 0.0};
  Vec2 dir{0.0, 0.0};
  double offset = 0.0;  // normal . x for points on the line
  double t0 = 1e300, t1 = -1e300;
  std::vector<std::pair<ElemId, int>> edges;
};

Vec2 chord(const QuadMesh& mesh, ElemId e, int side, double s) {
  const Element& el = mesh.element(e);
  const Vec2& a = mesh.node(el.nodes[static_cast<std::size_t>(edge_corners(side)[0])]);
  const Vec2& b = mesh.node(el.nodes[static_cast<std::size_t>(edge_corners(side)[1])]);
  return 0.5 * (1.0 - s) * a + 0.5 * (1.0 + s) * b;
}

}  // namespace

int monomial_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

PatchPolynomial fit_patch(const QuadMesh& mesh, const VertexPatch& patch,
                          const DisplacementStressField& field, const LoadCase& load,
                          const Material& material) {
  const int p = interpolation_degree(mesh.order());
  const int degree = p + 1;
  const int m = monomial_count(degree);
  const Mat3 d = elasticity_matrix(material);

  PatchPolynomial out;
  out.vertex = patch.center;
  out.origin = patch.origin;
  out.scale = patch.scale;
  out.degree = degree;

  // continuous least squares data over the patch
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd hx = Eigen::VectorXd::Zero(m), hy = Eigen::VectorXd::Zero(m);
  const auto volume_rule = tensor_rule(kFieldRule);
  for (ElemId e : patch.elements)
    for (const QuadPoint2D& q : volume_rule) {
      const auto mp = mesh.map_point(e, q.xi);
      const double w = q.weight * mp.det;
      const BasisEval b = eval_basis(m, patch.origin, patch.scale, mp.x, false);
      gram.noalias() += w * b.val.transpose() * b.val;
      const Vec2 u = field.value(e, q.xi);
      hx.noalias() += (w * u[0]) * b.val.transpose();
      hy.noalias() += (w * u[1]) * b.val.transpose();
    }

  // guard tiny patches: drop highest-degree monomials until the Gram is solid
  int active = m;
  while (active > 3) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram.topLeftCorner(active, active));
    qr.setThreshold(1e-10);
    if (qr.rank() == active) break;
    --active;
  }
  out.active_monomials = active;
  const int na = 2 * active;

  // ---- constraint rows ----
  std::vector<ConstraintRow> rows;

  // internal equilibrium: moments of -div(sigma(u*)) - b against the degree
  // p-1 monomials over the patch, same quadrature on both sides
  {
    const int mb = monomial_count(p - 1);
    std::vector<ConstraintRow> eq(static_cast<std::size_t>(2 * mb));
    for (ConstraintRow& r : eq) {
      r.a = Eigen::RowVectorXd::Zero(na);
      r.rhs = 0.0;
    }
    for (ElemId e : patch.elements)
      for (const QuadPoint2D& q : volume_rule) {
        const auto mp = mesh.map_point(e, q.xi);
        const double w = q.weight * mp.det;
        const BasisEval b = eval_basis(active, patch.origin, patch.scale, mp.x, true);
        const BasisEval bt = eval_basis(mb, patch.origin, patch.scale, mp.x, false);
        const DivRows dr = divergence_rows(b, d);
        const Vec2 bv = load.body ? load.body(mp.x) : Vec2(0.0, 0.0);
        for (int j = 0; j < mb; ++j) {
          const double wq = w * bt.val[j];
          ConstraintRow& rx = eq[static_cast<std::size_t>(2 * j)];
          ConstraintRow& ry = eq[static_cast<std::size_t>(2 * j + 1)];
          rx.a.head(active) -= wq * dr.xx;
          rx.a.tail(active) -= wq * dr.xy;
          rx.rhs += wq * bv[0];
          ry.a.head(active) -= wq * dr.yx;
          ry.a.tail(active) -= wq * dr.yy;
          ry.rhs += wq * bv[1];
        }
      }
    for (ConstraintRow& r : eq) rows.push_back(std::move(r));
  }

  // boundary edges anchored at the patch vertex; edges of member elements that
  // run along the boundary far from the vertex would over-constrain the fit
  // where the blend never uses it
  struct TractionEdge {
    ElemId element;
    int side;
    Vec2 a, b;       // chord endpoints, a at local coordinate -1
    Vec2 far;        // endpoint away from the patch vertex
    Vec2 n_center;   // outward normal where the edge meets the patch vertex
  };
  std::vector<BoundarySegment> segments;
  std::vector<BoundaryEdge> curved;
  std::vector<TractionEdge> traction_edges;
  for (const BoundaryEdge& be : mesh.boundary_edges()) {
    if (std::find(patch.elements.begin(), patch.elements.end(), be.element) ==
        patch.elements.end())
      continue;
    const std::array<int, 2> ec = edge_corners(be.side);
    const Element& el = mesh.element(be.element);
    if (el.nodes[static_cast<std::size_t>(ec[0])] != patch.center &&
        el.nodes[static_cast<std::size_t>(ec[1])] != patch.center)
      continue;
    if (be.tag == EdgeTag::neumann) {
      TractionEdge te;
      te.element = be.element;
      te.side = be.side;
      te.a = chord(mesh, be.element, be.side, -1.0);
      te.b = chord(mesh, be.element, be.side, 1.0);
      const bool center_first = el.nodes[static_cast<std::size_t>(ec[0])] == patch.center;
      te.far = center_first ? te.b : te.a;
      te.n_center =
          mesh.map_edge_point(be.element, be.side, center_first ? -1.0 : 1.0).normal;
      traction_edges.push_back(te);
      continue;
    }
    if (!mesh.edge_is_straight(be.element, be.side)) {
      curved.push_back(be);
      continue;
    }
    const Vec2 a = chord(mesh, be.element, be.side, -1.0);
    const Vec2 b = chord(mesh, be.element, be.side, 1.0);
    Vec2 dir = (b - a).normalized();
    if (dir[0] < -1e-12 || (std::abs(dir[0]) <= 1e-12 && dir[1] < 0.0)) dir = -dir;
    const Vec2 n = mesh.map_edge_point(be.element, be.side, 0.0).normal;
    const double offset = n.dot(a);
    const double tol = 1e-9 * mesh.characteristic_size();
    BoundarySegment* seg = nullptr;
    for (BoundarySegment& s : segments)
      if (s.tag == be.tag && (s.normal - n).norm() < 1e-9 && std::abs(s.offset - offset) < tol) {
        seg = &s;
        break;
      }
    if (!seg) {
      segments.push_back({});
      seg = &segments.back();
      seg->tag = be.tag;
      seg->normal = n;
      seg->dir = dir;
      seg->offset = offset;
    }
    seg->t0 = std::min({seg->t0, seg->dir.dot(a), seg->dir.dot(b)});
    seg->t1 = std::max({seg->t1, seg->dir.dot(a), seg->dir.dot(b)});
    seg->edges.push_back({be.element, be.side});
  }

  // the two traction edges flanking the vertex act as one segment when the
  // boundary continues smoothly through it (collinear sides, or successive
  // chords of one arc); a genuine corner keeps one segment per side.  hard
  // pointwise rows here would outnumber the free coefficients at a vertex
  // inside a curved run and let the constraints crowd out the fit.
  std::vector<std::vector<const TractionEdge*>> traction_runs;
  if (traction_edges.size() == 2 &&
      traction_edges[0].n_center.dot(traction_edges[1].n_center) > 0.4)
    traction_runs.push_back({&traction_edges[0], &traction_edges[1]});
  else
    for (const TractionEdge& te : traction_edges) traction_runs.push_back({&te});

  const GaussRule1D& edge_gauss = gauss_rule(edge_rule(mesh.order()));

  for (const std::vector<const TractionEdge*>& run : traction_runs) {
    // traction moments against monomials of the chord parameter, degree <= p;
    // the normal stays the pointwise outward normal, so curved runs match the
    // rotating traction in the weak sense rather than point by point
    Vec2 dir = run.size() == 2 ? Vec2(run[1]->far - run[0]->far)
                               : Vec2(run[0]->b - run[0]->a);
    dir.normalize();
    if (dir[0] < -1e-12 || (std::abs(dir[0]) <= 1e-12 && dir[1] < 0.0)) dir = -dir;
    double t0 = std::numeric_limits<double>::infinity();
    double t1 = -t0;
    for (const TractionEdge* te : run) {
      t0 = std::min({t0, dir.dot(te->a), dir.dot(te->b)});
      t1 = std::max({t1, dir.dot(te->a), dir.dot(te->b)});
    }
    const double span = t1 - t0;
    std::vector<ConstraintRow> eq(static_cast<std::size_t>(2 * (p + 1)));
    for (ConstraintRow& r : eq) {
      r.a = Eigen::RowVectorXd::Zero(na);
      r.rhs = 0.0;
    }
    for (const TractionEdge* te : run)
      for (std::size_t g = 0; g < edge_gauss.points.size(); ++g) {
        const auto ep = mesh.map_edge_point(te->element, te->side, edge_gauss.points[g]);
        const double w = edge_gauss.weights[g] * ep.jacobian;
        const BasisEval b = eval_basis(active, patch.origin, patch.scale, ep.x, false);
        const StressRows sr = stress_rows(b, d);
        const Vec2 t = load.traction ? load.traction(ep.x, ep.normal, EdgeTag::neumann)
                                     : Vec2(0.0, 0.0);
        const double s = 2.0 * (dir.dot(ep.x) - t0) / span - 1.0;
        double qj = 1.0;  // s^j, the edge-parameter moment weight
        for (int j = 0; j <= p; ++j, qj *= s) {
          const double wq = w * qj;
          ConstraintRow& rx = eq[static_cast<std::size_t>(2 * j)];
          ConstraintRow& ry = eq[static_cast<std::size_t>(2 * j + 1)];
          rx.a.head(active) += wq * (ep.normal[0] * sr.x[0] + ep.normal[1] * sr.x[2]);
          rx.a.tail(active) += wq * (ep.normal[0] * sr.y[0] + ep.normal[1] * sr.y[2]);
          rx.rhs += wq * t[0];
          ry.a.head(active) += wq * (ep.normal[0] * sr.x[2] + ep.normal[1] * sr.x[1]);
          ry.a.tail(active) += wq * (ep.normal[0] * sr.y[2] + ep.normal[1] * sr.y[1]);
          ry.rhs += wq * t[1];
        }
      }
    for (ConstraintRow& r : eq) rows.push_back(std::move(r));
  }

  for (const BoundarySegment& seg : segments) {
    const double span = seg.t1 - seg.t0;
    // kinematic collocation at p+2 evenly spread points of the segment;
    // x = t*dir + offset*normal recovers the physical point on the line
    const int np = p + 2;
    for (int k = 0; k < np; ++k) {
      const double t = seg.t0 + span * k / (np - 1);
      const Vec2 xp = seg.dir * t + seg.normal * seg.offset;
      const BasisEval b = eval_basis(active, patch.origin, patch.scale, xp, false);
      if (seg.tag == EdgeTag::dirichlet) {
        const Vec2 g = load.dirichlet ? load.dirichlet(xp) : Vec2(0.0, 0.0);
        ConstraintRow rx, ry;
        rx.a = Eigen::RowVectorXd::Zero(na);
        rx.a.head(active) = b.val;
        rx.rhs = g[0];
        ry.a = Eigen::RowVectorXd::Zero(na);
        ry.a.tail(active) = b.val;
        ry.rhs = g[1];
        rows.push_back(std::move(rx));
        rows.push_back(std::move(ry));
      } else {
        // symmetry: pin the normal displacement component only
        ConstraintRow row;
        row.a = Eigen::RowVectorXd::Zero(na);
        row.a.head(active) = seg.normal[0] * b.val;
        row.a.tail(active) = seg.normal[1] * b.val;
        row.rhs = 0.0;
        rows.push_back(std::move(row));
      }
    }
  }

  // curved kinematic edges: pointwise collocation at p+1 Gauss points
  const GaussRule1D& coll_gauss = gauss_rule(p + 1);
  for (const BoundaryEdge& be : curved) {
    for (std::size_t g = 0; g < coll_gauss.points.size(); ++g) {
      const auto ep = mesh.map_edge_point(be.element, be.side, coll_gauss.points[g]);
      const BasisEval b = eval_basis(active, patch.origin, patch.scale, ep.x, false);
      if (be.tag == EdgeTag::dirichlet) {
        const Vec2 gv = load.dirichlet ? load.dirichlet(ep.x) : Vec2(0.0, 0.0);
        ConstraintRow rx, ry;
        rx.a = Eigen::RowVectorXd::Zero(na);
        rx.a.head(active) = b.val;
        rx.rhs = gv[0];
        ry.a = Eigen::RowVectorXd::Zero(na);
        ry.a.tail(active) = b.val;
        ry.rhs = gv[1];
        rows.push_back(std::move(rx));
        rows.push_back(std::move(ry));
      } else {
        ConstraintRow row;
        row.a = Eigen::RowVectorXd::Zero(na);
        row.a.head(active) = ep.normal[0] * b.val;
        row.a.tail(active) = ep.normal[1] * b.val;
        row.rhs = 0.0;
        rows.push_back(std::move(row));
      }
    }
  }

  // normalize, then keep a maximal independent subset of rows
  out.rows_total = static_cast<int>(rows.size());
  std::vector<int> usable;
  for (int i = 0; i < out.rows_total; ++i) {
    const double nrm = rows[static_cast<std::size_t>(i)].a.norm();
    if (nrm < 1e-14) {
      out.rows_dropped.push_back(i);
      continue;
    }
    rows[static_cast<std::size_t>(i)].a /= nrm;
    rows[static_cast<std::size_t>(i)].rhs /= nrm;
    usable.push_back(i);
  }

  Eigen::MatrixXd a(static_cast<int>(usable.size()), na);
  Eigen::VectorXd c(static_cast<int>(usable.size()));
  for (int i = 0; i < a.rows(); ++i) {
    a.row(i) = rows[static_cast<std::size_t>(usable[static_cast<std::size_t>(i)])].a;
    c[i] = rows[static_cast<std::size_t>(usable[static_cast<std::size_t>(i)])].rhs;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rr(a.transpose());
  rr.setThreshold(1e-10);
  const int rank = static_cast<int>(rr.rank());
  const auto perm = rr.colsPermutation().indices();
  std::vector<int> kept_local(perm.data(), perm.data() + rank);
  std::sort(kept_local.begin(), kept_local.end());
  for (int i = 0; i < a.rows(); ++i) {
    const int global = usable[static_cast<std::size_t>(i)];
    if (std::binary_search(kept_local.begin(), kept_local.end(), i))
      out.rows_kept.push_back(global);
    else
      out.rows_dropped.push_back(global);
  }

  Eigen::MatrixXd ak(rank, na);
  Eigen::VectorXd ck(rank);
  for (int i = 0; i < rank; ++i) {
    ak.row(i) = a.row(kept_local[static_cast<std::size_t>(i)]);
    ck[i] = c[kept_local[static_cast<std::size_t>(i)]];
  }

  const Eigen::MatrixXd ga = gram.topLeftCorner(active, active);
  Eigen::VectorXd sol(na);
  bool solved = false;
  if (rank > 0) {
    Eigen::MatrixXd saddle = Eigen::MatrixXd::Zero(na + rank, na + rank);
    saddle.block(0, 0, active, active) = 2.0 * ga;
    saddle.block(active, active, active, active) = 2.0 * ga;
    saddle.block(0, na, na, rank) = ak.transpose();
    saddle.block(na, 0, rank, na) = ak;
    Eigen::VectorXd rhs(na + rank);
    rhs.head(active) = 2.0 * hx.head(active);
    rhs.segment(active, active) = 2.0 * hy.head(active);
    rhs.tail(rank) = ck;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(saddle);
    if (lu.isInvertible()) {
      const Eigen::VectorXd full = lu.solve(rhs);
      sol = full.head(na);
      out.constraint_residual = (ak * sol - ck).cwiseAbs().maxCoeff();
      solved = true;
    }
  }
  if (!solved) {
    // singular saddle (or no usable constraints): plain least squares
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ga);
    sol.head(active) = ldlt.solve(hx.head(active));
    sol.tail(active) = ldlt.solve(hy.head(active));
    out.fallback_unconstrained = rank > 0;  // constraint-free patches are fine
    if (rank > 0) out.constraint_residual = (ak * sol - ck).cwiseAbs().maxCoeff();
  }

  out.ax = Eigen::VectorXd::Zero(m);
  out.ay = Eigen::VectorXd::Zero(m);
  out.ax.head(active) = sol.head(active);
  out.ay.head(active) = sol.tail(active);
  if (!out.ax.allFinite() || !out.ay.allFinite())
    throw NumericalError("fit_patch: non-finite recovered coefficients");
  return out;
}

const PatchPolynomial& RecoveredField::polynomial_of(NodeId vertex) const {
  const int i = poly_of_node_[static_cast<std::size_t>(vertex)];
  if (i < 0) throw std::invalid_argument("no fitted polynomial at this node");
  return polynomials_[static_cast<std::size_t>(i)];
}

RecoveredField recover_displacement(const QuadMesh& mesh, const DisplacementStressField& field,
                                    const LoadCase& load, const Material& material) {
  RecoveredField rec;
  rec.mesh_ = &mesh;
  rec.material_ = material;
  rec.poly_of_node_.assign(static_cast<std::size_t>(mesh.node_count()), -1);

  for (NodeId n = 0; n < mesh.node_count(); ++n) {
    if (!mesh.is_corner_node(n) || mesh.is_hanging(n)) continue;
    PatchPolynomial poly = fit_patch(mesh, mesh.vertex_patch(n), field, load, material);
    if (poly.fallback_unconstrained) ++rec.fallback_count_;
    rec.worst_constraint_residual_ =
        std::max(rec.worst_constraint_residual_, poly.constraint_residual);
    rec.poly_of_node_[static_cast<std::size_t>(n)] = static_cast<int>(rec.polynomials_.size());
    rec.polynomials_.push_back(std::move(poly));
  }

  rec.blends_.resize(static_cast<std::size_t>(mesh.element_count()));
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    auto& entries = rec.blends_[static_cast<std::size_t>(e)];
    auto add = [&](NodeId vertex, int corner, double weight) {
      const int poly = rec.poly_of_node_[static_cast<std::size_t>(vertex)];
      for (auto& entry : entries)
        if (entry.poly == poly) {
          entry.w[static_cast<std::size_t>(corner)] += weight;
          return;
        }
      RecoveredField::BlendEntry entry;
      entry.poly = poly;
      entry.w[static_cast<std::size_t>(corner)] = weight;
      entries.push_back(entry);
    };
    for (int c = 0; c < 4; ++c) {
      const NodeId n = mesh.element(e).nodes[static_cast<std::size_t>(c)];
      if (const NodeConstraint* lc = mesh.linear_constraint_of(n)) {
        for (const ConstraintTerm& t : lc->terms) add(t.master, c, t.weight);
      } else {
        add(n, c, 1.0);
      }
    }
  }
  return rec;
}

namespace {

Vec2 poly_value(const PatchPolynomial& p, const Vec2& x) {
  const BasisEval b = eval_basis(static_cast<int>(p.ax.size()), p.origin, p.scale, x, false);
  return {b.val.dot(p.ax), b.val.dot(p.ay)};
}

Vec3 poly_stress(const PatchPolynomial& p, const Mat3& d, const Vec2& x) {
  const BasisEval b = eval_basis(static_cast<int>(p.ax.size()), p.origin, p.scale, x, false);
  const Vec3 eps(b.dx.dot(p.ax), b.dy.dot(p.ay), b.dy.dot(p.ax) + b.dx.dot(p.ay));
  return d * eps;
}

Vec2 poly_stress_divergence(const PatchPolynomial& p, const Mat3& d, const Vec2& x) {
  const BasisEval b = eval_basis(static_cast<int>(p.ax.size()), p.origin, p.scale, x, true);
  const DivRows dr = divergence_rows(b, d);
  return {dr.xx.dot(p.ax) + dr.xy.dot(p.ay), dr.yx.dot(p.ax) + dr.yy.dot(p.ay)};
}

struct BlendEval {
  std::vector<double> weight;
  std::vector<Vec2> gradient;  // physical gradient of each entry weight
  Vec2 x{0.0, 0.0};
};

BlendEval eval_blend(const RecoveredField& rec, ElemId e, const Vec2& xi, bool gradients) {
  const QuadMesh& mesh = rec.mesh();
  const auto mp = mesh.map_point(e, xi);
  const ShapeEval vs = vertex_shape_values(xi);
  const Mat2 jinv_t = mp.jacobian.inverse().transpose();
  const auto& entries = rec.blend(e);
  BlendEval out;
  out.x = mp.x;
  out.weight.resize(entries.size(), 0.0);
  if (gradients) out.gradient.resize(entries.size(), Vec2(0.0, 0.0));
  for (std::size_t j = 0; j < entries.size(); ++j)
    for (int c = 0; c < 4; ++c) {
      const double w = entries[j].w[static_cast<std::size_t>(c)];
      if (w == 0.0) continue;
      out.weight[j] += w * vs.n[static_cast<std::size_t>(c)];
      if (gradients) out.gradient[j] += w * (jinv_t * vs.dn[static_cast<std::size_t>(c)]);
    }
  return out;
}

}  // namespace

Vec2 patch_value(const PatchPolynomial& p, const Vec2& x) { return poly_value(p, x); }

Vec2 conjoint_displacement(const RecoveredField& rec, ElemId e, const Vec2& xi) {
  const BlendEval b = eval_blend(rec, e, xi, false);
  const auto& entries = rec.blend(e);
  Vec2 u(0.0, 0.0);
  for (std::size_t j = 0; j < entries.size(); ++j)
    u += b.weight[j] * poly_value(rec.polynomials()[static_cast<std::size_t>(entries[j].poly)],
                                  b.x);
  return u;
}

StressSplit conjoint_stress_split(const RecoveredField& rec, ElemId e, const Vec2& xi) {
  const Mat3 d = elasticity_matrix(rec.material());
  const BlendEval b = eval_blend(rec, e, xi, true);
  const auto& entries = rec.blend(e);
  StressSplit out;
  out.continuous.setZero();
  Vec3 eps_disc(0.0, 0.0, 0.0);
  for (std::size_t j = 0; j < entries.size(); ++j) {
    const PatchPolynomial& p = rec.polynomials()[static_cast<std::size_t>(entries[j].poly)];
    out.continuous += b.weight[j] * poly_stress(p, d, b.x);
    const Vec2 u = poly_value(p, b.x);
    const Vec2& g = b.gradient[j];
    eps_disc += Vec3(g[0] * u[0], g[1] * u[1], g[1] * u[0] + g[0] * u[1]);
  }
  out.discontinuous = d * eps_disc;
  out.total = out.continuous + out.discontinuous;
  return out;
}

Vec2 internal_default_s(const RecoveredField& rec, ElemId e, const Vec2& xi,
                        const LoadCase& load) {
  const Mat3 d = elasticity_matrix(rec.material());
  const BlendEval b = eval_blend(rec, e, xi, true);
  const auto& entries = rec.blend(e);
  Vec2 div(0.0, 0.0);
  for (std::size_t j = 0; j < entries.size(); ++j) {
    const PatchPolynomial& p = rec.polynomials()[static_cast<std::size_t>(entries[j].poly)];
    const Vec3 sig = poly_stress(p, d, b.x);
    const Vec2& g = b.gradient[j];
    div[0] += g[0] * sig[0] + g[1] * sig[2];
    div[1] += g[0] * sig[2] + g[1] * sig[1];
    div += b.weight[j] * poly_stress_divergence(p, d, b.x);
  }
  const Vec2 body = load.body ? load.body(b.x) : Vec2(0.0, 0.0);
  return -div - body;
}

Vec2 boundary_default_r(const RecoveredField& rec, const BoundaryEdge& edge, double s,
                        const LoadCase& load) {
  if (edge.tag == EdgeTag::dirichlet)
    throw std::invalid_argument("boundary_default_r: edge carries kinematic data only");
  const auto ep = rec.mesh().map_edge_point(edge.element, edge.side, s);
  const StressSplit split = conjoint_stress_split(rec, edge.element, edge_point_xi(edge.side, s));
  const Vec3& sig = split.continuous;
  const Vec2 tn(sig[0] * ep.normal[0] + sig[2] * ep.normal[1],
                sig[2] * ep.normal[0] + sig[1] * ep.normal[1]);
  if (edge.tag == EdgeTag::neumann) {
    const Vec2 t = load.traction ? load.traction(ep.x, ep.normal, edge.tag) : Vec2(0.0, 0.0);
    return tn - t;
  }
  // symmetry: the tangential traction is the defect; the normal one is reacted
  return tn - tn.dot(ep.normal) * ep.normal;
}

}  // namespace recfem

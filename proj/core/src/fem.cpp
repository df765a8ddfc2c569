#include "recfem/fem.hpp"

#include "recfem/shape.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace recfem {

namespace {

struct ElementBasis {
  ShapeEval shape;
  std::array<Vec2, 8> grad{};  // physical gradients
  double det = 0.0;
  Vec2 x{0.0, 0.0};
};

ElementBasis element_basis(const QuadMesh& mesh, ElemId e, const Vec2& xi) {
  ElementBasis out;
  out.shape = shape_values(mesh.order(), xi);
  const Element& el = mesh.element(e);
  Mat2 j = Mat2::Zero();
  Vec2 x(0.0, 0.0);
  for (int i = 0; i < out.shape.count; ++i) {
    const Vec2& xn = mesh.node(el.nodes[static_cast<std::size_t>(i)]);
    x += out.shape.n[static_cast<std::size_t>(i)] * xn;
    j += xn * out.shape.dn[static_cast<std::size_t>(i)].transpose();
  }
  out.det = j.determinant();
  if (!(out.det > 0.0)) throw NumericalError("element jacobian not positive");
  const Mat2 jinv = j.inverse();
  for (int i = 0; i < out.shape.count; ++i)
    out.grad[static_cast<std::size_t>(i)] =
        jinv.transpose() * out.shape.dn[static_cast<std::size_t>(i)];
  out.x = x;
  return out;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> strain_matrix(const ElementBasis& basis) {
  const int n = basis.shape.count;
  Eigen::Matrix<double, 3, Eigen::Dynamic> b(3, 2 * n);
  b.setZero();
  for (int i = 0; i < n; ++i) {
    const Vec2& g = basis.grad[static_cast<std::size_t>(i)];
    b(0, 2 * i) = g[0];
    b(1, 2 * i + 1) = g[1];
    b(2, 2 * i) = g[1];
    b(2, 2 * i + 1) = g[0];
  }
  return b;
}

enum class DofState : std::uint8_t { free_dof, fixed, slave };

}  // namespace

ConstraintMap build_constraint_map(const QuadMesh& mesh, const LoadCase& load) {
  const int ndof = 2 * mesh.node_count();
  std::vector<DofState> state(static_cast<std::size_t>(ndof), DofState::free_dof);
  std::vector<double> fixed_value(static_cast<std::size_t>(ndof), 0.0);

  auto fix = [&](int dof, double v) {
    if (state[static_cast<std::size_t>(dof)] == DofState::slave)
      throw std::logic_error("constraint map: dof is both fixed and hanging");
    state[static_cast<std::size_t>(dof)] = DofState::fixed;
    fixed_value[static_cast<std::size_t>(dof)] = v;
  };

  for (const BoundaryEdge& be : mesh.boundary_edges()) {
    if (be.tag == EdgeTag::neumann) continue;
    const Element& el = mesh.element(be.element);
    std::vector<NodeId> edge_nodes = {el.nodes[static_cast<std::size_t>(edge_corners(be.side)[0])],
                                      el.nodes[static_cast<std::size_t>(edge_corners(be.side)[1])]};
    if (mesh.order() == ElementOrder::q8)
      edge_nodes.push_back(el.nodes[static_cast<std::size_t>(4 + be.side)]);
    for (NodeId n : edge_nodes) {
      switch (be.tag) {
        case EdgeTag::dirichlet: {
          if (!load.dirichlet) throw std::invalid_argument("load case lacks dirichlet data");
          const Vec2 g = load.dirichlet(mesh.node(n));
          fix(2 * n, g[0]);
          fix(2 * n + 1, g[1]);
          break;
        }
        case EdgeTag::symmetry_x: fix(2 * n, 0.0); break;
        case EdgeTag::symmetry_y: fix(2 * n + 1, 0.0); break;
        default: break;
      }
    }
  }

  const double tol = 1e-9 * mesh.characteristic_size();
  for (const PointPin& pin : load.pins) {
    NodeId found = -1;
    for (NodeId n = 0; n < mesh.node_count(); ++n)
      if ((mesh.node(n) - pin.where).norm() <= tol) {
        found = n;
        break;
      }
    if (found < 0) throw std::invalid_argument("point pin does not coincide with a mesh node");
    if (pin.fix_x) fix(2 * found, pin.value[0]);
    if (pin.fix_y) fix(2 * found + 1, pin.value[1]);
  }

  for (const NodeConstraint& c : mesh.constraints()) {
    for (int comp = 0; comp < 2; ++comp) {
      const int dof = 2 * c.slave + comp;
      if (state[static_cast<std::size_t>(dof)] == DofState::fixed)
        throw std::logic_error("constraint map: dof is both fixed and hanging");
      state[static_cast<std::size_t>(dof)] = DofState::slave;
    }
  }

  ConstraintMap map;
  map.full_count = ndof;
  std::vector<int> free_index(static_cast<std::size_t>(ndof), -1);
  int nfree = 0;
  for (int d = 0; d < ndof; ++d)
    if (state[static_cast<std::size_t>(d)] == DofState::free_dof)
      free_index[static_cast<std::size_t>(d)] = nfree++;
  map.free_count = nfree;
  map.offset = Eigen::VectorXd::Zero(ndof);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ndof) + 4 * mesh.constraints().size());
  for (int d = 0; d < ndof; ++d) {
    if (state[static_cast<std::size_t>(d)] == DofState::free_dof)
      trip.emplace_back(d, free_index[static_cast<std::size_t>(d)], 1.0);
    else if (state[static_cast<std::size_t>(d)] == DofState::fixed)
      map.offset[d] = fixed_value[static_cast<std::size_t>(d)];
  }
  for (const NodeConstraint& c : mesh.constraints()) {
    for (const ConstraintTerm& t : c.terms) {
      for (int comp = 0; comp < 2; ++comp) {
        const int slave = 2 * c.slave + comp;
        const int master = 2 * t.master + comp;
        switch (state[static_cast<std::size_t>(master)]) {
          case DofState::free_dof:
            trip.emplace_back(slave, free_index[static_cast<std::size_t>(master)], t.weight);
            break;
          case DofState::fixed:
            map.offset[slave] += t.weight * fixed_value[static_cast<std::size_t>(master)];
            break;
          case DofState::slave:
            throw std::logic_error("constraint map: chained hanging constraints");
        }
      }
    }
  }
  map.expansion.resize(ndof, nfree);
  map.expansion.setFromTriplets(trip.begin(), trip.end());
  return map;
}

Eigen::SparseMatrix<double> assemble_stiffness(const QuadMesh& mesh, const Material& material) {
  const Mat3 d = elasticity_matrix(material);
  const auto rule = tensor_rule(stiffness_rule(mesh.order()));
  const int nn = nodes_per_element(mesh.order());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mesh.element_count()) * static_cast<std::size_t>(4 * nn * nn));
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(2 * nn, 2 * nn);
    for (const QuadPoint2D& q : rule) {
      const ElementBasis basis = element_basis(mesh, e, q.xi);
      const auto b = strain_matrix(basis);
      ke.noalias() += b.transpose() * d * b * (q.weight * basis.det);
    }
    const Element& el = mesh.element(e);
    for (int i = 0; i < 2 * nn; ++i)
      for (int j = 0; j < 2 * nn; ++j) {
        const int gi = 2 * el.nodes[static_cast<std::size_t>(i / 2)] + (i % 2);
        const int gj = 2 * el.nodes[static_cast<std::size_t>(j / 2)] + (j % 2);
        trip.emplace_back(gi, gj, ke(i, j));
      }
  }
  Eigen::SparseMatrix<double> k(2 * mesh.node_count(), 2 * mesh.node_count());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

Eigen::VectorXd consistent_load_vector(const QuadMesh& mesh, const LoadCase& load) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * mesh.node_count());
  const int nn = nodes_per_element(mesh.order());

  if (load.body) {
    const auto rule = tensor_rule(kFieldRule);
    for (ElemId e = 0; e < mesh.element_count(); ++e) {
      const Element& el = mesh.element(e);
      for (const QuadPoint2D& q : rule) {
        const ElementBasis basis = element_basis(mesh, e, q.xi);
        const Vec2 b = load.body(basis.x);
        const double w = q.weight * basis.det;
        for (int i = 0; i < nn; ++i) {
          f[2 * el.nodes[static_cast<std::size_t>(i)]] += w * basis.shape.n[static_cast<std::size_t>(i)] * b[0];
          f[2 * el.nodes[static_cast<std::size_t>(i)] + 1] += w * basis.shape.n[static_cast<std::size_t>(i)] * b[1];
        }
      }
    }
  }

  if (load.traction) {
    const GaussRule1D& g = gauss_rule(edge_rule(mesh.order()));
    for (const BoundaryEdge& be : mesh.boundary_edges()) {
      if (be.tag != EdgeTag::neumann) continue;
      const Element& el = mesh.element(be.element);
      for (std::size_t q = 0; q < g.points.size(); ++q) {
        const auto ep = mesh.map_edge_point(be.element, be.side, g.points[q]);
        const Vec2 t = load.traction(ep.x, ep.normal, be.tag);
        const ShapeEval s = shape_values(mesh.order(), edge_point_xi(be.side, g.points[q]));
        const double w = g.weights[q] * ep.jacobian;
        for (int i = 0; i < nn; ++i) {
          f[2 * el.nodes[static_cast<std::size_t>(i)]] += w * s.n[static_cast<std::size_t>(i)] * t[0];
          f[2 * el.nodes[static_cast<std::size_t>(i)] + 1] += w * s.n[static_cast<std::size_t>(i)] * t[1];
        }
      }
    }
  }
  return f;
}

SolveResult assemble_and_solve(const QuadMesh& mesh, const Material& material,
                               const LoadCase& load, const SolveOptions& options) {
  const Eigen::SparseMatrix<double> k = assemble_stiffness(mesh, material);
  const Eigen::VectorXd f = consistent_load_vector(mesh, load);
  const ConstraintMap map = build_constraint_map(mesh, load);

  if (map.free_count == 0) {
    FEField field(mesh, material, map.offset);
    return {std::move(field), 0, 0.0};
  }

  const Eigen::SparseMatrix<double> kr =
      map.expansion.transpose() * k * map.expansion;
  const Eigen::VectorXd fr = map.expansion.transpose() * (f - k * map.offset);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(kr);
  if (solver.info() != Eigen::Success)
    throw NumericalError("assemble_and_solve: factorization failed");
  if (solver.vectorD().minCoeff() <= 0.0)
    throw NumericalError("assemble_and_solve: reduced stiffness is not positive definite");
  const Eigen::VectorXd ur = solver.solve(fr);
  const double fnorm = fr.norm();
  const double res = (kr * ur - fr).norm() / (fnorm > 0.0 ? fnorm : 1.0);
  if (!std::isfinite(res) || res > options.residual_tol)
    throw NumericalError("assemble_and_solve: linear solve residual too large");

  Eigen::VectorXd full = map.expansion * ur + map.offset;
  FEField field(mesh, material, std::move(full));
  return {std::move(field), map.free_count, res};
}

FEField::FEField(const QuadMesh& mesh, const Material& material, Eigen::VectorXd nodal)
    : mesh_(&mesh), material_(material), nodal_(std::move(nodal)) {
  if (nodal_.size() != 2 * mesh.node_count())
    throw std::invalid_argument("FEField: nodal vector size mismatch");
}

Vec2 FEField::value(ElemId e, const Vec2& xi) const {
  const ShapeEval s = shape_values(mesh_->order(), xi);
  const Element& el = mesh_->element(e);
  Vec2 u(0.0, 0.0);
  for (int i = 0; i < s.count; ++i) {
    const NodeId n = el.nodes[static_cast<std::size_t>(i)];
    u[0] += s.n[static_cast<std::size_t>(i)] * nodal_[2 * n];
    u[1] += s.n[static_cast<std::size_t>(i)] * nodal_[2 * n + 1];
  }
  return u;
}

Vec3 FEField::stress(ElemId e, const Vec2& xi) const {
  const ElementBasis basis = element_basis(*mesh_, e, xi);
  const Element& el = mesh_->element(e);
  Vec3 strain(0.0, 0.0, 0.0);
  for (int i = 0; i < basis.shape.count; ++i) {
    const NodeId n = el.nodes[static_cast<std::size_t>(i)];
    const Vec2& g = basis.grad[static_cast<std::size_t>(i)];
    strain[0] += g[0] * nodal_[2 * n];
    strain[1] += g[1] * nodal_[2 * n + 1];
    strain[2] += g[1] * nodal_[2 * n] + g[0] * nodal_[2 * n + 1];
  }
  return elasticity_matrix(material_) * strain;
}

std::vector<double> energy_inner_product_per_element(const QuadMesh& mesh,
                                                     const Material& material,
                                                     const StressEval& a, const StressEval& b) {
  const Mat3 s = compliance_matrix(material);
  const auto rule = tensor_rule(kFieldRule);
  std::vector<double> out(static_cast<std::size_t>(mesh.element_count()), 0.0);
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    KahanSum acc;
    for (const QuadPoint2D& q : rule) {
      const auto mp = mesh.map_point(e, q.xi);
      const Vec3 sa = a(e, q.xi, mp.x);
      const Vec3 sb = b(e, q.xi, mp.x);
      acc.add(sa.dot(s * sb) * q.weight * mp.det);
    }
    out[static_cast<std::size_t>(e)] = acc.value();
  }
  return out;
}

double energy_inner_product(const QuadMesh& mesh, const Material& material, const StressEval& a,
                            const StressEval& b) {
  KahanSum total;
  for (double v : energy_inner_product_per_element(mesh, material, a, b)) total.add(v);
  return total.value();
}

StressEval stress_eval_of(const DisplacementStressField& f) {
  return [&f](ElemId e, const Vec2& xi, const Vec2&) { return f.stress(e, xi); };
}

}  // namespace recfem

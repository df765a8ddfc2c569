#include "recfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "recfem/shape.hpp"

namespace recfem {

namespace {

// Lattice resolution: every root cell spans 2^21 lattice units, so corner and
// midside positions of cells down to the level cap stay integral.
constexpr std::int64_t kRootSpan = std::int64_t(1) << 21;
constexpr int kMaxDivisions = 64;

struct LatticePoint {
  std::int64_t x = 0, y = 0;
};

std::uint64_t pack_lattice(std::int64_t gx, std::int64_t gy) {
  const std::int64_t bias = std::int64_t(1) << 30;
  return (static_cast<std::uint64_t>(gx + bias) << 32) | static_cast<std::uint64_t>(gy + bias);
}

int opposite_side(int s) { return (s + 2) % 4; }

// cell span in lattice units at a refinement level
std::int64_t cell_span(int level) { return kRootSpan >> level; }

struct CellRef {
  CellKey key;
  bool refined = false;
  bool found = false;
};

}  // namespace

// ---------------------------------------------------------------------------
// forest helpers

namespace {

bool cell_exists(const std::unordered_map<std::uint64_t, bool>& forest, const CellKey& k) {
  return forest.find(k.packed()) != forest.end();
}

// Deepest existing cell containing grid position (ix, iy) given at `level`.
CellRef containing_cell(const std::unordered_map<std::uint64_t, bool>& forest, std::uint8_t patch,
                        int level, std::uint32_t ix, std::uint32_t iy) {
  for (int l = level; l >= 0; --l) {
    CellKey k{patch, static_cast<std::uint8_t>(l), ix >> (level - l), iy >> (level - l)};
    auto it = forest.find(k.packed());
    if (it != forest.end()) return {k, it->second, true};
  }
  return {};
}

struct NeighborPos {
  bool boundary = false;
  int boundary_side = 0;  // side of the patch when boundary
  std::uint8_t patch = 0;
  std::uint32_t ix = 0, iy = 0;
};

NeighborPos neighbor_position(const DomainSpec& domain, int divisions, const CellKey& k,
                              int side) {
  const std::int64_t n = std::int64_t(divisions) << k.level;
  std::int64_t nix = k.ix, niy = k.iy;
  switch (side) {
    case 0: niy -= 1; break;
    case 1: nix += 1; break;
    case 2: niy += 1; break;
    case 3: nix -= 1; break;
  }
  NeighborPos out;
  int patch = k.patch;
  if (nix < 0 || nix >= n || niy < 0 || niy >= n) {
    const int nb = domain.patches[static_cast<std::size_t>(patch)].neighbor[static_cast<std::size_t>(side)];
    if (nb < 0) {
      out.boundary = true;
      out.boundary_side = side;
      return out;
    }
    patch = nb;
    if (nix < 0) nix += n;
    if (nix >= n) nix -= n;
    if (niy < 0) niy += n;
    if (niy >= n) niy -= n;
  }
  out.patch = static_cast<std::uint8_t>(patch);
  out.ix = static_cast<std::uint32_t>(nix);
  out.iy = static_cast<std::uint32_t>(niy);
  return out;
}

void split_cell(std::unordered_map<std::uint64_t, bool>& forest, const DomainSpec& domain,
                int divisions, const CellKey& k) {
  auto it = forest.find(k.packed());
  if (it == forest.end() || it->second) return;  // vanished or already refined
  if (k.level >= kMaxRefinementLevel)
    throw std::logic_error("split_cell: level cap must be checked by the caller");

  // 2:1 balance: any leaf sharing an edge with the new children must reach at
  // least this cell's level first.
  for (int side = 0; side < 4; ++side) {
    const NeighborPos np = neighbor_position(domain, divisions, k, side);
    if (np.boundary) continue;
    while (true) {
      const CellRef c = containing_cell(forest, np.patch, k.level, np.ix, np.iy);
      if (!c.found) throw std::logic_error("split_cell: forest inconsistent");
      if (c.key.level >= k.level || c.refined) break;
      split_cell(forest, domain, divisions, c.key);
    }
  }

  forest[k.packed()] = true;
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a) {
      CellKey child{k.patch, static_cast<std::uint8_t>(k.level + 1), 2 * k.ix + static_cast<std::uint32_t>(a),
                    2 * k.iy + static_cast<std::uint32_t>(b)};
      forest[child.packed()] = false;
    }
}

void collect_leaves(const std::unordered_map<std::uint64_t, bool>& forest, const CellKey& k,
                    std::vector<CellKey>& out) {
  auto it = forest.find(k.packed());
  if (it == forest.end()) return;
  if (!it->second) {
    out.push_back(k);
    return;
  }
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a)
      collect_leaves(forest,
                     CellKey{k.patch, static_cast<std::uint8_t>(k.level + 1),
                             2 * k.ix + static_cast<std::uint32_t>(a), 2 * k.iy + static_cast<std::uint32_t>(b)},
                     out);
}

}  // namespace

// ---------------------------------------------------------------------------
// mesh generation

void QuadMesh::generate() {
  nodes_.clear();
  elements_.clear();
  boundary_edges_.clear();
  constraints_.clear();
  linear_constraints_.clear();

  const int d = divisions_;
  const std::int64_t patch_width = std::int64_t(d) * kRootSpan;

  // deterministic leaf order: patch, then root-row-major, then z-order DFS
  std::vector<CellKey> leaves;
  for (std::size_t p = 0; p < domain_.patches.size(); ++p)
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i)
        collect_leaves(forest_,
                       CellKey{static_cast<std::uint8_t>(p), 0, static_cast<std::uint32_t>(i),
                               static_cast<std::uint32_t>(j)},
                       leaves);

  // patch offsets on the shared unit lattice (only multi-patch domains need them)
  std::vector<LatticePoint> patch_offset(domain_.patches.size());
  for (std::size_t p = 0; p < domain_.patches.size(); ++p) {
    const MacroPatch& mp = domain_.patches[p];
    if (!mp.polar && domain_.patches.size() > 1) {
      patch_offset[p].x = std::llround(mp.origin[0] / mp.scale) * patch_width;
      patch_offset[p].y = std::llround(mp.origin[1] / mp.scale) * patch_width;
    }
  }

  std::unordered_map<std::uint64_t, NodeId> node_ids;
  auto node_at = [&](std::uint8_t patch, std::int64_t lx, std::int64_t ly) -> NodeId {
    const std::uint64_t key =
        pack_lattice(patch_offset[patch].x + lx, patch_offset[patch].y + ly);
    auto it = node_ids.find(key);
    if (it != node_ids.end()) return it->second;
    const NodeId id = static_cast<NodeId>(nodes_.size());
    const double u = static_cast<double>(lx) / static_cast<double>(patch_width);
    const double v = static_cast<double>(ly) / static_cast<double>(patch_width);
    nodes_.push_back(domain_.patches[patch].map(u, v));
    node_ids.emplace(key, id);
    return id;
  };

  const bool q8 = order_ == ElementOrder::q8;
  std::unordered_map<std::uint64_t, ElemId> cell_to_elem;
  elements_.reserve(leaves.size());
  for (const CellKey& k : leaves) {
    const std::int64_t s = cell_span(k.level);
    const std::int64_t x0 = std::int64_t(k.ix) * s, y0 = std::int64_t(k.iy) * s;
    Element e;
    e.cell = k;
    e.nodes[0] = node_at(k.patch, x0, y0);
    e.nodes[1] = node_at(k.patch, x0 + s, y0);
    e.nodes[2] = node_at(k.patch, x0 + s, y0 + s);
    e.nodes[3] = node_at(k.patch, x0, y0 + s);
    if (q8) {
      const std::int64_t h = s / 2;
      e.nodes[4] = node_at(k.patch, x0 + h, y0);
      e.nodes[5] = node_at(k.patch, x0 + s, y0 + h);
      e.nodes[6] = node_at(k.patch, x0 + h, y0 + s);
      e.nodes[7] = node_at(k.patch, x0, y0 + h);
    }
    cell_to_elem.emplace(k.packed(), static_cast<ElemId>(elements_.size()));
    elements_.push_back(e);
  }

  hanging_host_.assign(nodes_.size(), -1);
  std::unordered_set<NodeId> constrained;
  std::unordered_set<NodeId> linear_constrained;

  for (std::size_t ei = 0; ei < elements_.size(); ++ei) {
    const Element& e = elements_[ei];
    const CellKey& k = e.cell;
    for (int side = 0; side < 4; ++side) {
      const NeighborPos np = neighbor_position(domain_, d, k, side);
      if (np.boundary) {
        const EdgeTag tag =
            domain_.patches[k.patch].side_tag[static_cast<std::size_t>(np.boundary_side)];
        boundary_edges_.push_back({static_cast<ElemId>(ei), side, tag});
        continue;
      }
      const CellRef c = containing_cell(forest_, np.patch, k.level, np.ix, np.iy);
      if (!c.found) throw std::logic_error("mesh: forest inconsistent");
      if (c.refined || c.key.level == k.level) continue;  // conforming or we are the coarse side
      if (c.key.level != k.level - 1)
        throw std::logic_error("mesh: 2:1 balance violated");

      const ElemId coarse_elem = cell_to_elem.at(c.key.packed());
      const Element& coarse = elements_[static_cast<std::size_t>(coarse_elem)];
      const int cside = opposite_side(side);
      const NodeId a = coarse.nodes[static_cast<std::size_t>(edge_corners(cside)[0])];
      const NodeId b = coarse.nodes[static_cast<std::size_t>(edge_corners(cside)[1])];

      const NodeId c0 = e.nodes[static_cast<std::size_t>(edge_corners(side)[0])];
      const NodeId c1 = e.nodes[static_cast<std::size_t>(edge_corners(side)[1])];
      const NodeId mid = (c0 != a && c0 != b) ? c0 : c1;
      const NodeId shared = (mid == c0) ? c1 : c0;

      if (linear_constrained.insert(mid).second) {
        linear_constraints_.push_back({mid, {{a, 0.5}, {b, 0.5}}});
        hanging_host_[static_cast<std::size_t>(mid)] = coarse_elem;
        if (!q8) {
          constraints_.push_back({mid, {{a, 0.5}, {b, 0.5}}});
          constrained.insert(mid);
        }
      }
      if (q8) {
        // fine midside sits at the quarter point of the coarse edge next to
        // the shared corner; constrain it to the coarse edge quadratic
        const NodeId m = e.nodes[static_cast<std::size_t>(4 + side)];
        const NodeId cm = coarse.nodes[static_cast<std::size_t>(4 + cside)];
        if (constrained.insert(m).second) {
          const NodeId near = shared, far = (shared == a) ? b : a;
          constraints_.push_back({m, {{near, 0.375}, {far, -0.125}, {cm, 0.75}}});
        }
      }
    }
  }

  constraint_index_.assign(nodes_.size(), -1);
  for (std::size_t i = 0; i < constraints_.size(); ++i)
    constraint_index_[static_cast<std::size_t>(constraints_[i].slave)] = static_cast<int>(i);
  linear_constraint_index_.assign(nodes_.size(), -1);
  for (std::size_t i = 0; i < linear_constraints_.size(); ++i)
    linear_constraint_index_[static_cast<std::size_t>(linear_constraints_[i].slave)] =
        static_cast<int>(i);

  corner_incidence_.assign(nodes_.size(), {});
  for (std::size_t ei = 0; ei < elements_.size(); ++ei)
    for (int c = 0; c < 4; ++c)
      corner_incidence_[static_cast<std::size_t>(elements_[ei].nodes[static_cast<std::size_t>(c)])]
          .push_back(static_cast<ElemId>(ei));
}

QuadMesh build_structured_mesh(const DomainSpec& domain, int divisions, ElementOrder order) {
  if (divisions < 1 || divisions > kMaxDivisions)
    throw std::invalid_argument("build_structured_mesh: divisions out of range");
  QuadMesh m;
  m.domain_ = domain;
  m.order_ = order;
  m.divisions_ = divisions;
  for (std::size_t p = 0; p < domain.patches.size(); ++p)
    for (int j = 0; j < divisions; ++j)
      for (int i = 0; i < divisions; ++i)
        m.forest_[CellKey{static_cast<std::uint8_t>(p), 0, static_cast<std::uint32_t>(i),
                          static_cast<std::uint32_t>(j)}
                      .packed()] = false;
  m.generate();
  return m;
}

std::vector<std::pair<std::uint64_t, bool>> QuadMesh::forest_cells() const {
  std::vector<std::pair<std::uint64_t, bool>> out(forest_.begin(), forest_.end());
  std::sort(out.begin(), out.end());
  return out;
}

QuadMesh restore_mesh(const DomainSpec& domain, ElementOrder order, int divisions,
                      const std::vector<std::pair<std::uint64_t, bool>>& forest) {
  if (divisions < 1 || divisions > kMaxDivisions)
    throw std::invalid_argument("restore_mesh: divisions out of range");
  if (forest.empty()) throw std::invalid_argument("restore_mesh: empty forest");
  QuadMesh m;
  m.domain_ = domain;
  m.order_ = order;
  m.divisions_ = divisions;
  for (const auto& [key, refined] : forest) m.forest_[key] = refined;
  m.generate();
  return m;
}

RefineResult refine_elements(const QuadMesh& mesh, const std::vector<ElemId>& marked) {
  RefineResult out;
  out.mesh.domain_ = mesh.domain_;
  out.mesh.order_ = mesh.order_;
  out.mesh.divisions_ = mesh.divisions_;
  out.mesh.forest_ = mesh.forest_;

  std::vector<ElemId> targets = marked;
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  for (ElemId e : targets) {
    if (e < 0 || e >= mesh.element_count())
      throw std::invalid_argument("refine_elements: element id out of range");
    const CellKey k = mesh.element(e).cell;
    if (k.level >= kMaxRefinementLevel) {
      out.skipped.push_back(e);
      continue;
    }
    split_cell(out.mesh.forest_, out.mesh.domain_, out.mesh.divisions_, k);
  }
  out.mesh.generate();
  return out;
}

// ---------------------------------------------------------------------------
// queries

bool QuadMesh::is_hanging(NodeId n) const {
  return linear_constraint_index_[static_cast<std::size_t>(n)] >= 0;
}

const NodeConstraint* QuadMesh::linear_constraint_of(NodeId n) const {
  const int i = linear_constraint_index_[static_cast<std::size_t>(n)];
  return i < 0 ? nullptr : &linear_constraints_[static_cast<std::size_t>(i)];
}

VertexPatch QuadMesh::vertex_patch(NodeId n) const {
  if (n < 0 || n >= node_count()) throw std::invalid_argument("vertex_patch: bad node id");
  const auto& inc = corner_incidence_[static_cast<std::size_t>(n)];
  if (inc.empty())
    throw std::invalid_argument("vertex_patch: node is not a vertex of any element");
  VertexPatch p;
  p.center = n;
  p.elements = inc;
  if (const ElemId host = hanging_host_[static_cast<std::size_t>(n)]; host >= 0)
    p.elements.push_back(host);

  Vec2 c(0.0, 0.0);
  for (ElemId e : p.elements) c += map_point(e, Vec2(0.0, 0.0)).x;
  c /= static_cast<double>(p.elements.size());
  p.origin = c;
  double ext = 0.0;
  for (ElemId e : p.elements) {
    const Element& el = element(e);
    const int nn = nodes_per_element(order_);
    for (int i = 0; i < nn; ++i) {
      const Vec2& x = node(el.nodes[static_cast<std::size_t>(i)]);
      ext = std::max({ext, std::abs(x[0] - c[0]), std::abs(x[1] - c[1])});
    }
  }
  p.scale = ext > 0.0 ? ext : 1.0;
  return p;
}

QuadMesh::MappedPoint QuadMesh::map_point(ElemId e, const Vec2& xi) const {
  const Element& el = element(e);
  const ShapeEval s = shape_values(order_, xi);
  MappedPoint out;
  out.x.setZero();
  out.jacobian.setZero();
  for (int i = 0; i < s.count; ++i) {
    const Vec2& xn = node(el.nodes[static_cast<std::size_t>(i)]);
    out.x += s.n[static_cast<std::size_t>(i)] * xn;
    out.jacobian += xn * s.dn[static_cast<std::size_t>(i)].transpose();
  }
  out.det = out.jacobian.determinant();
  return out;
}

QuadMesh::EdgePoint QuadMesh::map_edge_point(ElemId e, int side, double s) const {
  const Vec2 xi = edge_point_xi(side, s);
  const MappedPoint mp = map_point(e, xi);
  // CCW tangent direction in the parent square
  Vec2 tloc;
  switch (side) {
    case 0: tloc = Vec2(1.0, 0.0); break;
    case 1: tloc = Vec2(0.0, 1.0); break;
    case 2: tloc = Vec2(-1.0, 0.0); break;
    default: tloc = Vec2(0.0, -1.0); break;
  }
  const Vec2 t = mp.jacobian * tloc;
  EdgePoint out;
  out.x = mp.x;
  out.jacobian = t.norm();
  if (out.jacobian <= 0.0) throw NumericalError("map_edge_point: degenerate edge");
  out.normal = Vec2(t[1], -t[0]) / out.jacobian;
  return out;
}

bool QuadMesh::edge_is_straight(ElemId e, int side) const {
  if (order_ == ElementOrder::q4) return true;
  const Element& el = element(e);
  const Vec2& a = node(el.nodes[static_cast<std::size_t>(edge_corners(side)[0])]);
  const Vec2& b = node(el.nodes[static_cast<std::size_t>(edge_corners(side)[1])]);
  const Vec2& m = node(el.nodes[static_cast<std::size_t>(4 + side)]);
  const Vec2 ab = b - a, am = m - a;
  const double cross = ab[0] * am[1] - ab[1] * am[0];
  return std::abs(cross) <= 1e-12 * ab.squaredNorm();
}

double QuadMesh::characteristic_size() const {
  Vec2 lo = nodes_.front(), hi = nodes_.front();
  for (const Vec2& x : nodes_) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  return (hi - lo).norm();
}

}  // namespace recfem

#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "recfem/domain.hpp"
#include "recfem/types.hpp"

namespace recfem {

inline constexpr int kMaxRefinementLevel = 20;

// Quadtree cell address: level-l cells of a patch form a (divisions*2^l)^2 grid.
struct CellKey {
  std::uint8_t patch = 0;
  std::uint8_t level = 0;
  std::uint32_t ix = 0;
  std::uint32_t iy = 0;

  [[nodiscard]] std::uint64_t packed() const {
    return (std::uint64_t(patch) << 59) | (std::uint64_t(level) << 54) |
           (std::uint64_t(ix) << 27) | std::uint64_t(iy);
  }
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct Element {
  std::array<NodeId, 8> nodes{};  // corners CCW then midsides (q8)
  CellKey cell;
};

struct BoundaryEdge {
  ElemId element = -1;
  int side = 0;  // local edge index 0..3
  EdgeTag tag = EdgeTag::neumann;
};

struct ConstraintTerm {
  NodeId master = -1;
  double weight = 0.0;
};

struct NodeConstraint {
  NodeId slave = -1;
  std::vector<ConstraintTerm> terms;  // weights sum to 1, masters unconstrained
};

struct VertexPatch {
  NodeId center = -1;
  std::vector<ElemId> elements;
  Vec2 origin{0.0, 0.0};  // centroid of member element centroids
  double scale = 1.0;     // max half-extent over member nodes
};

struct RefineResult;

class QuadMesh {
 public:
  QuadMesh() = default;

  [[nodiscard]] const DomainSpec& domain() const { return domain_; }
  [[nodiscard]] ElementOrder order() const { return order_; }
  [[nodiscard]] int divisions() const { return divisions_; }

  [[nodiscard]] int node_count() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] int element_count() const { return static_cast<int>(elements_.size()); }
  [[nodiscard]] const Vec2& node(NodeId n) const { return nodes_[static_cast<std::size_t>(n)]; }
  [[nodiscard]] const std::vector<Vec2>& nodes() const { return nodes_; }
  [[nodiscard]] const Element& element(ElemId e) const {
    return elements_[static_cast<std::size_t>(e)];
  }
  [[nodiscard]] const std::vector<Element>& elements() const { return elements_; }
  [[nodiscard]] const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

  // Hanging-node constraints of the finite element interpolation (order-aware).
  [[nodiscard]] const std::vector<NodeConstraint>& constraints() const { return constraints_; }
  // Constraints of the bilinear (corner-node) version of the mesh; used by the
  // recovery blend. Identical to constraints() for q4 meshes.
  [[nodiscard]] const std::vector<NodeConstraint>& linear_constraints() const {
    return linear_constraints_;
  }
  [[nodiscard]] bool is_hanging(NodeId n) const;
  [[nodiscard]] bool is_corner_node(NodeId n) const {
    return !corner_incidence_[static_cast<std::size_t>(n)].empty();
  }
  [[nodiscard]] const NodeConstraint* linear_constraint_of(NodeId n) const;

  // Elements incident to a vertex (corner) node; for a hanging vertex this
  // includes the coarse element hosting it on an edge. Throws for nodes that
  // are not corners of any element (q8 midside nodes).
  [[nodiscard]] VertexPatch vertex_patch(NodeId n) const;

  // Geometry of one element at a local point.
  struct MappedPoint {
    Vec2 x;
    Mat2 jacobian;      // dx/dxi
    double det = 0.0;
  };
  [[nodiscard]] MappedPoint map_point(ElemId e, const Vec2& xi) const;

  struct EdgePoint {
    Vec2 x;
    Vec2 normal;        // outward unit normal
    double jacobian;    // |dx/ds| for the CCW edge parameter s in [-1,1]
  };
  [[nodiscard]] EdgePoint map_edge_point(ElemId e, int side, double s) const;

  // Straight (affine) geometry test for one element edge.
  [[nodiscard]] bool edge_is_straight(ElemId e, int side) const;

  [[nodiscard]] double characteristic_size() const;

  // Serializable generative state: every forest cell with its refined flag,
  // sorted by packed key. With the domain, order, and divisions this rebuilds
  // the mesh exactly, element and node numbering included.
  [[nodiscard]] std::vector<std::pair<std::uint64_t, bool>> forest_cells() const;

  friend QuadMesh build_structured_mesh(const DomainSpec&, int divisions, ElementOrder);
  friend RefineResult refine_elements(const QuadMesh&, const std::vector<ElemId>& marked);
  friend QuadMesh restore_mesh(const DomainSpec&, ElementOrder, int divisions,
                               const std::vector<std::pair<std::uint64_t, bool>>& forest);

 private:
  void generate();

  DomainSpec domain_;
  ElementOrder order_ = ElementOrder::q4;
  int divisions_ = 1;

  // forest: packed cell key -> refined flag; leaves are the elements
  std::unordered_map<std::uint64_t, bool> forest_;

  std::vector<Vec2> nodes_;
  std::vector<Element> elements_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<NodeConstraint> constraints_;
  std::vector<NodeConstraint> linear_constraints_;
  std::vector<int> linear_constraint_index_;       // node -> index or -1
  std::vector<int> constraint_index_;              // node -> index or -1
  std::vector<std::vector<ElemId>> corner_incidence_;
  std::vector<ElemId> hanging_host_;               // node -> coarse element or -1
};

struct RefineResult {
  QuadMesh mesh;
  std::vector<ElemId> skipped;  // marked elements already at the level cap
};

QuadMesh build_structured_mesh(const DomainSpec& domain, int divisions, ElementOrder order);
RefineResult refine_elements(const QuadMesh& mesh, const std::vector<ElemId>& marked);
QuadMesh restore_mesh(const DomainSpec& domain, ElementOrder order, int divisions,
                      const std::vector<std::pair<std::uint64_t, bool>>& forest);

}  // namespace recfem

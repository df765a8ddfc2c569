#pragma once

#include <array>

#include "recfem/types.hpp"

namespace recfem {

// Shape function values and parent-space derivatives at one local point.
// Local node order: corners CCW (-1,-1),(1,-1),(1,1),(-1,1), then for q8 the
// edge midside nodes (bottom, right, top, left).
struct ShapeEval {
  std::array<double, 8> n{};
  std::array<Vec2, 8> dn{};
  int count = 0;
};

ShapeEval shape_values(ElementOrder order, const Vec2& xi);

// The four bilinear vertex functions (the linear version of the element),
// used as the partition-of-unity weights of the recovery blend.
ShapeEval vertex_shape_values(const Vec2& xi);

// Local corner coordinates in the parent square.
inline Vec2 corner_xi(int c) {
  static const std::array<Vec2, 4> k = {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
  return k[static_cast<std::size_t>(c)];
}

// Local edge e covers corner e -> corner (e+1)%4; q8 midside node is 4+e.
inline std::array<int, 2> edge_corners(int e) { return {e, (e + 1) % 4}; }

// Local coordinate of a point on edge e at 1D parameter s in [-1,1] traversed CCW.
Vec2 edge_point_xi(int e, double s);

}  // namespace recfem

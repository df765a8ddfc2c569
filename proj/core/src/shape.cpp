#include "recfem/shape.hpp"

namespace recfem {

ShapeEval vertex_shape_values(const Vec2& xi) {
  ShapeEval s;
  s.count = 4;
  const double x = xi[0], y = xi[1];
  for (int c = 0; c < 4; ++c) {
    const Vec2 k = corner_xi(c);
    s.n[c] = 0.25 * (1.0 + k[0] * x) * (1.0 + k[1] * y);
    s.dn[c] = Vec2(0.25 * k[0] * (1.0 + k[1] * y), 0.25 * k[1] * (1.0 + k[0] * x));
  }
  return s;
}

ShapeEval shape_values(ElementOrder order, const Vec2& xi) {
  if (order == ElementOrder::q4) return vertex_shape_values(xi);

  ShapeEval s;
  s.count = 8;
  const double x = xi[0], y = xi[1];
  for (int c = 0; c < 4; ++c) {
    const Vec2 k = corner_xi(c);
    const double xp = 1.0 + k[0] * x;
    const double yp = 1.0 + k[1] * y;
    s.n[c] = 0.25 * xp * yp * (k[0] * x + k[1] * y - 1.0);
    s.dn[c] = Vec2(0.25 * k[0] * yp * (2.0 * k[0] * x + k[1] * y),
                   0.25 * k[1] * xp * (k[0] * x + 2.0 * k[1] * y));
  }
  // midside nodes: 4 bottom (0,-1), 5 right (1,0), 6 top (0,1), 7 left (-1,0)
  s.n[4] = 0.5 * (1.0 - x * x) * (1.0 - y);
  s.dn[4] = Vec2(-x * (1.0 - y), -0.5 * (1.0 - x * x));
  s.n[5] = 0.5 * (1.0 + x) * (1.0 - y * y);
  s.dn[5] = Vec2(0.5 * (1.0 - y * y), -y * (1.0 + x));
  s.n[6] = 0.5 * (1.0 - x * x) * (1.0 + y);
  s.dn[6] = Vec2(-x * (1.0 + y), 0.5 * (1.0 - x * x));
  s.n[7] = 0.5 * (1.0 - x) * (1.0 - y * y);
  s.dn[7] = Vec2(-0.5 * (1.0 - y * y), -y * (1.0 - x));
  return s;
}

Vec2 edge_point_xi(int e, double s) {
  switch (e) {
    case 0: return Vec2(s, -1.0);
    case 1: return Vec2(1.0, s);
    case 2: return Vec2(-s, 1.0);
    case 3: return Vec2(-1.0, -s);
    default: throw std::invalid_argument("edge_point_xi: bad edge index");
  }
}

}  // namespace recfem

#include "recfem/domain.hpp"

#include <cmath>

namespace recfem {

Vec2 MacroPatch::map(double u, double v) const {
  if (!polar) return origin + scale * Vec2(u, v);
  const double r = r0 + (r1 - r0) * u;
  const double t = t0 + (t1 - t0) * v;
  return Vec2(r * std::cos(t), r * std::sin(t));
}

DomainSpec DomainSpec::square2x2() {
  DomainSpec d;
  d.kind = Kind::square2x2;
  MacroPatch p;
  p.origin = Vec2(0.0, 0.0);
  p.scale = 2.0;
  d.patches.push_back(p);
  return d;
}

DomainSpec DomainSpec::annulus_quarter(double inner_radius, double outer_radius) {
  if (!(inner_radius > 0.0) || !(outer_radius > inner_radius))
    throw std::invalid_argument("annulus_quarter: need 0 < inner < outer");
  DomainSpec d;
  d.kind = Kind::annulus_quarter;
  d.inner = inner_radius;
  d.outer = outer_radius;
  MacroPatch p;
  p.polar = true;
  p.r0 = inner_radius;
  p.r1 = outer_radius;
  p.t0 = 0.0;
  p.t1 = M_PI / 2.0;
  // south: theta = 0 cut on the x axis; north: theta = pi/2 cut on the y axis
  p.side_tag = {EdgeTag::symmetry_y, EdgeTag::neumann, EdgeTag::symmetry_x, EdgeTag::neumann};
  d.patches.push_back(p);
  return d;
}

DomainSpec DomainSpec::lshape() {
  DomainSpec d;
  d.kind = Kind::lshape;
  // quadrant squares: P0 = [0,1]^2, P1 = [-1,0]x[0,1], P2 = [-1,0]x[-1,0];
  // the reentrant corner is the origin, notch faces on theta = 0 and 3pi/2.
  MacroPatch p0, p1, p2;
  p0.origin = Vec2(0.0, 0.0);
  p1.origin = Vec2(-1.0, 0.0);
  p2.origin = Vec2(-1.0, -1.0);
  p0.neighbor = {-1, -1, -1, 1};
  p1.neighbor = {2, 0, -1, -1};
  p2.neighbor = {-1, -1, 1, -1};
  d.patches = {p0, p1, p2};
  return d;
}

std::string DomainSpec::kind_name() const {
  switch (kind) {
    case Kind::square2x2: return "square2x2";
    case Kind::annulus_quarter: return "annulus_quarter";
    case Kind::lshape: return "lshape";
  }
  return "unknown";
}

}  // namespace recfem

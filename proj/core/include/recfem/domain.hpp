#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "recfem/types.hpp"

namespace recfem {

// A mesh domain is a union of axis-aligned unit parameter patches, each
// carrying its own map from (u,v) in [0,1]^2 to physical space. Sides are
// indexed 0 south (v=0), 1 east (u=1), 2 north (v=1), 3 west (u=0).
struct MacroPatch {
  bool polar = false;
  // affine: phys = origin + scale * (u, v)
  Vec2 origin{0.0, 0.0};
  double scale = 1.0;
  // polar: r = r0 + (r1 - r0) u, theta = t0 + (t1 - t0) v, phys = r (cos, sin)
  double r0 = 0.0, r1 = 0.0, t0 = 0.0, t1 = 0.0;

  std::array<EdgeTag, 4> side_tag{EdgeTag::neumann, EdgeTag::neumann, EdgeTag::neumann,
                                  EdgeTag::neumann};
  std::array<int, 4> neighbor{-1, -1, -1, -1};  // patch index across each side, -1 = boundary

  [[nodiscard]] Vec2 map(double u, double v) const;
};

struct DomainSpec {
  enum class Kind { square2x2, annulus_quarter, lshape };

  Kind kind = Kind::square2x2;
  double inner = 0.0, outer = 0.0;  // annulus radii
  std::vector<MacroPatch> patches;

  static DomainSpec square2x2();
  static DomainSpec annulus_quarter(double inner_radius, double outer_radius);
  static DomainSpec lshape();

  [[nodiscard]] std::string kind_name() const;
};

}  // namespace recfem

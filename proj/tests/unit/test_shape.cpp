#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "recfem/shape.hpp"

using namespace recfem;

namespace {

std::vector<Vec2> sample_points() {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 20; ++i) pts.emplace_back(d(rng), d(rng));
  return pts;
}

Vec2 local_node_xi(ElementOrder order, int i) {
  if (i < 4) return corner_xi(i);
  REQUIRE(order == ElementOrder::q8);
  return edge_point_xi(i - 4, 0.0);
}

}  // namespace

TEST_CASE("partition of unity and zero gradient sum") {
  for (ElementOrder order : {ElementOrder::q4, ElementOrder::q8})
    for (const Vec2& xi : sample_points()) {
      const ShapeEval s = shape_values(order, xi);
      REQUIRE(s.count == nodes_per_element(order));
      double sum = 0.0;
      Vec2 gsum(0.0, 0.0);
      for (int i = 0; i < s.count; ++i) {
        sum += s.n[static_cast<std::size_t>(i)];
        gsum += s.dn[static_cast<std::size_t>(i)];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(gsum.norm() == doctest::Approx(0.0).epsilon(1e-13));
    }
}

TEST_CASE("kronecker delta at nodes") {
  for (ElementOrder order : {ElementOrder::q4, ElementOrder::q8}) {
    const int nn = nodes_per_element(order);
    for (int a = 0; a < nn; ++a) {
      const ShapeEval s = shape_values(order, local_node_xi(order, a));
      for (int i = 0; i < nn; ++i)
        CHECK(s.n[static_cast<std::size_t>(i)] ==
              doctest::Approx(i == a ? 1.0 : 0.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("gradients match finite differences") {
  const double h = 1e-6;
  for (ElementOrder order : {ElementOrder::q4, ElementOrder::q8})
    for (const Vec2& xi : sample_points())
      for (int axis = 0; axis < 2; ++axis) {
        Vec2 dp = xi, dm = xi;
        dp[axis] += h;
        dm[axis] -= h;
        const ShapeEval sp = shape_values(order, dp);
        const ShapeEval sm = shape_values(order, dm);
        const ShapeEval s = shape_values(order, xi);
        for (int i = 0; i < s.count; ++i) {
          const double fd =
              (sp.n[static_cast<std::size_t>(i)] - sm.n[static_cast<std::size_t>(i)]) / (2 * h);
          CHECK(s.dn[static_cast<std::size_t>(i)][axis] == doctest::Approx(fd).epsilon(1e-7));
        }
      }
}

TEST_CASE("polynomial reproduction through nodal interpolation") {
  auto reproduce = [](ElementOrder order, auto f) {
    const int nn = nodes_per_element(order);
    for (const Vec2& xi : sample_points()) {
      const ShapeEval s = shape_values(order, xi);
      double v = 0.0;
      for (int i = 0; i < nn; ++i)
        v += s.n[static_cast<std::size_t>(i)] * f(local_node_xi(order, i));
      CHECK(v == doctest::Approx(f(xi)).epsilon(1e-13));
    }
  };
  // bilinear space
  for (ElementOrder order : {ElementOrder::q4, ElementOrder::q8}) {
    reproduce(order, [](const Vec2&) { return 1.0; });
    reproduce(order, [](const Vec2& p) { return 2 * p[0] - 3 * p[1]; });
    reproduce(order, [](const Vec2& p) { return p[0] * p[1]; });
  }
  // full serendipity space
  reproduce(ElementOrder::q8, [](const Vec2& p) { return p[0] * p[0] - 0.5 * p[1] * p[1]; });
  reproduce(ElementOrder::q8, [](const Vec2& p) { return p[0] * p[0] * p[1]; });
  reproduce(ElementOrder::q8, [](const Vec2& p) { return p[0] * p[1] * p[1]; });
}

TEST_CASE("vertex shape functions are the bilinear ones") {
  for (const Vec2& xi : sample_points()) {
    const ShapeEval a = vertex_shape_values(xi);
    const ShapeEval b = shape_values(ElementOrder::q4, xi);
    REQUIRE(a.count == 4);
    for (int i = 0; i < 4; ++i)
      CHECK(a.n[static_cast<std::size_t>(i)] ==
            doctest::Approx(b.n[static_cast<std::size_t>(i)]).epsilon(1e-15));
  }
}

TEST_CASE("edge parametrization endpoints and midpoints") {
  for (int e = 0; e < 4; ++e) {
    CHECK((edge_point_xi(e, -1.0) - corner_xi(edge_corners(e)[0])).norm() ==
          doctest::Approx(0.0).epsilon(1e-15));
    CHECK((edge_point_xi(e, 1.0) - corner_xi(edge_corners(e)[1])).norm() ==
          doctest::Approx(0.0).epsilon(1e-15));
    // midside node of a q8 element sits at the edge midpoint
    const Vec2 mid = edge_point_xi(e, 0.0);
    const Vec2 avg = 0.5 * (corner_xi(edge_corners(e)[0]) + corner_xi(edge_corners(e)[1]));
    CHECK((mid - avg).norm() == doctest::Approx(0.0).epsilon(1e-15));
  }
}

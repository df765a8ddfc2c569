#include <cmath>
#include <numbers>

#include "doctest.h"
#include "recfem/analytic.hpp"

using namespace recfem;

TEST_CASE("benchmark data sets are self consistent") {
  for (const std::string& name : benchmark_names()) {
    CAPTURE(name);
    const Benchmark b = benchmark_by_name(name);
    const ConsistencyReport rep = verify_consistency(b);
    CAPTURE(rep.max_constitutive);
    CAPTURE(rep.max_equilibrium);
    CAPTURE(rep.max_traction);
    CAPTURE(rep.max_symmetry_displacement);
    CAPTURE(rep.max_symmetry_traction);
    CHECK(rep.pass);
    CHECK(rep.interior_samples == 200);
  }
}

TEST_CASE("consistency check flags a wrong constitutive state") {
  Benchmark b = benchmark_by_name("square4");
  b.material.state = PlaneState::stress;  // fields were built for plane strain
  const ConsistencyReport rep = verify_consistency(b);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_constitutive > 1e-2);
}

TEST_CASE("pipe matches frozen thick-wall values") {
  const Benchmark b = benchmark_by_name("pipe");
  // radial displacement on the outer rim
  const Vec2 u = b.exact.displacement({20.0, 0.0});
  CHECK(u[0] == doctest::Approx(36.4 / 15000.0).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(0.0).epsilon(1e-15));
  // bore carries the full pressure, rim is free
  const Vec3 sa = b.exact.stress({5.0, 0.0});
  CHECK(sa[0] == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(sa[1] == doctest::Approx(17.0 / 15.0).epsilon(1e-13));
  CHECK(sa[2] == doctest::Approx(0.0).epsilon(1e-15));
  const Vec3 sb = b.exact.stress({0.0, 20.0});
  CHECK(sb[1] == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(sb[0] == doctest::Approx(2.0 / 15.0).epsilon(1e-13));
  // hoop stress dominates and decays outward
  CHECK(b.exact.stress({10.0, 0.0})[1] < 17.0 / 15.0);
}

TEST_CASE("corner exponent satisfies the characteristic equation") {
  const double lam = 0.544483736782464;
  const double w = 1.5 * std::numbers::pi;  // notch opening angle
  CHECK(std::abs(std::sin(lam * w) + lam * std::sin(w)) < 1e-14);
}

TEST_CASE("lshape notch faces are traction free") {
  const Benchmark b = benchmark_by_name("lshape");
  double scale = 0.0, worst = 0.0;
  for (double t : {0.1, 0.35, 0.6, 0.97}) {
    const Vec3 s1 = b.exact.stress({t, 0.0});   // face along +x, normal (0,-1)
    const Vec3 s2 = b.exact.stress({0.0, -t});  // face along -y, normal (1,0)
    scale = std::max({scale, s1.cwiseAbs().maxCoeff(), s2.cwiseAbs().maxCoeff()});
    worst = std::max({worst, std::abs(s1[1]), std::abs(s1[2]), std::abs(s2[0]), std::abs(s2[2])});
  }
  CHECK(worst <= 1e-12 * scale);
}

TEST_CASE("lshape displacement vanishes at the corner and pins are consistent") {
  const Benchmark b = benchmark_by_name("lshape");
  CHECK(b.exact.displacement({0.0, 0.0}).norm() == doctest::Approx(0.0));
  REQUIRE(b.load.pins.size() == 2);
  for (const PointPin& pin : b.load.pins) {
    const Vec2 u = b.exact.displacement(pin.where);
    if (pin.fix_x) CHECK(pin.value[0] == doctest::Approx(u[0]).epsilon(1e-14));
    if (pin.fix_y) CHECK(pin.value[1] == doctest::Approx(u[1]).epsilon(1e-14));
  }
}

TEST_CASE("square pins hold exactly zero displacement") {
  const Benchmark b = benchmark_by_name("square4");
  CHECK(b.exact.displacement({0.0, 0.0}).norm() == doctest::Approx(0.0));
  CHECK(b.exact.displacement({2.0, 0.0})[1] == doctest::Approx(0.0));
}

TEST_CASE("exact field adapter evaluates through the element map") {
  const Benchmark b = benchmark_by_name("pipe");
  const QuadMesh m = build_structured_mesh(b.domain, 3, ElementOrder::q8);
  const ExactFieldAdapter f(m, b.exact);
  const Vec2 xi(-0.3, 0.62);
  const Vec2 x = m.map_point(4, xi).x;
  CHECK((f.value(4, xi) - b.exact.displacement(x)).norm() == doctest::Approx(0.0));
  CHECK((f.stress(4, xi) - b.exact.stress(x)).norm() == doctest::Approx(0.0));
}

TEST_CASE("unknown benchmark names are rejected") {
  CHECK_THROWS_AS(benchmark_by_name("cube"), std::invalid_argument);
}

#include <stdexcept>

#include "doctest.h"
#include "recfem/material.hpp"

using namespace recfem;

TEST_CASE("plane strain matrix at E=1000 nu=0.3") {
  const Mat3 d = elasticity_matrix({1000.0, 0.3, PlaneState::strain});
  const double c = 1000.0 / (1.3 * 0.4);
  CHECK(d(0, 0) == doctest::Approx(c * 0.7).epsilon(1e-14));
  CHECK(d(1, 1) == doctest::Approx(c * 0.7).epsilon(1e-14));
  CHECK(d(0, 1) == doctest::Approx(c * 0.3).epsilon(1e-14));
  CHECK(d(2, 2) == doctest::Approx(c * 0.2).epsilon(1e-14));
  CHECK(d(0, 2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d(1, 2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK((d - d.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-14));
  // shear entry is the shear modulus
  CHECK(d(2, 2) == doctest::Approx(1000.0 / (2.0 * 1.3)).epsilon(1e-14));
}

TEST_CASE("plane stress matrix at E=1000 nu=0.3") {
  const Mat3 d = elasticity_matrix({1000.0, 0.3, PlaneState::stress});
  const double c = 1000.0 / (1.0 - 0.09);
  CHECK(d(0, 0) == doctest::Approx(c).epsilon(1e-14));
  CHECK(d(0, 1) == doctest::Approx(c * 0.3).epsilon(1e-14));
  CHECK(d(2, 2) == doctest::Approx(c * 0.35).epsilon(1e-14));
  CHECK(d(2, 2) == doctest::Approx(1000.0 / (2.0 * 1.3)).epsilon(1e-14));
}

TEST_CASE("compliance inverts the elasticity matrix") {
  for (PlaneState st : {PlaneState::strain, PlaneState::stress}) {
    const Material m{210.0, 0.29, st};
    const Mat3 prod = compliance_matrix(m) * elasticity_matrix(m);
    CHECK((prod - Mat3::Identity()).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("material parameters are validated") {
  CHECK_THROWS_AS(elasticity_matrix({0.0, 0.3, PlaneState::strain}), std::invalid_argument);
  CHECK_THROWS_AS(elasticity_matrix({-5.0, 0.3, PlaneState::strain}), std::invalid_argument);
  CHECK_THROWS_AS(elasticity_matrix({100.0, 0.5, PlaneState::strain}), std::invalid_argument);
  CHECK_THROWS_AS(elasticity_matrix({100.0, -0.1, PlaneState::stress}), std::invalid_argument);
}

#include <algorithm>

#include "helpers.hpp"

using namespace sflow;

TEST_SUITE("field") {

TEST_CASE("classify a diagonal sink") {
  VectorFieldModel m = make_model("linear_sink", {});
  SingularityClass cls = classify_singularity(m, Vec::Zero(2));
  REQUIRE(cls.eigenvalues.size() == 2);
  CHECK(cls.eigenvalues[0].real() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(cls.eigenvalues[1].real() == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(cls.hyperbolic);
  CHECK(cls.sectionally_dissipative);  // -1 + -2 < 0
  CHECK(cls.max_real_part == doctest::Approx(-1.0));
}

TEST_CASE("classify the center direction model") {
  VectorFieldModel m = make_model("center_linear", {});
  SingularityClass cls = classify_singularity(m, Vec::Zero(3));
  CHECK(!cls.hyperbolic);
  // pair sums: 0-1, 0-2, -3 -- all negative
  CHECK(cls.sectionally_dissipative);
}

TEST_CASE("classify the Lorenz origin against the closed-form eigenvalues") {
  VectorFieldModel m = make_model("lorenz", {});
  SingularityClass cls = classify_singularity(m, Vec::Zero(3));
  // Roots of x^2 + 11x - 10*27 = 0 and the decoupled -8/3.
  const double lu = (-11.0 + std::sqrt(11.0 * 11.0 + 4 * 10 * 27.0)) / 2;
  CHECK(lu == doctest::Approx(11.827723451163457).epsilon(1e-14));
  CHECK(cls.eigenvalues[0].real() == doctest::Approx(11.827723451163457).epsilon(1e-12));
  CHECK(cls.eigenvalues[1].real() == doctest::Approx(-8.0 / 3.0).epsilon(1e-12));
  CHECK(cls.eigenvalues[2].real() == doctest::Approx(-22.827723451163457).epsilon(1e-12));
  CHECK(cls.hyperbolic);
  // lambda_u + lambda_z = 11.83 - 2.67 > 0: not sectionally dissipative.
  CHECK(!cls.sectionally_dissipative);
}

TEST_CASE("classify refuses a regular point") {
  VectorFieldModel m = make_model("hopf", {{"mu", 0.5}});
  Vec x(2);
  x << 0.3, 0.1;
  CHECK_THROWS_CODE(not_a_singularity, classify_singularity(m, x));
}

TEST_CASE("hopf jacobian matches finite differences") {
  VectorFieldModel m = make_model("hopf", {{"mu", 0.5}});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Vec x(2);
    x << u(rng), u(rng);
    Mat J = m.jacobian(x);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      Vec col = (m(xp) - m(xm)) / (2 * h);
      CHECK((col - J.col(i)).norm() <= 1e-6 * (1 + J.col(i).norm()));
    }
  }
}

TEST_CASE("lorenz nonzero singularities are zeros of the field") {
  VectorFieldModel m = make_model("lorenz", {});
  REQUIRE(m.singularities.size() == 3);
  for (const Vec& s : m.singularities) CHECK(m(s).norm() <= 1e-12);
}

TEST_CASE("block model keeps its F-axis invariant") {
  VectorFieldModel m = make_model("model_ode", {{"aF", 0.3}});
  for (double s : {-0.5, -0.1, 0.2, 1.0}) {
    Vec x = Vec::Zero(3);
    x[2] = s;
    Vec X = m(x);
    CHECK(X[0] == 0.0);
    CHECK(X[1] == 0.0);
    CHECK(X[2] == doctest::Approx(0.3 * s + s * s).epsilon(1e-14));
  }
}

TEST_CASE("model registry") {
  auto names = builtin_model_names();
  for (const char* need : {"linear_sink", "center_linear", "radial", "rotation", "hopf",
                           "shrinking_hopf", "lorenz", "model_ode"})
    CHECK(std::find(names.begin(), names.end(), need) != names.end());

  CHECK_THROWS_CODE(config_error, make_model("no_such_model", {}));
  CHECK_THROWS_CODE(config_error, make_model("hopf", {{"nu", 1.0}}));
}

TEST_CASE("shrinking hopf cycle rates") {
  // The planar limit cycle at radius sqrt(mu) with a -kappa vertical rate.
  VectorFieldModel m = make_model("shrinking_hopf", {{"mu", 0.25}, {"kappa", 0.7}});
  Vec x(3);
  x << 0.5, 0, 0;  // on the cycle
  Vec X = m(x);
  CHECK(X[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(X[1] == doctest::Approx(0.5));  // angular speed 1
  CHECK(X[2] == 0.0);
}

}  // TEST_SUITE

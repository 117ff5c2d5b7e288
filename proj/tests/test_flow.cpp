#include "helpers.hpp"

using namespace sflow;

TEST_SUITE("flow") {

TEST_CASE("diagonal linear flow is exact") {
  VectorFieldModel m = make_model("linear_sink", {});
  Vec x0(2);
  x0 << 1.0, -0.5;
  FlowTangent ft = flow_with_tangent(m, x0, 1.0);
  const double e1 = 0.367879441171442334;  // exp(-1)
  CHECK(ft.traj.back()[0] == doctest::Approx(1.0 * e1).epsilon(1e-9));
  CHECK(ft.traj.back()[1] == doctest::Approx(-0.5 * e1 * e1).epsilon(1e-9));
  CHECK(ft.Phi(0, 0) == doctest::Approx(e1).epsilon(1e-9));
  CHECK(ft.Phi(1, 1) == doctest::Approx(e1 * e1).epsilon(1e-9));
  CHECK(std::abs(ft.Phi(0, 1)) + std::abs(ft.Phi(1, 0)) < 1e-10);
}

TEST_CASE("dense output agrees with direct integration") {
  VectorFieldModel m = make_model("hopf", {{"mu", 0.5}});
  Vec x0(2);
  x0 << 0.3, 0.0;
  TrajectorySegment seg = integrate(m, x0, 5.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int k = 0; k < 12; ++k) {
    double s = u(rng);
    Vec direct = integrate(m, x0, s).back();
    CHECK((seg.at(s) - direct).norm() <= 1e-7 * (1 + direct.norm()));
  }
}

TEST_CASE("backward then forward flow returns home") {
  VectorFieldModel m = make_model("hopf", {{"mu", 0.5}});
  Vec x0(2);
  x0 << 0.9, -0.2;
  Vec y = integrate(m, x0, 2.3).back();
  Vec xr = integrate(m, y, -2.3).back();
  CHECK((xr - x0).norm() <= 1e-8 * (1 + x0.norm()));
}

TEST_CASE("tangent flow at a singularity is the matrix exponential") {
  VectorFieldModel m = make_model("center_linear", {});
  FlowTangent ft = flow_with_tangent(m, Vec::Zero(3), 1.0);
  const double e1 = 0.367879441171442334;
  CHECK(ft.Phi(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ft.Phi(1, 1) == doctest::Approx(e1).epsilon(1e-12));
  CHECK(ft.Phi(2, 2) == doctest::Approx(e1 * e1).epsilon(1e-12));

  VectorFieldModel rot = make_model("rotation", {});
  FlowTangent fr = flow_with_tangent(rot, Vec::Zero(2), 2 * M_PI);
  CHECK((fr.Phi - Mat::Identity(2, 2)).norm() <= 1e-10);
}

TEST_CASE("variational solution matches finite differences of the flow") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (const char* name : {"hopf", "lorenz"}) {
    VectorFieldModel m = make_model(name, {});
    for (int k = 0; k < 10; ++k) {
      Vec x(m.dim);
      for (int i = 0; i < m.dim; ++i) x[i] = u(rng);
      if (std::string(name) == "lorenz") x = 5 * x + m.singularities[1];
      double t = 0.4 + 0.2 * k / 10.0;
      FlowTangent ft = flow_with_tangent(m, x, t);
      Mat fd = testutil::fd_flow_jacobian(m, x, t);
      CHECK(op_norm(ft.Phi - fd) <= 1e-3 * std::max(1.0, op_norm(ft.Phi)));
    }
  }
}

TEST_CASE("sphere flow stays on the sphere") {
  VectorFieldModel m = make_model("linear_sink", {});
  std::mt19937_64 rng(3);
  for (int k = 0; k < 8; ++k) {
    Vec u = testutil::random_unit(rng, 2);
    Vec ut = sphere_flow(m, Vec::Zero(2), u, 1.7);
    CHECK(ut.norm() == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK_THROWS_CODE(zero_vector, sphere_flow(m, Vec::Zero(2), Vec::Zero(2), 1.0));
}

TEST_CASE("frame flow: sharp variant keeps the pair orthogonal") {
  VectorFieldModel m = make_model("lorenz", {});
  std::mt19937_64 rng(5);
  for (int k = 0; k < 8; ++k) {
    Vec u = testutil::random_unit(rng, 3);
    Vec v = testutil::random_unit(rng, 3);
    v -= u * u.dot(v);
    if (v.norm() < 1e-3) continue;
    v.normalize();
    FramePair fp = frame_flow(m, Vec::Zero(3), {u, v}, 0.8, true);
    CHECK(std::abs(fp.u.dot(fp.v)) <= 1e-10 * fp.u.norm() * fp.v.norm());
  }

  Vec off(3);
  off << 1, 1, 1;
  CHECK_THROWS_CODE(not_a_singularity,
                    frame_flow(m, off, {Vec::Unit(3, 0), Vec::Unit(3, 1)}, 1.0, true));
}

TEST_CASE("sphere-flow derivative equals the projected frame image over |Phi u|") {
  // d/ds of u -> Phi_t(u+sv)/|Phi_t(u+sv)| at s=0, for v tangent to the
  // sphere at u, is the second sharp-frame component divided by |Phi_t u|.
  VectorFieldModel m = make_model("linear_sink", {});
  std::mt19937_64 rng(17);
  for (int k = 0; k < 10; ++k) {
    Vec u = testutil::random_unit(rng, 2);
    Vec v(2);
    v << -u[1], u[0];  // tangent direction
    double t = 0.3 + 0.15 * k;

    const double h = 1e-6;
    Vec up = (u + h * v).normalized(), um = (u - h * v).normalized();
    Vec fd = (sphere_flow(m, Vec::Zero(2), up, t) - sphere_flow(m, Vec::Zero(2), um, t)) / (2 * h);

    FlowTangent ft = flow_with_tangent(m, Vec::Zero(2), t);
    FramePair fp = frame_flow(m, Vec::Zero(2), {u, v}, t, true);
    Vec pred = fp.v / (ft.Phi * u).norm();
    CHECK((fd - pred).norm() <= 1e-3 * std::max(1.0, pred.norm()));
  }
}

TEST_CASE("domination ratio on the center model decays like exp(-t)") {
  VectorFieldModel m = make_model("center_linear", {});
  std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
  std::vector<double> r = domination_ratio(m, Vec::Zero(3), Vec::Unit(3, 0), grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(r[i] == doctest::Approx(std::exp(-grid[i])).epsilon(1e-8));
}

}  // TEST_SUITE

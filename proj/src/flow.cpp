#include "sflow/flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace sflow {

namespace {

bool at_singularity(const VectorFieldModel& model, const Vec& x) {
  return model.eval(x).norm() <= 1e-12 * (1.0 + x.norm());
}

TrajectorySegment segment_from(const OdeResult& r, Tol tol, double t, int dim) {
  TrajectorySegment seg;
  seg.t_final = t;
  seg.dim = dim;
  seg.tol = tol;
  seg.err_estimate = r.err_estimate;
  auto dense = std::make_shared<DenseOutput>(r.dense);
  seg.dense = dense;
  seg.times = r.dense.knots();
  if (seg.times.empty()) seg.times = {0.0};
  seg.points.reserve(seg.times.size());
  for (double s : seg.times) seg.points.push_back(dense->eval(s).head(dim));
  return seg;
}

}  // namespace

TrajectorySegment integrate(const VectorFieldModel& model, const Vec& x0, double t,
                            Tol tol) {
  if (x0.size() != model.dim) fail(errc::bad_parameters, "state dimension mismatch");
  OdeRhs rhs = [&model](const Vec& y, Vec& dy) { dy = model.eval(y); };
  OdeResult r = integrate_ode(rhs, x0, t, tol);
  return segment_from(r, tol, t, model.dim);
}

FlowTangent flow_with_tangent(const VectorFieldModel& model, const Vec& x0, double t,
                              Tol tol) {
  if (x0.size() != model.dim) fail(errc::bad_parameters, "state dimension mismatch");
  const int d = model.dim;

  if (at_singularity(model, x0)) {
    // The orbit is constant; the tangent flow is a plain matrix exponential.
    FlowTangent out;
    out.Phi = (t * model.jacobian(x0)).exp();
    TrajectorySegment seg;
    seg.t_final = t;
    seg.dim = d;
    seg.tol = tol;
    seg.times = {0.0, t};
    if (t == 0.0) seg.times = {0.0};
    seg.points.assign(seg.times.size(), x0);
    OdeRhs rhs = [&model](const Vec& y, Vec& dy) { dy = model.eval(y); };
    OdeResult r = integrate_ode(rhs, x0, 0.0, tol);
    seg.dense = std::make_shared<DenseOutput>(r.dense);
    out.traj = std::move(seg);
    return out;
  }

  // Variational equation: x' = X(x), Phi' = DX(x) Phi, Phi(0) = I, packed
  // column-major after the base state.
  Vec y0(d + d * d);
  y0.head(d) = x0;
  Eigen::Map<Mat>(y0.data() + d, d, d) = Mat::Identity(d, d);
  OdeRhs rhs = [&model, d](const Vec& y, Vec& dy) {
    dy.resize(y.size());
    Vec x = y.head(d);
    dy.head(d) = model.eval(x);
    Eigen::Map<const Mat> Phi(y.data() + d, d, d);
    Eigen::Map<Mat>(dy.data() + d, d, d) = model.jacobian(x) * Phi;
  };
  OdeResult r = integrate_ode(rhs, y0, t, tol);

  FlowTangent out;
  out.Phi = Eigen::Map<const Mat>(r.y.data() + d, d, d);
  out.traj = segment_from(r, tol, t, d);
  out.joint_dense = out.traj.dense;
  return out;
}

Mat tangent_flow(const VectorFieldModel& model, const Vec& x0, double t, Tol tol) {
  return flow_with_tangent(model, x0, t, tol).Phi;
}

Vec sphere_flow(const VectorFieldModel& model, const Vec& x0, const Vec& u, double t,
                Tol tol) {
  if (u.size() != model.dim) fail(errc::bad_parameters, "vector dimension mismatch");
  if (u.norm() <= 1e-300) fail(errc::zero_vector, "sphere flow of the zero vector");
  Vec w = tangent_flow(model, x0, t, tol) * u;
  double n = w.norm();
  if (n <= 1e-300) fail(errc::degenerate_vector, "tangent image collapsed to zero");
  return w / n;
}

FramePair frame_flow(const VectorFieldModel& model, const Vec& sigma, const FramePair& p,
                     double t, bool sharp) {
  if (!at_singularity(model, sigma))
    fail(errc::not_a_singularity, "frame flow is defined at singularities");
  if (p.u.size() != model.dim || p.v.size() != model.dim)
    fail(errc::bad_parameters, "frame dimension mismatch");
  if (p.u.norm() <= 1e-300) fail(errc::zero_vector, "first frame component is zero");

  Mat Phi = (t * model.jacobian(sigma)).exp();
  FramePair out;
  out.u = Phi * p.u;
  out.v = Phi * p.v;
  if (sharp) {
    double n2 = out.u.squaredNorm();
    if (n2 <= 1e-300) fail(errc::degenerate_vector, "first component collapsed");
    // twice: when both images align with the dominant direction the first
    // pass cancels catastrophically and leaves an eps * |Phi v| residue
    out.v -= (out.v.dot(out.u) / n2) * out.u;
    out.v -= (out.v.dot(out.u) / n2) * out.u;
  }
  return out;
}

std::vector<double> domination_ratio(const VectorFieldModel& model, const Vec& sigma,
                                     const Vec& u, const std::vector<double>& t_grid) {
  if (!at_singularity(model, sigma))
    fail(errc::not_a_singularity, "domination ratio is defined at singularities");
  Vec uh = unit(u);
  Mat B = householder_complement(uh);  // basis of u^perp
  Mat A = model.jacobian(sigma);
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    Mat Phi = (t * A).exp();
    Vec w = Phi * uh;
    double wn = w.norm();
    if (wn <= 1e-300) fail(errc::degenerate_vector, "flow image of u collapsed");
    Vec wh = w / wn;
    Mat M = Phi * B;
    M -= wh * (wh.transpose() * M);  // project orthogonal to Phi u
    out.push_back(op_norm(M) / wn);
  }
  return out;
}

}  // namespace sflow

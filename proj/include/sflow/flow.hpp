#pragma once

#include <memory>

#include "sflow/field.hpp"
#include "sflow/ode.hpp"

namespace sflow {

// A solved orbit segment phi_s(x0) for s between 0 and t (t may be negative).
// Points are the accepted integrator steps; at() interpolates anywhere in
// the span through the dense output.
struct TrajectorySegment {
  double t_final = 0;
  int dim = 0;
  std::vector<double> times;
  std::vector<Vec> points;
  double err_estimate = 0;  // accumulated local error estimates, tolerance units
  Tol tol;
  // May carry a larger joint state (base + variational part); at() always
  // returns the leading base-state block.
  std::shared_ptr<const DenseOutput> dense;

  Vec at(double s) const { return dense->eval(s).head(dim); }
  const Vec& front() const { return points.front(); }
  const Vec& back() const { return points.back(); }
};

TrajectorySegment integrate(const VectorFieldModel& model, const Vec& x0, double t,
                            Tol tol = {});

// d x d matrix of the tangent flow D phi_t at x0.  At a singularity this is
// the matrix exponential exp(t * DX); elsewhere the variational equation is
// integrated jointly with the base orbit.
Mat tangent_flow(const VectorFieldModel& model, const Vec& x0, double t, Tol tol = {});

// Joint solve sharing one integration: base orbit segment plus D phi_t.
struct FlowTangent {
  TrajectorySegment traj;
  Mat Phi;
  // Dense output of the joint system (state = [x; vec(Phi)]), for callers
  // that need Phi at interior times.
  std::shared_ptr<const DenseOutput> joint_dense;
};
FlowTangent flow_with_tangent(const VectorFieldModel& model, const Vec& x0, double t,
                              Tol tol = {});

// Unit-sphere projection of the tangent flow: Phi_t(x0) u / |Phi_t(x0) u|.
Vec sphere_flow(const VectorFieldModel& model, const Vec& x0, const Vec& u, double t,
                Tol tol = {});

struct FramePair {
  Vec u;
  Vec v;
};

// Frame flow of the linearization at a singularity sigma: both components
// evolve by exp(t * DX(sigma)).  With sharp = true the second component is
// projected orthogonal to the image of the first:
//   v  ->  Phi v - (<Phi v, Phi u> / |Phi u|^2) Phi u.
FramePair frame_flow(const VectorFieldModel& model, const Vec& sigma, const FramePair& p,
                     double t, bool sharp);

// For unit u at the singularity: operator norm of
//   v in u^perp  ->  (I - w w^T) Phi_t v / |Phi_t u|,   w = Phi_t u / |Phi_t u|,
// evaluated on each requested time.  This is the quantity whose exponential
// decay witnesses domination of the invariant direction u.
std::vector<double> domination_ratio(const VectorFieldModel& model, const Vec& sigma,
                                     const Vec& u, const std::vector<double>& t_grid);

}  // namespace sflow

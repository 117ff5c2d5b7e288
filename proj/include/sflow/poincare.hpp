#pragma once

#include <optional>

#include "sflow/flow.hpp"
#include "sflow/parallel.hpp"

namespace sflow {

// Orthonormal basis of the hyperplane orthogonal to the field at a regular
// point.  vectors is d x (d-1); the same point always yields the same basis
// (Householder completion with a fixed sign convention).
struct NormalBasis {
  Vec base;
  Vec field;
  Mat vectors;
};

NormalBasis normal_basis(const VectorFieldModel& model, const Vec& x);

// The time-t linear Poincare map between normal planes, expressed in the
// deterministic bases at both ends:
//   matrix = B(y)^T  Phi_t(x)  B(x),   y = phi_t(x),
// which is exactly "flow, then project orthogonally to X(y)" since B(y)
// spans that plane.  rescaled multiplies by |X(x)| / |X(y)|.
struct NormalOperator {
  NormalBasis from;
  NormalBasis to;
  Mat matrix;
  bool rescaled = false;
  double elapsed = 0;
};

NormalOperator linear_poincare(const VectorFieldModel& model, const Vec& x, double t,
                               bool rescaled, Tol tol = {});

// Partition 0 = t_0 < t_1 < ... < t_n with every gap bounded by gap_bound.
struct PartitionSchedule {
  std::vector<double> times;
  double gap_bound = 0;

  std::size_t legs() const { return times.empty() ? 0 : times.size() - 1; }
  double span() const { return times.empty() ? 0.0 : times.back(); }
  void validate() const;
};

// ceil(span / T) legs of equal length <= T.
PartitionSchedule uniform_schedule(double span, double T);

// Norms of the per-leg normal operators along the orbit of x, and their
// product.  The orbit chain is computed serially so every leg starts at the
// exact endpoint of the previous one (this keeps the rescaling factors
// telescoping); the per-leg variational solves then run under `mode` and
// give identical results either way.
struct ChainProduct {
  std::vector<Vec> points;          // chain points p_0 .. p_n
  std::vector<double> leg_norms;    // per-leg operator norm (rescaled if requested)
  std::vector<double> leg_log;      // log of the above
  std::vector<double> factors;      // |X(p_{i-1})| / |X(p_i)|, all 1 when !rescaled
  double product = 1;
  double log_product = 0;
  bool rescaled = false;
};

ChainProduct chain_product(const VectorFieldModel& model, const Vec& x,
                           const PartitionSchedule& schedule, bool rescaled,
                           Tol tol = {}, ExecMode mode = ExecMode::serial);

// Where and when the orbit of y first crosses the normal plane of phi_t(x),
// looking for a forward crossing with time nearest t inside [t/2, 2t + 1].
// radius_check < 0 means the default 0.25 |X(x)|; max_separation < 0 means
// the default 10 * radius_check, 0 disables the tube check.
struct SectionCrossing {
  Vec point;
  double time = 0;
};

SectionCrossing sectional_map(const VectorFieldModel& model, const Vec& x, double t,
                              const Vec& y, double radius_check = -1,
                              double max_separation = -1, Tol tol = {});

// First forward crossing (negative-to-positive side change) of the plane
// through plane_pt with normal plane_n by the dense trajectory, searched in
// [s_lo, s_hi] and preferring the crossing nearest s_near.
std::optional<double> plane_crossing(const DenseOutput& dense, double s_lo, double s_hi,
                                     const Vec& plane_pt, const Vec& plane_n,
                                     double s_near);

// Follows a ring of points on the boundary of the normal disk N_x(r |X(x)|)
// through the sectional maps of the uniform schedule with gap T and records
// how the ring's diameter evolves.  C and eta are the contraction constants
// the caller certified for x; the probe re-checks them on its own rescaled
// leg norms and reports the outcome in premise_ok.
struct ShrinkProbe {
  std::vector<double> times;               // schedule times t_1 .. t_n
  std::vector<double> diameters;           // max pairwise distance per stage
  std::vector<double> rescaled_diameters;  // diameter / |X(p_i)|
  double initial_diameter = 0;
  bool shrinks = false;      // diameter fell below 0.1 x initial within the horizon
  bool premise_ok = false;   // sampled leg norms satisfied the (C, eta, T) tails
  bool left_domain = false;  // a sample escaped the tube around the orbit
  double fail_radius = 0;    // the radius that escaped, when left_domain
};

ShrinkProbe shrink_probe(const VectorFieldModel& model, const Vec& x, double C,
                         double eta, double T, double r, double horizon,
                         int n_samples = 8, Tol tol = {},
                         ExecMode mode = ExecMode::serial);

}  // namespace sflow

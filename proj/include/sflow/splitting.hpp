#pragma once

#include <utility>

#include "sflow/poincare.hpp"

namespace sflow {

// Invariant splitting of the linearization at a singularity: F is the
// eigendirection of the unique largest-real-part (simple, real) eigenvalue,
// E the complementary invariant hyperplane (orthogonal complement of the
// matching left eigenvector).
struct SplittingReport {
  Vec sigma;
  Mat E_basis;    // d x (d-1), orthonormal, spans E
  Vec F_vector;   // unit
  Vec E_normal;   // unit normal to E (left eigenvector direction)
  Eigen::VectorXcd eigenvalues;  // descending real part
  double lambda_F = 0;
  double spectral_gap = 0;   // Re lambda_F - max Re lambda_E
  double fitted_C = 0;       // from the decay fit of domination_ratio
  double fitted_lambda = 0;
  double invariance_defect = 0;  // |w^T A B_E| / |A|, should be ~0
  bool dominated = false;
};

SplittingReport split_at_singularity(const VectorFieldModel& model, const Vec& sigma,
                                     const std::vector<double>& t_grid = {},
                                     double point_tol = 1e-9);

enum class ConeKind { E, F };

struct ConeSpec {
  double alpha = 0;
  ConeKind which = ConeKind::F;
};

// v = v_E + v_F.  Oblique: the true E (+) F decomposition (project onto F
// along E); orthogonal: treat E as F^perp instead.  Norms are Euclidean.
struct ConeDecomp {
  Vec vE;
  Vec vF;
};
ConeDecomp decompose(const Mat& E_basis, const Vec& F_vector, const Vec& v,
                     bool oblique = true);

// Non-strict cone membership: F-cone |v_E| <= alpha |v_F|, E-cone the
// mirror image.
bool cone_contains(const ConeSpec& spec, const Mat& E_basis, const Vec& F_vector,
                   const Vec& v, bool oblique = true);

// x belongs to the cone-like region: |x - sigma| < beta and (strictly)
// |X_E(x)| < alpha |X_F(x)| in the constant extension of E (+) F.
bool region_membership(const VectorFieldModel& model, const SplittingReport& report,
                       double alpha, double beta, const Vec& x, bool oblique = true);

enum class CurveSide { plus, minus };

struct ManifoldCurve {
  Vec sigma;
  CurveSide side = CurveSide::plus;
  std::vector<double> params;  // increasing chord arclength from sigma
  std::vector<Vec> points;     // matching samples, points[0] = sigma
  Vec tangent_at_sigma;
  std::vector<Vec> taylor;  // parametrization coefficients w_1..w_order
  double achieved_arclength = 0;
  bool axis_exact = false;   // curve is an exactly invariant straight axis
  bool validated = false;    // backward flow from a tip re-approached sigma
  double backflow_distance = 0;
  double invariance_defect = 0;  // worst off-curve drift of +-h flowed samples
};

// One-dimensional invariant curve tangent to F at sigma.  For expanding F
// (Re lambda_F > 0): Taylor parametrization solving the conjugacy equation
// X(W(s)) = lambda_F s W'(s) order by order.  Otherwise, if the F-axis is
// exactly invariant for the model, that axis.
ManifoldCurve approximate_WF(const VectorFieldModel& model, const SplittingReport& report,
                             CurveSide side, double arclength, int order,
                             int n_samples = 200);

// Backward-flow checks near a singularity with contracting E: tangent
// E-cone invariance (item 1) and the distance-doubling estimate (item 2)
// on random pairs x, y = x + (E-cone vector), |y - x| < eps, inside the
// given neighborhood radius.
struct ConeClaimReport {
  double alpha = 0, T_step = 0, eps = 0, radius = 0;
  int trials = 0;
  int item1_failures = 0;  // backward image left the E-cone
  int item2_failures = 0;  // backward flow failed to double the distance
  double min_expansion = 0;      // worst observed d(back x, back y) / d(x, y)
  double worst_cone_ratio = 0;   // largest |v_F|/|v_E| of a backward image
  std::vector<std::pair<Vec, Vec>> counterexamples;  // first few failing pairs
};

ConeClaimReport cone_claim_check(const VectorFieldModel& model,
                                 const SplittingReport& report, double alpha,
                                 double T_step, double eps, int trials,
                                 double radius = -1, unsigned long long seed = 20240817,
                                 Tol tol = {}, ExecMode mode = ExecMode::serial);

// Distance between the affine normal disk {z + v : v perp X(z),
// |v| <= delta |X(z)|} and the discretized curve, with local refinement.
struct DiskHit {
  bool hit = false;
  double distance = 0;
  double curve_param = 0;  // arclength of the nearest curve point
};

DiskHit disk_meets_WF(const VectorFieldModel& model, const SplittingReport& report,
                      const ManifoldCurve& curve, const Vec& z, double delta);

// For each point of the sequence: the measured subset of [0, L_max] spent
// inside the cone-like region, as a union of intervals.  The summary L is
// the largest first-entry time over the tail half of the sequence, L_prime
// the smallest end of the corresponding dwell intervals: empirically,
// phi_[L, L_prime](x_n) sits in the region for all late n.
struct EntryTimes {
  std::vector<std::vector<std::pair<double, double>>> intervals;  // per point
  std::vector<double> first_entry;  // -1 when the point never enters
  double L = -1;
  double L_prime = -1;
};

EntryTimes entry_time_experiment(const VectorFieldModel& model,
                                 const SplittingReport& report, double alpha, double beta,
                                 const std::vector<Vec>& contracted_seq, double L_max,
                                 double dt = -1, Tol tol = {},
                                 ExecMode mode = ExecMode::serial);

// Empirical constants of the small-scale geometry near sigma, measured by
// sampling: ratio_E bounds |x_E| by ratio_E * |X_E(x)| over the beta-ball;
// disk_extent is the worst-case shrink factor of normal disks projected
// onto E over sampled region points.
struct DiskConstants {
  double ratio_E = 0;      // the constant c
  double disk_extent = 0;  // the constant c0
};

DiskConstants measure_disk_constants(const VectorFieldModel& model,
                                     const SplittingReport& report, double alpha,
                                     double beta, int n_samples = 500,
                                     unsigned long long seed = 20240817);

}  // namespace sflow

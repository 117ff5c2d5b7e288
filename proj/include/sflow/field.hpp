#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sflow/linalg.hpp"

namespace sflow {

// A smooth vector field on R^d with an analytic Jacobian.  All dynamical
// computations downstream (flows, tangent flows, section maps) only see this
// interface, so user-supplied fields plug in exactly like the built-ins.
struct VectorFieldModel {
  std::string name;
  int dim = 0;
  std::function<Vec(const Vec&)> eval;
  std::function<Mat(const Vec&)> jacobian;
  // Singularities the model registers up front (a convenience, not a census).
  std::vector<Vec> singularities;
  std::map<std::string, double> params;

  Vec operator()(const Vec& x) const { return eval(x); }
};

struct SingularityClass {
  Eigen::VectorXcd eigenvalues;  // sorted by descending real part
  double max_real_part = 0.0;
  bool hyperbolic = false;               // no eigenvalue real part within tol of 0
  bool sectionally_dissipative = false;  // Re(l_i + l_j) < 0 for every pair i != j
};

// Verifies |X(sigma)| <= point_tol and classifies the linearization.
SingularityClass classify_singularity(const VectorFieldModel& model, const Vec& sigma,
                                      double point_tol = 1e-9, double spectral_tol = 1e-9);

// Generic linear field X(x) = A x.
VectorFieldModel linear_model(const Mat& A, const std::string& name = "linear");

// One quadratic monomial of a polynomial field: dx[out]/dt += coef * x[i] * x[j].
struct QuadTerm {
  int out = 0;
  int i = 0;
  int j = 0;
  double coef = 0.0;
};

// Block field with coordinates (x_E, x_F), x_F scalar and last:
//   dx_E/dt = A_E x_E + (quadratics),  dx_F/dt = a_F x_F + (quadratics).
// Quadratic terms feeding the E rows must vanish on the F-axis so the axis
// stays exactly invariant.
VectorFieldModel block_quadratic_model(const Mat& A_E, double a_F,
                                       const std::vector<QuadTerm>& quads,
                                       const std::string& name = "model_ode");

// Catalog lookup; throws ConfigError for unknown names or parameters.
VectorFieldModel make_model(const std::string& name,
                            const std::map<std::string, double>& params = {});
std::vector<std::string> builtin_model_names();

}  // namespace sflow

#pragma once

#include <array>
#include <functional>
#include <vector>

#include "sflow/linalg.hpp"

namespace sflow {

struct Tol {
  double abs = 1e-10;
  double rel = 1e-10;
};

// Continuous extension of an accepted Dormand-Prince trajectory: quartic
// interpolation on every accepted step, queryable at any time in the
// integrated span.  Steps are kept in integration order; backward runs
// (t_end < 0) work the same way with a negative direction.
class DenseOutput {
public:
  double t_begin() const { return knots_.empty() ? 0.0 : knots_.front(); }
  double t_end() const { return knots_.empty() ? 0.0 : knots_.back(); }
  double direction() const { return dir_; }
  const std::vector<double>& knots() const { return knots_; }

  Vec eval(double t) const;

private:
  friend struct DenseBuilder;
  double dir_ = 1.0;
  Vec y0_;                                 // for zero-length spans
  std::vector<double> knots_;              // accepted times, n_steps + 1 entries
  std::vector<std::array<Vec, 5>> cont_;   // interpolation coefficients per step
};

struct OdeResult {
  DenseOutput dense;
  Vec y;                    // state at t_end
  double err_estimate = 0;  // sum of accepted local error estimates, in tolerance units
  long n_steps = 0;
  long n_rejected = 0;
  long n_evals = 0;
};

using OdeRhs = std::function<void(const Vec&, Vec&)>;

// Integrates the autonomous system y' = rhs(y) from y0 over [0, t_final]
// (either sign).  Throws StepFailure on step-size underflow or when the
// step budget is exhausted.
OdeResult integrate_ode(const OdeRhs& rhs, const Vec& y0, double t_final, Tol tol = {},
                        long max_steps = 2000000);

}  // namespace sflow

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sflow/error.hpp"

namespace sflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Spectral norm (largest singular value).
double op_norm(const Mat& A);

// v / |v|, throwing on (near-)zero input.
Vec unit(const Vec& v, double eps = 1e-300);

// Orthonormal basis of the hyperplane orthogonal to n, as the columns of a
// d x (d-1) matrix.  Deterministic: built from the Householder reflector that
// maps n to a signed coordinate axis, with a fixed sign convention, so the
// same n always yields the same basis.
Mat householder_complement(const Vec& n);

// Least-squares fit log(y) = log(C) + lambda * t.  Returns {C, lambda}.
struct ExpFit {
  double C;
  double lambda;
};
ExpFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace sflow

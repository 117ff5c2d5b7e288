#include "sflow/linalg.hpp"

#include <cmath>

namespace sflow {

double op_norm(const Mat& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  if (A.rows() == 1 && A.cols() == 1) return std::abs(A(0, 0));
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()(0);
}

Vec unit(const Vec& v, double eps) {
  double n = v.norm();
  if (!(n > eps)) fail(errc::zero_vector, "cannot normalize a zero vector");
  return v / n;
}

Mat householder_complement(const Vec& n) {
  const Eigen::Index d = n.size();
  if (d < 1) fail(errc::bad_parameters, "empty vector");
  Vec u = unit(n);
  // Reflector H = I - 2 w w^T with H u = -sign(u_0) e_0; the remaining
  // columns of H then span u^perp.  Using sign(u_0) keeps w well-conditioned.
  double s = (u(0) >= 0.0) ? 1.0 : -1.0;
  Vec w = u;
  w(0) += s;
  double wn = w.norm();
  Mat H = Mat::Identity(d, d);
  if (wn > 1e-300) {
    w /= wn;
    H -= 2.0 * w * w.transpose();
  }
  Mat B = H.rightCols(d - 1);
  // Fix each column's sign so the basis does not flip under tiny input
  // perturbations that happen to flip the reflector.
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(B(i, j)) > 1e-12) {
        if (B(i, j) < 0) B.col(j) *= -1.0;
        break;
      }
    }
  }
  return B;
}

ExpFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 2)
    fail(errc::bad_parameters, "fit needs >= 2 samples");
  double st = 0, sl = 0, stt = 0, stl = 0;
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(y[i] > 0.0)) fail(errc::bad_parameters, "fit needs positive values");
    double l = std::log(y[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
  }
  double denom = n * stt - st * st;
  if (std::abs(denom) < 1e-300) fail(errc::bad_parameters, "degenerate abscissae");
  double lambda = (n * stl - st * sl) / denom;
  double logC = (sl - lambda * st) / n;
  return {std::exp(logC), lambda};
}

}  // namespace sflow

#include "sflow/ode.hpp"

#include <algorithm>
#include <cmath>

namespace sflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - bhat, for the embedded 4th-order error estimate.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights (Hairer, Norsett, Wanner: DOPRI5 continuous extension).
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

double rms(const Vec& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

}  // namespace

// Grants integrate_ode write access to DenseOutput internals.
struct DenseBuilder {
  DenseOutput& d;
  void set_dir(double s) { d.dir_ = s; }
  void set_y0(const Vec& y) { d.y0_ = y; }
  std::vector<double>& knots() { return d.knots_; }
  std::vector<std::array<Vec, 5>>& cont() { return d.cont_; }
};

Vec DenseOutput::eval(double t) const {
  if (knots_.empty()) {
    // zero-length span
    return y0_;
  }
  const double lo = knots_.front(), hi = knots_.back();
  const double span = std::abs(hi - lo);
  const double slack = 1e-9 * std::max(1.0, span);
  if (dir_ > 0) {
    if (t < lo - slack || t > hi + slack)
      fail(errc::bad_parameters, "dense output queried outside the integrated span");
  } else {
    if (t > lo + slack || t < hi - slack)
      fail(errc::bad_parameters, "dense output queried outside the integrated span");
  }
  // locate the step containing t (knots are monotone in direction dir_)
  std::size_t idx;
  if (dir_ > 0) {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - knots_.begin())) - 1;
  } else {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t, std::greater<double>());
    idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - knots_.begin())) - 1;
  }
  idx = std::min(idx, cont_.size() - 1);
  const double h = knots_[idx + 1] - knots_[idx];
  double th = (t - knots_[idx]) / h;
  th = std::clamp(th, 0.0, 1.0);
  const double th1 = 1.0 - th;
  const auto& c = cont_[idx];
  return c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
}

OdeResult integrate_ode(const OdeRhs& rhs, const Vec& y0, double t_final, Tol tol,
                        long max_steps) {
  if (!(tol.abs > 0) || !(tol.rel >= 0)) fail(errc::bad_parameters, "bad tolerances");
  const Eigen::Index n = y0.size();
  OdeResult out;
  DenseBuilder den{out.dense};
  den.set_y0(y0);
  out.y = y0;
  if (t_final == 0.0) return out;

  const double dir = t_final > 0 ? 1.0 : -1.0;
  den.set_dir(dir);

  Vec y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
  rhs(y, k1);
  out.n_evals = 1;

  // initial step size (Hairer's hinit, simplified)
  double h;
  {
    Vec sc = (tol.abs + tol.rel * y.cwiseAbs().array()).matrix();
    double d0 = rms(y.cwiseQuotient(sc));
    double d1n = rms(k1.cwiseQuotient(sc));
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * (d0 / d1n);
    h0 = std::min(h0, std::abs(t_final));
    ytmp = y + dir * h0 * k1;
    rhs(ytmp, k2);
    ++out.n_evals;
    double d2 = rms((k2 - k1).cwiseQuotient(sc)) / h0;
    double h1;
    if (std::max(d1n, d2) <= 1e-15)
      h1 = std::max(1e-6, h0 * 1e-3);
    else
      h1 = std::pow(0.01 / std::max(d1n, d2), 0.2);
    h = dir * std::min({100.0 * h0, h1, std::abs(t_final)});
  }

  double t = 0.0;
  den.knots().push_back(0.0);

  while (dir * (t_final - t) > 0.0) {
    if (out.n_steps + out.n_rejected > max_steps)
      fail(errc::step_failure, "step budget exhausted");
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
      fail(errc::step_failure, "step size underflow at t = " + std::to_string(t));
    if (dir * (t + h - t_final) > 0.0) h = t_final - t;

    ytmp = y + h * (a21 * k1);
    rhs(ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(ynew, k7);  // FSAL
    out.n_evals += 6;

    Vec errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double sc = tol.abs + tol.rel * std::max(std::abs(y(i)), std::abs(ynew(i)));
      double q = errv(i) / sc;
      err += q * q;
    }
    err = std::sqrt(err / static_cast<double>(n));

    if (err <= 1.0) {
      // accept: store the continuous extension for this step
      std::array<Vec, 5> c;
      Vec ydiff = ynew - y;
      Vec bspl = h * k1 - ydiff;
      c[0] = y;
      c[1] = ydiff;
      c[2] = bspl;
      c[3] = ydiff - h * k7 - bspl;
      c[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      den.cont().push_back(std::move(c));
      t += h;
      den.knots().push_back(t);
      y = ynew;
      k1 = k7;
      ++out.n_steps;
      out.err_estimate += err;
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      h *= std::clamp(fac, 0.2, 5.0);
    } else {
      ++out.n_rejected;
      double fac = 0.9 * std::pow(err, -0.2);
      h *= std::clamp(fac, 0.1, 1.0);
    }
  }

  out.y = y;
  return out;
}

}  // namespace sflow

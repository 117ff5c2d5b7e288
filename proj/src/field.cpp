#include "sflow/field.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace sflow {

SingularityClass classify_singularity(const VectorFieldModel& model, const Vec& sigma,
                                      double point_tol, double spectral_tol) {
  if (sigma.size() != model.dim)
    fail(errc::bad_parameters, "point dimension does not match model");
  double r = model.eval(sigma).norm();
  if (!(r <= point_tol))
    fail(errc::not_a_singularity,
         model.name + ": |X| = " + std::to_string(r) + " at the given point");

  Mat A = model.jacobian(sigma);
  Eigen::EigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success) fail(errc::eigen_failure, "eigensolver did not converge");

  Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<std::complex<double>> sorted(ev.data(), ev.data() + ev.size());
  std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });

  SingularityClass out;
  out.eigenvalues.resize(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) out.eigenvalues(i) = sorted[i];
  out.max_real_part = sorted.front().real();

  out.hyperbolic = true;
  for (auto& l : sorted)
    if (std::abs(l.real()) <= spectral_tol) out.hyperbolic = false;

  out.sectionally_dissipative = true;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = i + 1; j < sorted.size(); ++j)
      if (sorted[i].real() + sorted[j].real() >= -spectral_tol)
        out.sectionally_dissipative = false;

  return out;
}

VectorFieldModel linear_model(const Mat& A, const std::string& name) {
  if (A.rows() != A.cols() || A.rows() < 1) fail(errc::bad_parameters, "A must be square");
  VectorFieldModel m;
  m.name = name;
  m.dim = static_cast<int>(A.rows());
  m.eval = [A](const Vec& x) -> Vec { return A * x; };
  m.jacobian = [A](const Vec&) -> Mat { return A; };
  m.singularities = {Vec::Zero(A.rows())};
  return m;
}

VectorFieldModel block_quadratic_model(const Mat& A_E, double a_F,
                                       const std::vector<QuadTerm>& quads,
                                       const std::string& name) {
  const int dE = static_cast<int>(A_E.rows());
  if (A_E.rows() != A_E.cols() || dE < 1) fail(errc::bad_parameters, "A_E must be square");
  const int d = dE + 1;
  for (const auto& q : quads) {
    if (q.out < 0 || q.out >= d || q.i < 0 || q.i >= d || q.j < 0 || q.j >= d)
      fail(errc::bad_parameters, "quadratic term index out of range");
    // E rows may only carry terms with at least one E factor, otherwise the
    // F-axis would fail to be invariant.
    if (q.out < dE && q.i == dE && q.j == dE)
      fail(errc::bad_parameters, "quadratic term breaks F-axis invariance");
  }
  Mat A = Mat::Zero(d, d);
  A.topLeftCorner(dE, dE) = A_E;
  A(dE, dE) = a_F;

  VectorFieldModel m;
  m.name = name;
  m.dim = d;
  m.eval = [A, quads](const Vec& x) -> Vec {
    Vec v = A * x;
    for (const auto& q : quads) v(q.out) += q.coef * x(q.i) * x(q.j);
    return v;
  };
  m.jacobian = [A, quads, d](const Vec& x) -> Mat {
    Mat J = A;
    (void)d;
    for (const auto& q : quads) {
      J(q.out, q.i) += q.coef * x(q.j);
      J(q.out, q.j) += q.coef * x(q.i);
    }
    return J;
  };
  m.singularities = {Vec::Zero(d)};
  return m;
}

namespace {

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    std::initializer_list<const char*> known, const std::string& model) {
  for (const auto& [k, v] : params) {
    (void)v;
    bool ok = false;
    for (const char* name : known)
      if (k == name) ok = true;
    if (!ok) fail(errc::config_error, "model '" + model + "' has no parameter '" + k + "'");
  }
}

VectorFieldModel hopf_model(double mu) {
  VectorFieldModel m;
  m.name = "hopf";
  m.dim = 2;
  m.params = {{"mu", mu}};
  m.eval = [mu](const Vec& x) -> Vec {
    double r2 = x(0) * x(0) + x(1) * x(1);
    Vec v(2);
    v(0) = mu * x(0) - x(1) - x(0) * r2;
    v(1) = x(0) + mu * x(1) - x(1) * r2;
    return v;
  };
  m.jacobian = [mu](const Vec& x) -> Mat {
    double X = x(0), Y = x(1);
    Mat J(2, 2);
    J(0, 0) = mu - (3 * X * X + Y * Y);
    J(0, 1) = -1 - 2 * X * Y;
    J(1, 0) = 1 - 2 * X * Y;
    J(1, 1) = mu - (X * X + 3 * Y * Y);
    return J;
  };
  m.singularities = {Vec::Zero(2)};
  return m;
}

// Planar Hopf normal form crossed with a contracting vertical axis.  For
// mu > 0 the limit cycle at r = sqrt(mu), z = 0 attracts with normal rates
// -2*mu (radial) and -kappa (vertical), so it is a genuine periodic sink.
VectorFieldModel hopf3_model(double mu, double kappa) {
  VectorFieldModel planar = hopf_model(mu);
  VectorFieldModel m;
  m.name = "shrinking_hopf";
  m.dim = 3;
  m.params = {{"mu", mu}, {"kappa", kappa}};
  m.eval = [planar, kappa](const Vec& x) -> Vec {
    Vec v(3);
    v.head(2) = planar.eval(x.head(2));
    v(2) = -kappa * x(2);
    return v;
  };
  m.jacobian = [planar, kappa](const Vec& x) -> Mat {
    Mat J = Mat::Zero(3, 3);
    J.topLeftCorner(2, 2) = planar.jacobian(x.head(2));
    J(2, 2) = -kappa;
    return J;
  };
  m.singularities = {Vec::Zero(3)};
  return m;
}

VectorFieldModel lorenz_model(double s, double r, double b) {
  VectorFieldModel m;
  m.name = "lorenz";
  m.dim = 3;
  m.params = {{"sigma", s}, {"rho", r}, {"beta", b}};
  m.eval = [s, r, b](const Vec& x) -> Vec {
    Vec v(3);
    v(0) = s * (x(1) - x(0));
    v(1) = x(0) * (r - x(2)) - x(1);
    v(2) = x(0) * x(1) - b * x(2);
    return v;
  };
  m.jacobian = [s, r, b](const Vec& x) -> Mat {
    Mat J(3, 3);
    J << -s, s, 0, r - x(2), -1, -x(0), x(1), x(0), -b;
    return J;
  };
  m.singularities = {Vec::Zero(3)};
  if (r > 1.0) {
    double q = std::sqrt(b * (r - 1.0));
    Vec cp(3), cm(3);
    cp << q, q, r - 1.0;
    cm << -q, -q, r - 1.0;
    m.singularities.push_back(cp);
    m.singularities.push_back(cm);
  }
  return m;
}

VectorFieldModel default_block_model(double a_F) {
  Mat A_E(2, 2);
  A_E << -1, 0, 0, -2;
  // F-row: x_F^2 + 0.1 x_E1^2; E1-row: 0.05 x_E1 x_F (vanishes on the axis).
  std::vector<QuadTerm> quads = {{2, 2, 2, 1.0}, {2, 0, 0, 0.1}, {0, 0, 2, 0.05}};
  VectorFieldModel m = block_quadratic_model(A_E, a_F, quads);
  m.params = {{"aF", a_F}};
  return m;
}

}  // namespace

VectorFieldModel make_model(const std::string& name,
                            const std::map<std::string, double>& params) {
  if (name == "linear_sink") {
    reject_unknown(params, {}, name);
    Mat A(2, 2);
    A << -1, 0, 0, -2;
    return linear_model(A, "linear_sink");
  }
  if (name == "center_linear") {
    reject_unknown(params, {}, name);
    Mat A = Mat::Zero(3, 3);
    A(1, 1) = -1;
    A(2, 2) = -2;
    return linear_model(A, "center_linear");
  }
  if (name == "radial") {
    reject_unknown(params, {}, name);
    return linear_model(-Mat::Identity(2, 2), "radial");
  }
  if (name == "rotation") {
    reject_unknown(params, {}, name);
    Mat A(2, 2);
    A << 0, -1, 1, 0;
    return linear_model(A, "rotation");
  }
  if (name == "hopf") {
    reject_unknown(params, {"mu"}, name);
    return hopf_model(get_param(params, "mu", 0.5));
  }
  if (name == "shrinking_hopf") {
    reject_unknown(params, {"mu", "kappa"}, name);
    return hopf3_model(get_param(params, "mu", 0.5), get_param(params, "kappa", 0.7));
  }
  if (name == "lorenz") {
    reject_unknown(params, {"sigma", "rho", "beta"}, name);
    return lorenz_model(get_param(params, "sigma", 10.0), get_param(params, "rho", 28.0),
                        get_param(params, "beta", 8.0 / 3.0));
  }
  if (name == "model_ode") {
    reject_unknown(params, {"aF"}, name);
    return default_block_model(get_param(params, "aF", 0.0));
  }
  fail(errc::config_error, "unknown model '" + name + "'");
}

std::vector<std::string> builtin_model_names() {
  return {"linear_sink", "center_linear", "radial",  "rotation",
          "hopf",        "shrinking_hopf", "lorenz", "model_ode"};
}

}  // namespace sflow

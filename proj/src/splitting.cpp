#include "sflow/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "sflow/flow.hpp"

namespace sflow {

namespace {

// Deterministic sign convention: first non-negligible entry positive.
void fix_sign(Vec& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

std::vector<int> sort_descending_real(const Eigen::VectorXcd& ev) {
  std::vector<int> idx(ev.size());
  for (int i = 0; i < ev.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (ev[a].real() != ev[b].real()) return ev[a].real() > ev[b].real();
    return ev[a].imag() > ev[b].imag();
  });
  return idx;
}

double polyline_distance(const std::vector<Vec>& pts, const Vec& q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    Vec e = pts[i + 1] - pts[i];
    double len2 = e.squaredNorm();
    double t = 0;
    if (len2 > 0) t = std::clamp((q - pts[i]).dot(e) / len2, 0.0, 1.0);
    best = std::min(best, (pts[i] + t * e - q).norm());
  }
  if (pts.size() == 1) best = (q - pts[0]).norm();
  return best;
}

Vec gaussian_vec(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = g(rng);
  return v;
}

Vec uniform_in_ball(std::mt19937_64& rng, const Vec& center, double radius) {
  const int d = static_cast<int>(center.size());
  Vec dir = gaussian_vec(rng, d);
  double n = dir.norm();
  if (n < 1e-300) dir.setZero(), dir[0] = 1, n = 1;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = radius * std::pow(u(rng), 1.0 / d);
  return center + (r / n) * dir;
}

}  // namespace

SplittingReport split_at_singularity(const VectorFieldModel& model, const Vec& sigma,
                                     const std::vector<double>& t_grid,
                                     double point_tol) {
  if (model.dim < 2) fail(errc::bad_parameters, "split_at_singularity: need dimension >= 2");
  classify_singularity(model, sigma, point_tol);  // throws if sigma is not a zero

  const Mat A = model.jacobian(sigma);
  const double scale = std::max(1.0, op_norm(A));

  Eigen::EigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success) fail(errc::eigen_failure, "eigen decomposition failed");
  const auto idx = sort_descending_real(es.eigenvalues());

  SplittingReport rep;
  rep.sigma = sigma;
  rep.eigenvalues.resize(A.rows());
  for (int i = 0; i < A.rows(); ++i) rep.eigenvalues[i] = es.eigenvalues()[idx[i]];

  const std::complex<double> top = rep.eigenvalues[0];
  if (std::abs(top.imag()) > 1e-9 * scale)
    fail(errc::no_dominated_f, "largest-real-part eigenvalue is complex; no one-dimensional F");
  if (top.real() - rep.eigenvalues[1].real() <= 1e-9 * scale)
    fail(errc::no_dominated_f, "largest-real-part eigenvalue is not simple; no dominated F");

  rep.lambda_F = top.real();
  rep.spectral_gap = top.real() - rep.eigenvalues[1].real();

  Vec F = es.eigenvectors().col(idx[0]).real();
  F.normalize();
  fix_sign(F);
  rep.F_vector = F;

  // E is the A-invariant complement: the orthogonal complement of the left
  // eigenvector for lambda_F.
  Eigen::EigenSolver<Mat> esl(A.transpose());
  if (esl.info() != Eigen::Success) fail(errc::eigen_failure, "eigen decomposition failed");
  int wi = 0;
  double wd = std::numeric_limits<double>::infinity();
  for (int i = 0; i < A.rows(); ++i) {
    double dist = std::abs(esl.eigenvalues()[i] - top);
    if (dist < wd) wd = dist, wi = i;
  }
  Vec w = esl.eigenvectors().col(wi).real();
  w.normalize();
  fix_sign(w);
  if (std::abs(w.dot(F)) < 1e-12)
    fail(errc::eigen_failure, "left/right eigenvector pairing degenerate");
  rep.E_normal = w;
  rep.E_basis = householder_complement(w);
  rep.invariance_defect = (w.transpose() * A * rep.E_basis).norm() / scale;

  std::vector<double> grid = t_grid;
  if (grid.empty())
    for (int k = 1; k <= 12; ++k) grid.push_back(0.25 * k);
  const std::vector<double> ratios = domination_ratio(model, sigma, F, grid);

  // The measured ratio bottoms out at the integrator's relative accuracy
  // once the E-part has decayed that far below the F-part; points on that
  // plateau would flatten the fitted slope, so cut well above it.
  double rmax = 0;
  for (double r : ratios) rmax = std::max(rmax, r);
  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (ratios[i] > std::max(1e-300, 1e-6 * rmax)) ts.push_back(grid[i]), ys.push_back(ratios[i]);
  if (ts.size() < 2) {
    ts.clear(), ys.clear();
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (ratios[i] > 1e-300) ts.push_back(grid[i]), ys.push_back(ratios[i]);
  }
  bool fit_ok = ts.size() >= 2;
  if (fit_ok) {
    ExpFit fit = fit_exponential(ts, ys);
    rep.fitted_C = fit.C;
    rep.fitted_lambda = -fit.lambda;  // decay rate, positive when dominated
  }
  rep.dominated = fit_ok && rep.spectral_gap > 1e-9 &&
                  std::abs(rep.fitted_lambda - rep.spectral_gap) <= 0.1 * rep.spectral_gap;
  return rep;
}

ConeDecomp decompose(const Mat& E_basis, const Vec& F_vector, const Vec& v, bool oblique) {
  ConeDecomp out;
  if (oblique) {
    // Project onto F along E.  w spans the orthogonal complement of E, so
    // <w, vE> = 0 pins the F coefficient.
    Vec w = F_vector - E_basis * (E_basis.transpose() * F_vector);
    double wf = w.dot(F_vector);
    if (std::abs(wf) < 1e-12)
      fail(errc::degenerate_vector, "F direction lies in E; decomposition undefined");
    out.vF = (w.dot(v) / wf) * F_vector;
  } else {
    out.vF = F_vector.dot(v) * F_vector;
  }
  out.vE = v - out.vF;
  return out;
}

bool cone_contains(const ConeSpec& spec, const Mat& E_basis, const Vec& F_vector,
                   const Vec& v, bool oblique) {
  if (spec.alpha < 0) fail(errc::bad_parameters, "cone_contains: alpha must be >= 0");
  ConeDecomp dec = decompose(E_basis, F_vector, v, oblique);
  const double aE = dec.vE.norm(), aF = dec.vF.norm();
  const double slop = 1e-12 * (aE + aF + 1e-300);  // keep the boundary inside
  if (spec.which == ConeKind::F) return aE <= spec.alpha * aF + slop;
  return aF <= spec.alpha * aE + slop;
}

bool region_membership(const VectorFieldModel& model, const SplittingReport& report,
                       double alpha, double beta, const Vec& x, bool oblique) {
  if (alpha <= 0 || beta <= 0)
    fail(errc::bad_parameters, "region_membership: alpha and beta must be positive");
  if ((x - report.sigma).norm() >= beta) return false;
  ConeDecomp dec = decompose(report.E_basis, report.F_vector, model(x), oblique);
  return dec.vE.norm() < alpha * dec.vF.norm();  // strict on both counts
}

namespace {

struct TaylorCurve {
  std::vector<Vec> coeff;  // coeff[k] multiplies s^k, k >= 1
  Vec sigma;

  Vec eval(double s) const {
    Vec p = sigma;
    double sk = 1;
    for (std::size_t k = 1; k < coeff.size(); ++k) {
      sk *= s;
      p += sk * coeff[k];
    }
    return p;
  }
  Vec deriv(double s) const {
    Vec p = Vec::Zero(sigma.size());
    double sk = 1;
    for (std::size_t k = 1; k < coeff.size(); ++k) {
      p += (static_cast<double>(k) * sk) * coeff[k];
      sk *= s;
    }
    return p;
  }
};

// Solve the conjugacy equation X(W(s)) = lambda s W'(s) order by order.  The
// order-k coefficient of the residual of the degree-(k-1) truncation is read
// off numerically: R(s)/s^k is a polynomial whose constant term is wanted, so
// fit a low-degree polynomial to it on a small node set.
TaylorCurve solve_conjugacy(const VectorFieldModel& model, const Vec& sigma,
                            const Vec& w1, double lambda, int order) {
  TaylorCurve cur;
  cur.sigma = sigma;
  cur.coeff.assign(order + 1, Vec::Zero(model.dim));
  cur.coeff[1] = w1;

  const Mat A = model.jacobian(sigma);
  const double anorm = op_norm(A);
  const Mat I = Mat::Identity(model.dim, model.dim);

  for (int k = 2; k <= order; ++k) {
    // Node scale: shrink when lower coefficients are large, so the truncated
    // series is still well inside its region of accuracy.
    double growth = 1;
    for (int j = 1; j < k; ++j)
      growth = std::max(growth, std::pow(cur.coeff[j].norm(), 1.0 / j));
    const double h = std::max(1e-3, 0.35 / growth);

    const int m = 12;
    Mat G(m, model.dim);
    Vec nodes(m);
    TaylorCurve trunc = cur;
    trunc.coeff.resize(k);  // only w_1 .. w_{k-1}
    for (int j = 0; j < m; ++j) {
      double s = h * (1.0 / 3.0 + (2.0 / 3.0) * j / (m - 1));
      nodes[j] = s;
      Vec R = model(trunc.eval(s)) - lambda * s * trunc.deriv(s);
      G.row(j) = (R / std::pow(s, k)).transpose();
    }
    Mat V(m, 4);
    for (int j = 0; j < m; ++j) {
      V(j, 0) = 1;
      for (int c = 1; c < 4; ++c) V(j, c) = V(j, c - 1) * nodes[j];
    }
    Mat fitc = V.colPivHouseholderQr().solve(G);
    Vec rk = fitc.row(0).transpose();

    Mat M = A - (k * lambda) * I;
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smin = svd.singularValues()[svd.singularValues().size() - 1];
    if (smin <= 1e-8 * (anorm + k * std::abs(lambda))) {
      std::ostringstream os;
      os << "resonance at order " << k << ": " << k << "*lambda_F is an eigenvalue of DX";
      fail(errc::resonance_obstruction, os.str());
    }
    cur.coeff[k] = svd.solve(-rk);
  }
  return cur;
}

struct SampledCurve {
  std::vector<double> params;
  std::vector<Vec> points;
  double achieved = 0;
};

// March the parameter until the requested chord arclength is covered, then
// resample uniformly in arclength.
SampledCurve sample_by_arclength(const TaylorCurve& cur, double arclength, int n_samples) {
  std::vector<double> cum{0.0};
  std::vector<double> ss{0.0};
  double s = 0, total = 0;
  Vec prev = cur.sigma;
  const double target_chord = arclength / (8.0 * n_samples);
  const long max_iter = 64L * n_samples + 4096;
  for (long it = 0; it < max_iter && total < arclength; ++it) {
    double speed = cur.deriv(s).norm();
    s += target_chord / std::max(speed, 1e-8);
    Vec p = cur.eval(s);
    total += (p - prev).norm();
    cum.push_back(total);
    ss.push_back(s);
    prev = p;
    if ((p - cur.sigma).norm() > 3 * arclength + 10) break;  // truncation blew up
  }
  SampledCurve out;
  out.achieved = total;
  std::size_t lo = 0;
  for (int i = 0; i <= n_samples; ++i) {
    double u = out.achieved * i / n_samples;
    while (lo + 1 < cum.size() && cum[lo + 1] < u) ++lo;
    double si;
    if (lo + 1 >= cum.size()) {
      si = ss.back();
    } else {
      double span = cum[lo + 1] - cum[lo];
      double t = span > 0 ? (u - cum[lo]) / span : 0.0;
      si = ss[lo] + t * (ss[lo + 1] - ss[lo]);
    }
    out.params.push_back(u);
    out.points.push_back(cur.eval(si));
  }
  return out;
}

Vec interp_at(const SampledCurve& sc, double u) {
  auto it = std::upper_bound(sc.params.begin(), sc.params.end(), u);
  std::size_t j = std::min<std::size_t>(
      sc.params.size() - 1,
      std::max<std::size_t>(1, static_cast<std::size_t>(it - sc.params.begin())));
  double span = sc.params[j] - sc.params[j - 1];
  double t = span > 0 ? std::clamp((u - sc.params[j - 1]) / span, 0.0, 1.0) : 0.0;
  return sc.points[j - 1] + t * (sc.points[j] - sc.points[j - 1]);
}

}  // namespace

ManifoldCurve approximate_WF(const VectorFieldModel& model, const SplittingReport& report,
                             CurveSide side, double arclength, int order, int n_samples) {
  if (arclength <= 0 || order < 1 || n_samples < 8)
    fail(errc::bad_parameters, "approximate_WF: need arclength > 0, order >= 1, n_samples >= 8");
  const Vec sigma = report.sigma;
  const Vec Fhat = report.F_vector;
  const double lambda = report.lambda_F;
  const double sgn = side == CurveSide::plus ? 1.0 : -1.0;

  bool axis_ok = true;
  for (int k = 1; k <= 8; ++k) {
    Vec x = sigma + (sgn * arclength * k / 8.0) * Fhat;
    Vec X = model(x);
    Vec perp = X - Fhat * Fhat.dot(X);
    if (perp.norm() > 1e-10 * std::max(1.0, X.norm())) {
      axis_ok = false;
      break;
    }
  }

  ManifoldCurve mc;
  mc.sigma = sigma;
  mc.side = side;
  mc.tangent_at_sigma = sgn * Fhat;

  if (lambda > 1e-9) {
    TaylorCurve cur = solve_conjugacy(model, sigma, sgn * Fhat, lambda, order);
    SampledCurve sc = sample_by_arclength(cur, arclength, n_samples);
    mc.params = sc.params;
    mc.points = sc.points;
    mc.achieved_arclength = sc.achieved;
    for (int k = 1; k <= order; ++k) mc.taylor.push_back(cur.coeff[k]);

    // Validation: a point part-way up the curve, flowed backward long enough
    // to shrink its F-coordinate tenfold, should slide down the curve toward
    // sigma without drifting off it.
    double uv = std::min(0.5 * sc.achieved, 0.05);
    if (uv > 0) {
      Vec tip = interp_at(sc, uv);
      double d0 = (tip - sigma).norm();
      double tau = std::log(10.0) / lambda;
      TrajectorySegment seg = integrate(model, tip, -tau);
      double worst = 0;
      for (int j = 0; j <= 400; ++j) {
        Vec p = seg.at(-tau * j / 400.0);
        worst = std::max(worst, polyline_distance(mc.points, p));
      }
      mc.backflow_distance = worst;
      double dend = (seg.back() - sigma).norm();
      mc.validated = dend <= 0.2 * d0 && worst <= 1e-6 * std::max(1.0, sc.achieved);
    }
  } else if (axis_ok) {
    mc.axis_exact = true;
    mc.taylor.push_back(sgn * Fhat);
    for (int i = 0; i <= n_samples; ++i) {
      double u = arclength * i / n_samples;
      mc.params.push_back(u);
      mc.points.push_back(sigma + (sgn * u) * Fhat);
    }
    mc.achieved_arclength = arclength;
    // The axis is invariant as a set whether or not points move along it
    // (the whole line may consist of equilibria), so validate by checking
    // that backward flow does not leave the line.
    Vec tip = sigma + (sgn * 0.5 * arclength) * Fhat;
    TrajectorySegment seg = integrate(model, tip, -5.0);
    double worst = 0;
    for (int j = 0; j <= 200; ++j) {
      Vec p = seg.at(-5.0 * j / 200.0);
      Vec q = p - sigma;
      worst = std::max(worst, (q - Fhat * Fhat.dot(q)).norm());
    }
    mc.backflow_distance = worst;
    mc.validated = worst <= 1e-8 * std::max(1.0, arclength);
  } else {
    fail(errc::unsupported,
         "approximate_WF: F is not expanding and the F-axis is not invariant");
  }

  // Local invariance defect: flow interior samples +-h and measure the drift
  // off the discretized curve.
  if (mc.points.size() >= 3) {
    const double h = 1e-2;
    double worst = 0;
    for (double f : {0.25, 0.5, 0.75}) {
      Vec p = mc.points[static_cast<std::size_t>(f * (mc.points.size() - 1))];
      for (double dt : {h, -h}) {
        Vec q = integrate(model, p, dt).back();
        worst = std::max(worst, polyline_distance(mc.points, q));
      }
    }
    mc.invariance_defect = worst;
  }
  return mc;
}

ConeClaimReport cone_claim_check(const VectorFieldModel& model,
                                 const SplittingReport& report, double alpha,
                                 double T_step, double eps, int trials, double radius,
                                 unsigned long long seed, Tol tol, ExecMode mode) {
  if (alpha <= 0 || T_step <= 0 || eps <= 0 || trials < 1)
    fail(errc::bad_parameters, "cone_claim_check: bad alpha/T_step/eps/trials");
  if (report.eigenvalues.size() < 2 || report.eigenvalues[1].real() >= 0)
    fail(errc::bad_parameters, "cone_claim_check: E must be contracting");
  if (radius <= 0) radius = 5 * eps;

  const int d = model.dim;
  const Vec sigma = report.sigma;
  const Mat& B = report.E_basis;
  const Vec& Fhat = report.F_vector;
  const ConeSpec econe{alpha, ConeKind::E};

  struct TrialOut {
    bool fail1 = false, fail2 = false;
    double expansion = 0, cone_ratio = 0;
    Vec x, y;
  };
  std::vector<TrialOut> out(trials);

  parallel_for(trials, mode, [&](std::size_t i) {
    std::mt19937_64 rng(seed + 1000003ULL * (i + 1));
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    Vec x = uniform_in_ball(rng, sigma, radius);
    Vec a = gaussian_vec(rng, d - 1);
    if (a.norm() < 1e-300) a[0] = 1;
    Vec vE = B * a;
    vE.normalize();
    double xi = u01(rng);
    double sgnF = u01(rng) < 0.5 ? -1.0 : 1.0;
    Vec v = vE + (alpha * xi * sgnF) * Fhat;  // inside the E-cone
    v.normalize();
    Vec y = x + (eps * (1.0 - u01(rng))) * v;

    FlowTangent ft = flow_with_tangent(model, x, -T_step, tol);
    Vec xb = ft.traj.back();
    Vec yb = integrate(model, y, -T_step, tol).back();

    TrialOut& o = out[i];
    o.x = x;
    o.y = y;
    Vec wv = ft.Phi * v;
    ConeDecomp dec = decompose(B, Fhat, wv);
    o.cone_ratio = dec.vF.norm() / (dec.vE.norm() + 1e-300);
    o.fail1 = !cone_contains(econe, B, Fhat, wv);
    o.expansion = (xb - yb).norm() / (y - x).norm();
    o.fail2 = !(o.expansion > 2.0);
  });

  ConeClaimReport rep;
  rep.alpha = alpha;
  rep.T_step = T_step;
  rep.eps = eps;
  rep.radius = radius;
  rep.trials = trials;
  rep.min_expansion = std::numeric_limits<double>::infinity();
  for (const TrialOut& o : out) {
    rep.min_expansion = std::min(rep.min_expansion, o.expansion);
    rep.worst_cone_ratio = std::max(rep.worst_cone_ratio, o.cone_ratio);
    if (o.fail1) ++rep.item1_failures;
    if (o.fail2) ++rep.item2_failures;
    if ((o.fail1 || o.fail2) && rep.counterexamples.size() < 8)
      rep.counterexamples.emplace_back(o.x, o.y);
  }
  return rep;
}

DiskHit disk_meets_WF(const VectorFieldModel& model, const SplittingReport& report,
                      const ManifoldCurve& curve, const Vec& z, double delta) {
  if (delta <= 0) fail(errc::bad_parameters, "disk_meets_WF: delta must be positive");
  if (curve.points.size() < 2) fail(errc::bad_parameters, "disk_meets_WF: curve has no extent");
  Vec Xz = model(z);
  if (Xz.norm() < 1e-14) fail(errc::singular_point, "disk_meets_WF: disk center is singular");
  Vec nhat = Xz / Xz.norm();
  const double r = delta * Xz.norm();

  auto disk_dist = [&](const Vec& p) {
    Vec q = p - z;
    double qpar = nhat.dot(q);
    double qperp = (q - qpar * nhat).norm();
    if (qperp <= r) return std::abs(qpar);
    return std::sqrt(qpar * qpar + (qperp - r) * (qperp - r));
  };

  std::size_t best = 0;
  double bestd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    double di = disk_dist(curve.points[i]);
    if (di < bestd) bestd = di, best = i;
  }

  auto point_at = [&](double u) {
    auto it = std::upper_bound(curve.params.begin(), curve.params.end(), u);
    std::size_t j = std::min<std::size_t>(
        curve.params.size() - 1,
        std::max<std::size_t>(1, static_cast<std::size_t>(it - curve.params.begin())));
    double span = curve.params[j] - curve.params[j - 1];
    double t = span > 0 ? std::clamp((u - curve.params[j - 1]) / span, 0.0, 1.0) : 0.0;
    return Vec(curve.points[j - 1] + t * (curve.points[j] - curve.points[j - 1]));
  };

  double lo = curve.params[best > 0 ? best - 1 : 0];
  double hi = curve.params[std::min(best + 1, curve.params.size() - 1)];
  for (int it = 0; it < 80; ++it) {
    double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (disk_dist(point_at(m1)) <= disk_dist(point_at(m2)))
      hi = m2;
    else
      lo = m1;
  }
  double um = 0.5 * (lo + hi);
  double dm = disk_dist(point_at(um));

  DiskHit hit;
  if (dm < bestd) {
    hit.distance = dm;
    hit.curve_param = um;
  } else {
    hit.distance = bestd;
    hit.curve_param = curve.params[best];
  }
  const double scale = std::max((z - report.sigma).norm(), r);
  hit.hit = hit.distance <= 1e-7 * std::max(scale, 1e-30);
  return hit;
}

EntryTimes entry_time_experiment(const VectorFieldModel& model,
                                 const SplittingReport& report, double alpha, double beta,
                                 const std::vector<Vec>& contracted_seq, double L_max,
                                 double dt, Tol tol, ExecMode mode) {
  if (contracted_seq.empty()) fail(errc::bad_parameters, "entry_time_experiment: empty sequence");
  if (L_max <= 0) fail(errc::bad_parameters, "entry_time_experiment: L_max must be positive");
  if (dt <= 0) dt = L_max / 400;

  const std::size_t n = contracted_seq.size();
  EntryTimes et;
  et.intervals.resize(n);
  et.first_entry.assign(n, -1.0);

  parallel_for(n, mode, [&](std::size_t i) {
    TrajectorySegment seg = integrate(model, contracted_seq[i], L_max, tol);
    auto inside = [&](double t) {
      return region_membership(model, report, alpha, beta, seg.at(t));
    };
    auto refine = [&](double a, double b) {  // membership differs at a and b
      bool ina = inside(a);
      for (int it = 0; it < 40; ++it) {
        double m = 0.5 * (a + b);
        if (inside(m) == ina)
          a = m;
        else
          b = m;
      }
      return 0.5 * (a + b);
    };

    std::vector<std::pair<double, double>>& iv = et.intervals[i];
    double t = 0;
    bool prev = inside(0.0);
    double open = prev ? 0.0 : -1.0;
    while (t < L_max) {
      double tn = std::min(t + dt, L_max);
      bool cur = inside(tn);
      if (cur != prev) {
        double c = refine(t, tn);
        if (cur)
          open = c;
        else
          iv.emplace_back(open, c), open = -1.0;
      }
      prev = cur;
      t = tn;
    }
    if (open >= 0) iv.emplace_back(open, L_max);
    if (!iv.empty()) et.first_entry[i] = iv.front().first;
  });

  // Summary over the tail half: stabilized entry window [L, L'].
  std::size_t tail = n / 2;
  double L = -1;
  bool all_enter = true;
  for (std::size_t i = tail; i < n; ++i) {
    if (et.first_entry[i] < 0) {
      all_enter = false;
      break;
    }
    L = std::max(L, et.first_entry[i]);
  }
  if (all_enter && L >= 0) {
    double Lp = std::numeric_limits<double>::infinity();
    bool covered = true;
    for (std::size_t i = tail; i < n; ++i) {
      bool found = false;
      for (auto& [a, b] : et.intervals[i])
        if (a <= L + 1e-12 && L <= b + 1e-12) {
          Lp = std::min(Lp, b);
          found = true;
          break;
        }
      if (!found) covered = false;
    }
    et.L = L;
    et.L_prime = covered ? Lp : L;
  }
  return et;
}

DiskConstants measure_disk_constants(const VectorFieldModel& model,
                                     const SplittingReport& report, double alpha,
                                     double beta, int n_samples, unsigned long long seed) {
  if (alpha <= 0 || beta <= 0 || n_samples < 1)
    fail(errc::bad_parameters, "measure_disk_constants: bad alpha/beta/n_samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Vec sigma = report.sigma;
  const Mat& BE = report.E_basis;
  const Vec& Fhat = report.F_vector;

  DiskConstants dc;
  for (int i = 0; i < n_samples; ++i) {
    Vec x = uniform_in_ball(rng, sigma, beta);
    ConeDecomp dX = decompose(BE, Fhat, model(x));
    ConeDecomp dx = decompose(BE, Fhat, x - sigma);
    double XE = dX.vE.norm();
    if (XE > 1e-12 * (1 + dx.vE.norm())) dc.ratio_E = std::max(dc.ratio_E, dx.vE.norm() / XE);
  }

  // Normal disks at region points: how much does projecting onto E shrink
  // them?  Smallest singular value of B_E^T B_x, minimized over samples.
  dc.disk_extent = std::numeric_limits<double>::infinity();
  int accepted = 0;
  for (int tries = 0; tries < 60 * n_samples && accepted < n_samples; ++tries) {
    double s = (u01(rng) < 0.5 ? -1 : 1) * (0.15 + 0.75 * u01(rng)) * beta;
    Vec g = gaussian_vec(rng, model.dim - 1);
    Vec z = sigma + s * Fhat + (0.05 * alpha * std::abs(s) * u01(rng)) * (BE * g.normalized());
    if (!region_membership(model, report, alpha, beta, z)) continue;
    ++accepted;
    NormalBasis nb = normal_basis(model, z);
    Eigen::JacobiSVD<Mat> svd(BE.transpose() * nb.vectors);
    dc.disk_extent =
        std::min(dc.disk_extent, svd.singularValues()[svd.singularValues().size() - 1]);
  }
  if (accepted == 0) dc.disk_extent = 0;
  return dc;
}

}  // namespace sflow

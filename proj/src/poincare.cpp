#include "sflow/poincare.hpp"

#include <algorithm>
#include <cmath>

namespace sflow {

namespace {

constexpr double kRegular = 1e-12;  // |X| above this counts as a regular point

double field_norm_checked(const VectorFieldModel& model, const Vec& x,
                          const char* where) {
  double n = model.eval(x).norm();
  if (!(n > kRegular)) fail(errc::singular_point, std::string(where) + ": |X| <= 1e-12");
  return n;
}

}  // namespace

std::optional<double> plane_crossing(const DenseOutput& dense, double s_lo, double s_hi,
                                     const Vec& plane_pt, const Vec& plane_n,
                                     double s_near) {
  // only the leading components count: a joint state (point + tangent blocks)
  // crosses with its point part
  const auto nd = plane_pt.size();
  auto g = [&](double s) { return plane_n.dot(dense.eval(s).head(nd) - plane_pt); };

  // sample on the accepted steps, refined, clipped to [s_lo, s_hi]
  std::vector<double> grid;
  const auto& knots = dense.knots();
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    for (int j = 0; j < 8; ++j) {
      double s = knots[i] + (knots[i + 1] - knots[i]) * (j / 8.0);
      if (s >= s_lo && s <= s_hi) grid.push_back(s);
    }
  }
  grid.push_back(std::max(s_lo, dense.t_begin()));
  grid.push_back(std::min(s_hi, dense.t_end()));
  std::sort(grid.begin(), grid.end());
  if (grid.size() < 2) return std::nullopt;

  double best = 0, best_dist = -1;
  double g_prev = g(grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double g_cur = g(grid[i]);
    if (g_prev < 0.0 && g_cur >= 0.0) {  // forward crossing
      double mid = 0.5 * (grid[i - 1] + grid[i]);
      double dist = std::abs(mid - s_near);
      if (best_dist < 0 || dist < best_dist) {
        best_dist = dist;
        best = grid[i - 1];
      }
    }
    g_prev = g_cur;
  }
  if (best_dist < 0) return std::nullopt;

  // bisection on the bracket [best, next grid point]
  auto it = std::upper_bound(grid.begin(), grid.end(), best);
  double a = best;
  double b = (it == grid.end()) ? grid.back() : *it;
  double ga = g(a);
  double nscale = plane_n.norm();
  for (int iter = 0; iter < 200; ++iter) {
    double m = 0.5 * (a + b);
    double gm = g(m);
    // refine well past the 1e-10 crossing target (|g|/|n| is the distance
    // from the plane along its normal)
    if (std::abs(gm) / nscale <= 1e-12) return m;
    if ((ga < 0) == (gm < 0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
    if (b - a <= 1e-14 * std::max(1.0, std::abs(b))) break;
  }
  return 0.5 * (a + b);
}

NormalBasis normal_basis(const VectorFieldModel& model, const Vec& x) {
  if (x.size() != model.dim) fail(errc::bad_parameters, "point dimension mismatch");
  Vec X = model.eval(x);
  if (!(X.norm() > kRegular)) fail(errc::singular_point, "normal_basis at a singularity");
  NormalBasis nb;
  nb.base = x;
  nb.field = X;
  nb.vectors = householder_complement(X / X.norm());
  return nb;
}

NormalOperator linear_poincare(const VectorFieldModel& model, const Vec& x, double t,
                               bool rescaled, Tol tol) {
  NormalBasis from = normal_basis(model, x);
  FlowTangent ft = flow_with_tangent(model, x, t, tol);
  // the orbit segment itself must stay clear of singularities
  for (const Vec& p : ft.traj.points)
    field_norm_checked(model, p, "linear_poincare orbit");
  Vec y = ft.traj.back();
  NormalBasis to = normal_basis(model, y);

  NormalOperator op;
  op.from = from;
  op.to = to;
  op.rescaled = rescaled;
  op.elapsed = t;
  op.matrix = to.vectors.transpose() * ft.Phi * from.vectors;
  if (rescaled) op.matrix *= from.field.norm() / to.field.norm();
  return op;
}

void PartitionSchedule::validate() const {
  if (times.size() < 2) fail(errc::bad_parameters, "schedule needs at least one leg");
  if (times.front() != 0.0) fail(errc::bad_parameters, "schedule must start at 0");
  if (!(gap_bound > 0)) fail(errc::bad_parameters, "schedule gap bound must be positive");
  for (std::size_t i = 1; i < times.size(); ++i) {
    double gap = times[i] - times[i - 1];
    if (!(gap > 0)) fail(errc::bad_parameters, "schedule times must increase");
    if (gap > gap_bound * (1 + 1e-12))
      fail(errc::bad_parameters, "schedule gap exceeds the bound");
  }
}

PartitionSchedule uniform_schedule(double span, double T) {
  if (!(span > 0) || !(T > 0)) fail(errc::bad_parameters, "span and T must be positive");
  auto n = static_cast<std::size_t>(std::ceil(span / T - 1e-12));
  n = std::max<std::size_t>(n, 1);
  PartitionSchedule s;
  s.gap_bound = T;
  s.times.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    s.times[i] = span * (static_cast<double>(i) / static_cast<double>(n));
  s.times.back() = span;
  s.validate();
  return s;
}

ChainProduct chain_product(const VectorFieldModel& model, const Vec& x,
                           const PartitionSchedule& schedule, bool rescaled, Tol tol,
                           ExecMode mode) {
  schedule.validate();
  const std::size_t n = schedule.legs();

  // Serial endpoint chain: each leg starts at the previous leg's exact
  // endpoint, so the |X| rescaling factors telescope exactly.
  ChainProduct out;
  out.rescaled = rescaled;
  out.points.resize(n + 1);
  out.points[0] = x;
  std::vector<double> xnorm(n + 1);
  xnorm[0] = field_norm_checked(model, x, "chain start");
  for (std::size_t i = 1; i <= n; ++i) {
    double dt = schedule.times[i] - schedule.times[i - 1];
    out.points[i] = integrate(model, out.points[i - 1], dt, tol).back();
    xnorm[i] = field_norm_checked(model, out.points[i], "chain point");
  }

  // Independent per-leg variational solves; slot writes keep serial and
  // parallel results identical.
  out.leg_norms.assign(n, 0.0);
  out.factors.assign(n, 1.0);
  parallel_for(n, mode, [&](std::size_t i) {
    double dt = schedule.times[i + 1] - schedule.times[i];
    const Vec& p = out.points[i];
    const Vec& q = out.points[i + 1];
    Mat Phi = tangent_flow(model, p, dt, tol);
    Mat Bp = householder_complement(model.eval(p) / xnorm[i]);
    Mat Bq = householder_complement(model.eval(q) / xnorm[i + 1]);
    double norm = op_norm(Bq.transpose() * Phi * Bp);
    if (rescaled) {
      out.factors[i] = xnorm[i] / xnorm[i + 1];
      norm *= out.factors[i];
    }
    out.leg_norms[i] = norm;
  });

  out.leg_log.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(out.leg_norms[i] > 0))
      fail(errc::degenerate_vector, "leg operator norm vanished");
    out.leg_log[i] = std::log(out.leg_norms[i]);
    out.product *= out.leg_norms[i];
    out.log_product += out.leg_log[i];
  }
  return out;
}

SectionCrossing sectional_map(const VectorFieldModel& model, const Vec& x, double t,
                              const Vec& y, double radius_check, double max_separation,
                              Tol tol) {
  if (!(t > 0)) fail(errc::bad_parameters, "sectional map needs t > 0");
  double xn = field_norm_checked(model, x, "sectional_map base");
  if (radius_check < 0) radius_check = 0.25 * xn;
  if (max_separation < 0) max_separation = 10.0 * radius_check;
  if ((y - x).norm() > radius_check * (1 + 1e-9))
    fail(errc::bad_parameters, "y is outside the allowed normal disk");

  const double horizon = 2.0 * t + 1.0;
  TrajectorySegment ref = integrate(model, x, t, tol);
  Vec zt = ref.back();
  field_norm_checked(model, zt, "sectional_map target");
  Vec Xt = model.eval(zt);

  TrajectorySegment yorb = integrate(model, y, horizon, tol);

  auto s = plane_crossing(*yorb.dense, t / 2.0, horizon, zt, Xt, t);
  if (!s) fail(errc::no_crossing, "no forward crossing in [t/2, 2t+1]");

  // tube check: the orbit of y must stay near the orbit of x up to the
  // crossing (the reference is extended past t as needed)
  if (max_separation > 0) {
    TrajectorySegment ref_ext;
    bool have_ext = false;
    int checks = 64;
    for (int i = 0; i <= checks; ++i) {
      double u = *s * (static_cast<double>(i) / checks);
      Vec ry;
      if (u <= t) {
        ry = ref.at(u);
      } else {
        if (!have_ext) {
          ref_ext = integrate(model, zt, horizon - t, tol);
          have_ext = true;
        }
        ry = ref_ext.at(u - t);
      }
      double sep = (yorb.at(u) - ry).norm();
      if (sep > max_separation)
        fail(errc::left_domain,
             "orbit separated " + std::to_string(sep) + " from the reference");
    }
  }

  SectionCrossing out;
  out.time = *s;
  out.point = yorb.at(*s);
  return out;
}

ShrinkProbe shrink_probe(const VectorFieldModel& model, const Vec& x, double C,
                         double eta, double T, double r, double horizon, int n_samples,
                         Tol tol, ExecMode mode) {
  if (!(C > 0) || !(eta > 0)) fail(errc::bad_parameters, "C and eta must be positive");
  if (!(r > 0)) fail(errc::bad_parameters, "radius must be positive");
  PartitionSchedule schedule = uniform_schedule(horizon, T);
  const std::size_t n = schedule.legs();

  // Chain with rescaled leg norms: gives the marching targets p_i and lets
  // us re-check the claimed (C, eta, T) contraction along the horizon.
  ChainProduct chain = chain_product(model, x, schedule, true, tol, mode);
  ShrinkProbe out;
  out.premise_ok = true;
  double running = 0;
  for (std::size_t i = 0; i < n; ++i) {
    running += chain.leg_log[i];
    if (running > std::log(C) - eta * schedule.times[i + 1] + 1e-9)
      out.premise_ok = false;
  }

  NormalBasis nb = normal_basis(model, x);
  double xn = nb.field.norm();
  const int dm1 = model.dim - 1;
  int ns = (dm1 == 1) ? 2 : std::max(3, n_samples);

  // ring of boundary points of N_x(r |X(x)|)
  std::vector<Vec> samples(ns);
  for (int k = 0; k < ns; ++k) {
    Vec u = Vec::Zero(dm1);
    if (dm1 == 1) {
      u(0) = (k == 0) ? 1.0 : -1.0;
    } else {
      double th = 2.0 * M_PI * k / ns;
      u(0) = std::cos(th);
      u(1) = std::sin(th);
    }
    samples[k] = x + r * xn * (nb.vectors * u);
  }

  auto ring_diameter = [&](const std::vector<Vec>& pts) {
    double d = 0;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        d = std::max(d, (pts[a] - pts[b]).norm());
    return d;
  };

  out.initial_diameter = ring_diameter(samples);

  for (std::size_t stage = 1; stage <= n && !out.left_domain; ++stage) {
    double dt = schedule.times[stage] - schedule.times[stage - 1];
    const Vec& target = chain.points[stage];
    Vec Xtgt = model.eval(target);
    double tgt_norm = Xtgt.norm();
    double local_horizon = 2.0 * dt + 0.5;

    std::vector<Vec> next(ns);
    std::vector<int> status(ns, 0);  // 0 ok, 1 left domain
    parallel_for(static_cast<std::size_t>(ns), mode, [&](std::size_t k) {
      TrajectorySegment orb = integrate(model, samples[k], local_horizon, tol);
      auto s = plane_crossing(*orb.dense, 0.25 * dt, local_horizon, target, Xtgt, dt);
      if (!s) {
        status[k] = 1;
        return;
      }
      Vec pt = orb.at(*s);
      if ((pt - target).norm() > 0.5 * tgt_norm) {
        status[k] = 1;
        return;
      }
      next[k] = pt;
    });
    for (int k = 0; k < ns; ++k)
      if (status[k] != 0) {
        out.left_domain = true;
        out.fail_radius = r;
      }
    if (out.left_domain) break;

    samples = std::move(next);
    out.times.push_back(schedule.times[stage]);
    double diam = ring_diameter(samples);
    out.diameters.push_back(diam);
    out.rescaled_diameters.push_back(diam / tgt_norm);
    if (diam < 0.1 * out.initial_diameter) out.shrinks = true;
  }
  if (out.left_domain) out.shrinks = false;
  return out;
}

}  // namespace sflow

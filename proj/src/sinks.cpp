#include "sflow/sinks.hpp"

#include <cmath>

namespace sflow {

PeriodicOrbit refine_orbit(const VectorFieldModel& model, const Vec& guess,
                           double period_guess, Tol tol, int max_iter) {
  if (!(period_guess > 1e-6)) fail(errc::bad_parameters, "period guess must be positive");
  Vec X0 = model.eval(guess);
  if (!(X0.norm() > 1e-12)) fail(errc::singular_point, "guess is a singularity");
  const int d = model.dim;

  // Section fixed for all iterations: through the guess, orthogonal to the
  // field there.
  const Vec nhat = X0 / X0.norm();
  const Mat B = householder_complement(nhat);

  Vec y = guess;
  double tau = period_guess;
  for (int iter = 0; iter < max_iter; ++iter) {
    FlowTangent ft = flow_with_tangent(model, y, 1.75 * tau, tol);
    auto s = plane_crossing(*ft.traj.dense, 0.4 * tau, 1.75 * tau, guess, nhat, tau);
    if (!s) fail(errc::no_convergence, "return crossing lost during refinement");

    Vec joint = ft.traj.dense->eval(*s);
    Vec P = joint.head(d);
    Mat Phi = Eigen::Map<const Mat>(joint.data() + d, d, d);
    Vec res = P - y;

    if (res.norm() <= 1e-10 * std::max(1.0, y.norm())) {
      PeriodicOrbit orbit;
      orbit.anchor = y;
      orbit.period = *s;
      orbit.residual = res.norm();
      return orbit;
    }

    Vec XP = model.eval(P);
    double denom = nhat.dot(XP);
    if (std::abs(denom) <= 1e-12 * XP.norm())
      fail(errc::singular_jacobian, "return orbit tangent to the section");
    // derivative of the return map on the section: project the tangent flow
    // along the flow direction at arrival
    Mat DP = B.transpose() * (Phi - XP * (nhat.transpose() * Phi) / denom) * B;
    Mat A = DP - Mat::Identity(d - 1, d - 1);
    Eigen::FullPivLU<Mat> lu(A);
    lu.setThreshold(1e-10);
    // the LU threshold is relative to the largest pivot, so a uniformly
    // neutral return map (DP ~ I) still passes it; catch that absolutely
    if (!lu.isInvertible() || lu.maxPivot() <= 1e-8)
      fail(errc::singular_jacobian, "return map has a unit-eigenvalue direction");
    Vec delta = lu.solve(-(B.transpose() * res));
    if (!delta.allFinite() || delta.norm() > 5.0 * (1.0 + y.norm()))
      fail(errc::no_convergence, "Newton step diverged");
    y += B * delta;
    tau = *s;
  }
  fail(errc::no_convergence, "no fixed point after the iteration limit");
}

SinkCertificate certify_sink(const VectorFieldModel& model, const PeriodicOrbit& orbit,
                             double alpha, double T, int m_max, int phases, Tol tol,
                             ExecMode mode) {
  if (!(orbit.period > 0)) fail(errc::bad_parameters, "orbit has no period");
  if (!(orbit.residual <= 1e-8))
    fail(errc::bad_parameters, "orbit is not refined (residual > 1e-8)");
  if (!(alpha > 0) || !(T > 0)) fail(errc::bad_parameters, "alpha and T must be positive");
  if (m_max < 1 || phases < 1) fail(errc::bad_parameters, "bad m_max or phases");

  const double P = orbit.period;

  // equally spaced starting phases, marched serially around the orbit
  std::vector<Vec> anchors(static_cast<std::size_t>(phases));
  anchors[0] = orbit.anchor;
  for (int j = 1; j < phases; ++j)
    anchors[static_cast<std::size_t>(j)] =
        integrate(model, anchors[static_cast<std::size_t>(j - 1)], P / phases, tol).back();

  SinkCertificate cert;
  cert.orbit = orbit;
  cert.alpha = alpha;
  cert.T = T;
  cert.phases = phases;
  cert.achieved_exponent = -std::numeric_limits<double>::infinity();

  for (int m = 1; m <= m_max; ++m) {
    PartitionSchedule sched = uniform_schedule(m * P, T);
    std::vector<double> logs(static_cast<std::size_t>(phases), 0.0);
    std::vector<std::vector<double>> norms(static_cast<std::size_t>(phases));
    parallel_for(static_cast<std::size_t>(phases), mode, [&](std::size_t j) {
      ChainProduct cp =
          chain_product(model, anchors[j], sched, false, tol, ExecMode::serial);
      logs[j] = cp.log_product;
      norms[j] = cp.leg_norms;
    });
    std::size_t worst = 0;
    for (std::size_t j = 1; j < logs.size(); ++j)
      if (logs[j] > logs[worst]) worst = j;
    double worst_log = logs[worst];
    double bound = -alpha * m * P;
    cert.margins.push_back(worst_log - bound);
    cert.achieved_exponent = std::max(cert.achieved_exponent, -worst_log / (m * P));

    cert.schedule = sched;
    cert.leg_norms = norms[worst];
    cert.phase_logs = logs;
    cert.log_product = worst_log;
    if (worst_log <= bound + 1e-12 * std::max(1.0, std::abs(bound))) {
      cert.certified = true;
      cert.m = m;
      break;
    }
  }
  return cert;
}

ContractedPoint extract_contracted_point(const VectorFieldModel& model,
                                         const SinkCertificate& cert, double eta,
                                         Tol tol, ExecMode mode) {
  if (!cert.certified) fail(errc::bad_parameters, "certificate is not certified");
  if (!(eta > 0) || !(eta < cert.alpha))
    fail(errc::bad_parameters, "need 0 < eta < alpha");

  ChainProduct chain =
      chain_product(model, cert.orbit.anchor, cert.schedule, true, tol, mode);
  WeightSequence seq;
  seq.values = chain.leg_log;
  seq.durations.resize(cert.schedule.legs());
  for (std::size_t i = 0; i < seq.durations.size(); ++i)
    seq.durations[i] = cert.schedule.times[i + 1] - cert.schedule.times[i];

  int copies = std::max(2, static_cast<int>(std::ceil(8.0 / cert.m)));
  std::vector<int> offsets = pliss_point(seq, eta, copies);
  if (offsets.empty())
    fail(errc::no_pliss_point, "no qualifying offset despite a certified sink");

  const int k = offsets.front();
  ContractedPoint out;
  out.point = chain.points[static_cast<std::size_t>(k)];
  out.offset = k;
  out.time_offset = cert.schedule.times[static_cast<std::size_t>(k)];
  out.schedule = cert.schedule;  // uniform legs, so the shifted grid is identical
  out.C = 1.0;
  const std::size_t n = seq.size();
  out.legs.values.resize(n);
  out.legs.durations.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.legs.values[i] = seq.values[(i + static_cast<std::size_t>(k)) % n];
    out.legs.durations[i] = seq.durations[(i + static_cast<std::size_t>(k)) % n];
  }
  return out;
}

double verify_contracted(const VectorFieldModel& model, const Vec& x, double C,
                         double eta, const PartitionSchedule& schedule, Tol tol,
                         ExecMode mode) {
  if (!(C > 0)) fail(errc::bad_parameters, "C must be positive");
  ChainProduct chain = chain_product(model, x, schedule, true, tol, mode);
  double run = 0, worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < chain.leg_log.size(); ++i) {
    run += chain.leg_log[i];
    worst = std::max(worst, run + eta * schedule.times[i + 1] - std::log(C));
  }
  return worst;
}

ShiftResult shift_to_uniform_scale(const VectorFieldModel& model, const Vec& x, double C,
                                   double eta, double T, double horizon, Tol tol,
                                   ExecMode mode) {
  if (!(C > 0) || !(eta > 0) || !(T > 0))
    fail(errc::bad_parameters, "C, eta, T must be positive");
  ShiftResult out;
  out.z = x;
  auto n = static_cast<long long>(std::floor(horizon / T + 1e-12));
  if (n < 1) return out;  // horizon shorter than one leg: nothing to witness

  PartitionSchedule sched = uniform_schedule(static_cast<double>(n) * T, T);
  ChainProduct chain = chain_product(model, x, sched, true, tol, mode);
  WeightSequence seq;
  seq.values = chain.leg_log;
  seq.durations.assign(static_cast<std::size_t>(n), T);

  auto sel = find_tail_offset(seq, -eta * T / 2.0);
  if (!sel) return out;

  const auto L = static_cast<std::size_t>(sel->L);
  out.z = chain.points[L];
  out.offset = sel->L;
  out.shift_time = sched.times[L];
  out.success = true;

  // empirical constant at the halved rate: max over the forward prefixes of z
  double run = 0, worst = 0;
  for (std::size_t i = L; i < chain.leg_log.size(); ++i) {
    run += chain.leg_log[i];
    worst = std::max(worst, run + (eta / 2.0) * T * static_cast<double>(i + 1 - L));
  }
  out.measured_C = std::exp(worst);
  return out;
}

}  // namespace sflow

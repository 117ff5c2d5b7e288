#include "sflow/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "sflow/flow.hpp"
#include "sflow/pliss.hpp"
#include "sflow/poincare.hpp"
#include "sflow/sinks.hpp"
#include "sflow/splitting.hpp"

namespace sflow {

namespace {

using njson = nlohmann::ordered_json;

const std::set<std::string>& experiment_names() {
  static const std::set<std::string> names = {
      "classify",    "certify_sink",      "pliss_extract", "splitting", "cone_claim",
      "disk_intersection", "entry_time", "shrink_probe",  "pipeline"};
  return names;
}

double req_num(const njson& p, const std::string& key) {
  if (!p.contains(key)) fail(errc::config_error, "missing parameter: " + key);
  if (!p[key].is_number()) fail(errc::config_error, "parameter must be a number: " + key);
  return p[key].get<double>();
}

double opt_num(const njson& p, const std::string& key, double def) {
  if (!p.contains(key)) return def;
  if (!p[key].is_number()) fail(errc::config_error, "parameter must be a number: " + key);
  return p[key].get<double>();
}

long long opt_int(const njson& p, const std::string& key, long long def) {
  if (!p.contains(key)) return def;
  if (!p[key].is_number_integer()) fail(errc::config_error, "parameter must be an integer: " + key);
  return p[key].get<long long>();
}

Vec json_vec(const njson& a, const std::string& key) {
  if (!a.is_array() || a.empty()) fail(errc::config_error, "parameter must be an array: " + key);
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) fail(errc::config_error, "parameter must be numeric: " + key);
    v[static_cast<int>(i)] = a[i].get<double>();
  }
  return v;
}

Vec req_vec(const njson& p, const std::string& key) {
  if (!p.contains(key)) fail(errc::config_error, "missing parameter: " + key);
  return json_vec(p[key], key);
}

njson vec_json(const Vec& v) {
  njson a = njson::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

njson eig_json(const Eigen::VectorXcd& ev) {
  njson a = njson::array();
  for (int i = 0; i < ev.size(); ++i) a.push_back(njson::array({ev[i].real(), ev[i].imag()}));
  return a;
}

njson table(std::vector<std::string> columns, std::vector<std::vector<double>> rows) {
  njson t;
  t["columns"] = columns;
  njson r = njson::array();
  for (auto& row : rows) {
    njson jr = njson::array();
    for (double v : row) jr.push_back(v);
    r.push_back(jr);
  }
  t["rows"] = r;
  return t;
}

ExecMode exec_mode(const ScenarioConfig& c) {
  if (c.exec == "serial") return ExecMode::serial;
  if (c.exec == "parallel") return ExecMode::parallel;
  fail(errc::config_error, "exec must be \"serial\" or \"parallel\": " + c.exec);
}

Vec sigma_for(const VectorFieldModel& model, const njson& p) {
  if (p.contains("sigma")) return req_vec(p, "sigma");
  if (model.singularities.empty())
    fail(errc::config_error, "model has no built-in singularity; missing parameter: sigma");
  return model.singularities.front();
}

// Resolve a periodic-orbit guess (config override or per-model default) and
// refine it.  Models with a continuum of cycles defeat the Newton step with a
// unit eigenvalue; if the raw guess already closes up to tight tolerance we
// accept it as-is so such models can still be (honestly) scored.
PeriodicOrbit orbit_for(const VectorFieldModel& model, const njson& p, Tol tol) {
  Vec guess;
  double period = 0;
  if (p.contains("orbit_guess")) {
    guess = req_vec(p, "orbit_guess");
    period = req_num(p, "period_guess");
  } else if (model.name == "hopf" || model.name == "shrinking_hopf") {
    double mu = model.params.at("mu");
    if (mu <= 0) fail(errc::config_error, "no periodic orbit at mu <= 0");
    guess = Vec::Zero(model.dim);
    guess[0] = std::sqrt(mu);
    period = 2 * M_PI;
  } else if (model.name == "rotation") {
    guess = Vec::Zero(2);
    guess[0] = 1;
    period = 2 * M_PI;
  } else if (model.name == "lorenz") {
    guess = Vec(3);
    guess << -13.7636106821, -19.5787519424, 27.0;
    period = 1.5586522107;
  } else {
    fail(errc::config_error,
         "no default orbit for model " + model.name + "; missing parameter: orbit_guess");
  }
  try {
    return refine_orbit(model, guess, period, tol);
  } catch (const Error& e) {
    if (e.code() != errc::singular_jacobian) throw;
    double res = (integrate(model, guess, period, tol).back() - guess).norm();
    if (res <= 1e-8 * std::max(1.0, guess.norm())) return {guess, period, res};
    throw;
  }
}

std::vector<Vec> sample_region(const VectorFieldModel& model, const SplittingReport& rep,
                               double alpha, double beta, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec> out;
  for (int tries = 0; tries < 400 * n && static_cast<int>(out.size()) < n; ++tries) {
    double s = (u01(rng) < 0.5 ? -1 : 1) * (0.15 + 0.75 * u01(rng)) * beta;
    Vec e(model.dim - 1);
    for (int i = 0; i < e.size(); ++i) e[i] = g(rng);
    if (e.norm() < 1e-300) e[0] = 1;
    e.normalize();
    Vec z = rep.sigma + s * rep.F_vector +
            (0.05 * alpha * std::abs(s) * u01(rng)) * (rep.E_basis * e);
    if (region_membership(model, rep, alpha, beta, z)) out.push_back(z);
  }
  return out;
}

void run_classify(const ScenarioConfig& cfg, const VectorFieldModel& model, njson& results,
                  njson& /*series*/, njson& verdicts) {
  Vec sigma = sigma_for(model, cfg.params);
  SingularityClass cls = classify_singularity(model, sigma);
  results["sigma"] = vec_json(sigma);
  results["eigenvalues"] = eig_json(cls.eigenvalues);
  results["max_real_part"] = cls.max_real_part;
  results["hyperbolic"] = cls.hyperbolic;
  results["sectionally_dissipative"] = cls.sectionally_dissipative;
  verdicts["sectionally_dissipative"] = cls.sectionally_dissipative;
}

void run_certify(const ScenarioConfig& cfg, const VectorFieldModel& model, njson& results,
                 njson& series, njson& verdicts) {
  const njson& p = cfg.params;
  Tol tol{cfg.tol, cfg.tol};
  PeriodicOrbit orbit = orbit_for(model, p, tol);
  double alpha = req_num(p, "alpha");
  double T = opt_num(p, "T", 1.0);
  int m_max = static_cast<int>(opt_int(p, "m_max", 8));
  int phases = static_cast<int>(opt_int(p, "phases", 16));
  SinkCertificate cert = certify_sink(model, orbit, alpha, T, m_max, phases, tol, exec_mode(cfg));

  results["period"] = orbit.period;
  results["orbit_residual"] = orbit.residual;
  results["alpha"] = alpha;
  results["T"] = T;
  results["certified"] = cert.certified;
  results["m"] = cert.m;
  results["log_product"] = cert.log_product;
  results["achieved_exponent"] = cert.achieved_exponent;
  njson margins = njson::array();
  for (double v : cert.margins) margins.push_back(v);
  results["margins"] = margins;

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < cert.leg_norms.size(); ++i)
    rows.push_back({static_cast<double>(i), cert.schedule.times[i + 1],
                    std::log(cert.leg_norms[i])});
  series["leg_norms"] = table({"i", "t_i", "log_psi"}, rows);
  verdicts["certified"] = cert.certified;
}

void run_pliss_extract(const ScenarioConfig& cfg, const VectorFieldModel& model, njson& results,
                       njson& series, njson& verdicts) {
  const njson& p = cfg.params;
  Tol tol{cfg.tol, cfg.tol};
  ExecMode mode = exec_mode(cfg);
  PeriodicOrbit orbit = orbit_for(model, p, tol);
  double alpha = req_num(p, "alpha");
  double T = opt_num(p, "T", 1.0);
  double eta = req_num(p, "eta");
  SinkCertificate cert = certify_sink(model, orbit, alpha, T,
                                      static_cast<int>(opt_int(p, "m_max", 8)),
                                      static_cast<int>(opt_int(p, "phases", 16)), tol, mode);
  results["certified"] = cert.certified;
  verdicts["certified"] = cert.certified;
  if (!cert.certified) {
    verdicts["extracted"] = false;
    return;
  }
  ContractedPoint cp = extract_contracted_point(model, cert, eta, tol, mode);
  double defect = verify_contracted(model, cp.point, cp.C, eta, cp.schedule, tol, mode);
  results["point"] = vec_json(cp.point);
  results["offset"] = cp.offset;
  results["time_offset"] = cp.time_offset;
  results["C"] = cp.C;
  results["eta"] = eta;
  results["verify_defect"] = defect;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < cp.legs.values.size(); ++i)
    rows.push_back({static_cast<double>(i), cp.schedule.times[i + 1], cp.legs.values[i]});
  series["extracted_legs"] = table({"i", "t_i", "log_psi_star"}, rows);
  verdicts["extracted"] = true;
  verdicts["re_verified"] = defect <= 1e-6;

  if (p.contains("shift_horizon")) {
    ShiftResult sr = shift_to_uniform_scale(model, cp.point, cp.C, eta, T,
                                            req_num(p, "shift_horizon"), tol, mode);
    njson sj;
    sj["success"] = sr.success;
    sj["offset"] = sr.offset;
    sj["shift_time"] = sr.shift_time;
    sj["measured_C"] = sr.measured_C;
    sj["z"] = vec_json(sr.z);
    results["shift"] = sj;
  }
}

void run_splitting(const ScenarioConfig& cfg, const VectorFieldModel& model, njson& results,
                   njson& series, njson& verdicts) {
  const njson& p = cfg.params;
  Vec sigma = sigma_for(model, p);
  double t_max = opt_num(p, "t_max", 3.0);
  int t_count = static_cast<int>(opt_int(p, "t_count", 12));
  if (t_max <= 0 || t_count < 2) fail(errc::config_error, "bad t_max/t_count");
  std::vector<double> grid;
  for (int k = 1; k <= t_count; ++k) grid.push_back(t_max * k / t_count);

  SplittingReport rep = split_at_singularity(model, sigma, grid);
  results["sigma"] = vec_json(sigma);
  results["eigenvalues"] = eig_json(rep.eigenvalues);
  results["lambda_F"] = rep.lambda_F;
  results["spectral_gap"] = rep.spectral_gap;
  results["F_vector"] = vec_json(rep.F_vector);
  results["fitted_C"] = rep.fitted_C;
  results["fitted_lambda"] = rep.fitted_lambda;
  results["invariance_defect"] = rep.invariance_defect;
  results["dominated"] = rep.dominated;

  std::vector<double> ratios = domination_ratio(model, sigma, rep.F_vector, grid);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back({grid[i], ratios[i]});
  series["domination_ratio"] = table({"t", "ratio"}, rows);
  verdicts["dominated"] = rep.dominated;
}

void run_cone_claim(const ScenarioConfig& cfg, const VectorFieldModel& model, njson& results,
                    njson& /*series*/, njson& verdicts) {
  const njson& p = cfg.params;
  SplittingReport rep = split_at_singularity(model, sigma_for(model, p));
  ConeClaimReport cc = cone_claim_check(
      model, rep, req_num(p, "alpha"), opt_num(p, "T_step", 1.0), opt_num(p, "eps", 0.02),
      static_cast<int>(opt_int(p, "trials", 1000)), opt_num(p, "radius", -1.0), cfg.seed,
      Tol{cfg.tol, cfg.tol}, exec_mode(cfg));
  results["alpha"] = cc.alpha;
  results["T_step"] = cc.T_step;
  results["eps"] = cc.eps;
  results["radius"] = cc.radius;
  results["trials"] = cc.trials;
  results["item1_failures"] = cc.item1_failures;
  results["item2_failures"] = cc.item2_failures;
  results["min_expansion"] = cc.min_expansion;
  results["worst_cone_ratio"] = cc.worst_cone_ratio;
  njson cex = njson::array();
  for (auto& [x, y] : cc.counterexamples)
    cex.push_back(njson{{"x", vec_json(x)}, {"y", vec_json(y)}});
  results["counterexamples"] = cex;
  verdicts["cone_invariant"] = cc.item1_failures == 0;
  verdicts["doubling"] = cc.item2_failures == 0;
}

void run_disk(const ScenarioConfig& cfg, const VectorFieldModel& model, njson& results,
              njson& series, njson& verdicts) {
  const njson& p = cfg.params;
  SplittingReport rep = split_at_singularity(model, sigma_for(model, p));
  double beta = opt_num(p, "beta", 0.1);
  double delta = opt_num(p, "delta", 0.2);
  double arclength = opt_num(p, "arclength", std::max(0.4, 2 * beta));
  int order = static_cast<int>(opt_int(p, "order", 8));
  int n_z = static_cast<int>(opt_int(p, "n", 100));

  DiskConstants dc = measure_disk_constants(model, rep, 1.0, beta,
                                            static_cast<int>(opt_int(p, "n_const", 500)),
                                            cfg.seed);
  double alpha = opt_num(p, "alpha", -1.0);
  if (alpha <= 0)
    alpha = opt_num(p, "alpha_factor", 0.9) * delta * dc.disk_extent /
            std::max(dc.ratio_E, 1e-300);
  ManifoldCurve plus = approximate_WF(model, rep, CurveSide::plus, arclength, order);
  ManifoldCurve minus = approximate_WF(model, rep, CurveSide::minus, arclength, order);

  std::mt19937_64 rng(cfg.seed);
  std::vector<Vec> zs = sample_region(model, rep, alpha, beta, n_z, rng);
  int hits = 0;
  double max_dist = 0;
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < zs.size(); ++j) {
    DiskHit a = disk_meets_WF(model, rep, plus, zs[j], delta);
    DiskHit b = disk_meets_WF(model, rep, minus, zs[j], delta);
    const DiskHit& best = a.distance <= b.distance ? a : b;
    if (best.hit) ++hits;
    max_dist = std::max(max_dist, best.distance);
    rows.push_back({static_cast<double>(j), best.distance});
  }
  results["c"] = dc.ratio_E;
  results["c0"] = dc.disk_extent;
  results["alpha_used"] = alpha;
  results["beta"] = beta;
  results["delta"] = delta;
  results["sampled"] = static_cast<int>(zs.size());
  results["hits"] = hits;
  results["max_distance"] = max_dist;
  results["curve_validated"] = plus.validated && minus.validated;
  series["disk_distances"] = table({"j", "distance"}, rows);
  verdicts["all_hit"] = !zs.empty() && hits == static_cast<int>(zs.size());
}

void run_entry(const ScenarioConfig& cfg, const VectorFieldModel& model, njson& results,
               njson& series, njson& verdicts) {
  const njson& p = cfg.params;
  SplittingReport rep = split_at_singularity(model, sigma_for(model, p));
  double alpha = opt_num(p, "alpha", 0.4);
  double beta = opt_num(p, "beta", 0.1);
  double rho0 = opt_num(p, "rho0", 0.02);
  double q = opt_num(p, "q", 0.85);
  int count = static_cast<int>(opt_int(p, "count", 20));
  double L_max = opt_num(p, "L_max", 6.0);
  double dt = opt_num(p, "dt", -1.0);

  Vec dir;
  if (p.contains("direction")) {
    dir = req_vec(p, "direction");
  } else {
    dir = 2.0 * rep.E_basis.col(0) + rep.F_vector;
  }
  dir.normalize();

  std::vector<Vec> seq;
  double rho = rho0;
  for (int n = 0; n < count; ++n, rho *= q) seq.push_back(rep.sigma + rho * dir);
  EntryTimes et = entry_time_experiment(model, rep, alpha, beta, seq, L_max, dt,
                                        Tol{cfg.tol, cfg.tol}, exec_mode(cfg));

  ConeDecomp d0 = decompose(rep.E_basis, rep.F_vector, model(seq.front()));
  double ratio0 = d0.vE.norm() / std::max(d0.vF.norm(), 1e-300);
  double prediction = ratio0 > alpha ? std::log(ratio0 / alpha) / rep.spectral_gap : 0.0;

  results["alpha"] = alpha;
  results["beta"] = beta;
  results["L"] = et.L;
  results["L_prime"] = et.L_prime;
  results["prediction"] = prediction;
  results["initial_ratio"] = ratio0;
  njson fe = njson::array();
  for (double v : et.first_entry) fe.push_back(v);
  results["first_entries"] = fe;

  std::vector<std::vector<double>> rows;
  rho = rho0;
  for (int n = 0; n < count; ++n, rho *= q)
    rows.push_back({static_cast<double>(n), rho, et.first_entry[n]});
  series["entry_times"] = table({"n", "rho", "first_entry"}, rows);
  verdicts["stabilized"] = et.L >= 0 && et.L_prime > et.L;
  results["alignment_error"] = et.L >= 0 ? std::abs(et.L - prediction) : -1.0;
}

void run_shrink(const ScenarioConfig& cfg, const VectorFieldModel& model, njson& results,
                njson& series, njson& verdicts) {
  const njson& p = cfg.params;
  Vec x = req_vec(p, "x");
  double r = opt_num(p, "r", 0.1 * model(x).norm());
  ShrinkProbe probe = shrink_probe(model, x, opt_num(p, "C", 1.0), opt_num(p, "eta", 0.3),
                                   opt_num(p, "T", 1.0), r, opt_num(p, "horizon", 6.0),
                                   static_cast<int>(opt_int(p, "n_samples", 8)),
                                   Tol{cfg.tol, cfg.tol}, exec_mode(cfg));
  results["initial_diameter"] = probe.initial_diameter;
  results["final_diameter"] = probe.diameters.back();
  results["shrinks"] = probe.shrinks;
  results["premise_ok"] = probe.premise_ok;
  results["left_domain"] = probe.left_domain;
  if (probe.left_domain) results["fail_radius"] = probe.fail_radius;
  std::vector<std::vector<double>> rows, rrows;
  for (std::size_t i = 0; i < probe.times.size(); ++i) {
    rows.push_back({probe.times[i], probe.diameters[i]});
    rrows.push_back({probe.times[i], probe.rescaled_diameters[i]});
  }
  series["shrink_probe"] = table({"t", "diameter"}, rows);
  series["shrink_probe_rescaled"] = table({"t", "diameter"}, rrows);
  verdicts["shrinks"] = probe.shrinks;
}

void run_pipeline(const ScenarioConfig& cfg, njson& results, njson& series, njson& verdicts) {
  const njson& p = cfg.params;
  Tol tol{cfg.tol, cfg.tol};
  ExecMode mode = exec_mode(cfg);

  const double mu0 = opt_num(p, "mu0", 0.5);
  const double kappa = opt_num(p, "kappa", 0.7);
  const int family = static_cast<int>(opt_int(p, "family", 5));
  const double T = opt_num(p, "T", 1.0);
  const double alpha_factor = opt_num(p, "alpha_factor", 0.9);
  const double eta_factor = opt_num(p, "eta_factor", 0.5);
  const double shift_horizon = opt_num(p, "shift_horizon", 8.0);
  const double aF = opt_num(p, "aF", 0.3);
  const double alpha_entry = opt_num(p, "alpha_entry", 0.4);
  const double beta = opt_num(p, "beta", 0.1);
  const double delta = opt_num(p, "delta", 0.2);
  const double L_max = opt_num(p, "L_max", 6.0);
  const double arclength = opt_num(p, "arclength", 0.4);
  const int order = static_cast<int>(opt_int(p, "order", 8));
  const int n_z = static_cast<int>(opt_int(p, "n_z", 40));

  njson stages = njson::array();
  bool ok = true;
  auto record_error = [&](const std::string& name, const Error& e) {
    stages.push_back(njson{{"stage", name},
                           {"ok", false},
                           {"error", njson{{"code", errc_name(e.code())}, {"message", e.what()}}}});
    ok = false;
  };

  // Stage 1+2+3 per family member: certify a shrinking cycle, pull out a
  // contracted point, shift it toward uniform scale.  The members have
  // shrinking contraction exponents (2*mu_n), so each is certified against
  // its own attainable alpha rather than one fixed rate.
  struct Member {
    double mu = 0, alpha = 0, eta = 0, rho = 0;
    bool certified = false, shifted = false;
  };
  std::vector<Member> members(family);
  njson mem_json = njson::array();
  for (int n = 0; n < family; ++n) {
    Member& mb = members[n];
    mb.mu = mu0 * std::pow(0.25, n);
    mb.alpha = alpha_factor * 2 * mb.mu;
    mb.eta = eta_factor * mb.alpha;
    njson mj;
    mj["n"] = n;
    mj["mu"] = mb.mu;
    mj["alpha"] = mb.alpha;
    try {
      VectorFieldModel fm = make_model("shrinking_hopf", {{"mu", mb.mu}, {"kappa", kappa}});
      Vec guess = Vec::Zero(3);
      guess[0] = std::sqrt(mb.mu);
      PeriodicOrbit orbit = refine_orbit(fm, guess, 2 * M_PI, tol);
      SinkCertificate cert = certify_sink(fm, orbit, mb.alpha, T, 8, 8, tol, mode);
      mb.certified = cert.certified;
      mj["certified"] = cert.certified;
      mj["exponent"] = cert.achieved_exponent;
      if (cert.certified) {
        ContractedPoint cp = extract_contracted_point(fm, cert, mb.eta, tol, mode);
        ShiftResult sr = shift_to_uniform_scale(fm, cp.point, cp.C, mb.eta, T, shift_horizon,
                                                tol, mode);
        Vec z = sr.success ? sr.z : cp.point;
        mb.shifted = sr.success;
        mb.rho = z.norm();  // distance to the shrinking family's singular regime
        mj["shifted"] = sr.success;
        mj["rho"] = mb.rho;
      }
    } catch (const Error& e) {
      mj["ok"] = false;
      mj["error"] = njson{{"code", errc_name(e.code())}, {"message", e.what()}};
      ok = false;
    }
    mem_json.push_back(mj);
  }
  stages.push_back(njson{{"stage", "certify_extract_shift"}, {"ok", ok}, {"members", mem_json}});

  std::vector<double> rhos;
  for (const Member& mb : members)
    if (mb.certified && mb.rho > 0) rhos.push_back(mb.rho);

  // Stage 4: re-seat the shrinking scales near the target model's
  // sectionally dissipative singularity and measure entry times into the
  // cone-like region.
  VectorFieldModel target = make_model("model_ode", {{"aF", aF}});
  SplittingReport rep;
  bool have_split = false;
  try {
    rep = split_at_singularity(target, Vec::Zero(3));
    have_split = true;
    njson sj;
    sj["stage"] = "target_splitting";
    sj["ok"] = true;
    sj["lambda_F"] = rep.lambda_F;
    sj["spectral_gap"] = rep.spectral_gap;
    sj["dominated"] = rep.dominated;
    stages.push_back(sj);
  } catch (const Error& e) {
    record_error("target_splitting", e);
  }

  if (have_split && rhos.size() >= 2) {
    try {
      Vec dir = 2.0 * rep.E_basis.col(0) + rep.F_vector;
      dir.normalize();
      std::vector<Vec> seq;
      for (double r : rhos) seq.push_back(rep.sigma + r * dir);
      EntryTimes et = entry_time_experiment(target, rep, alpha_entry, beta, seq, L_max, -1,
                                            tol, mode);
      ConeDecomp d0 = decompose(rep.E_basis, rep.F_vector, target(seq.front()));
      double ratio0 = d0.vE.norm() / std::max(d0.vF.norm(), 1e-300);
      double prediction = ratio0 > alpha_entry
                              ? std::log(ratio0 / alpha_entry) / rep.spectral_gap
                              : 0.0;
      njson ej;
      ej["stage"] = "entry_time";
      ej["ok"] = et.L >= 0;
      ej["L"] = et.L;
      ej["L_prime"] = et.L_prime;
      ej["prediction"] = prediction;
      stages.push_back(ej);
      if (et.L < 0) ok = false;

      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < rhos.size(); ++i)
        rows.push_back({static_cast<double>(i), rhos[i], et.first_entry[i]});
      series["pipeline_entry"] = table({"n", "rho", "first_entry"}, rows);
    } catch (const Error& e) {
      record_error("entry_time", e);
    }
  } else if (have_split) {
    stages.push_back(njson{{"stage", "entry_time"},
                           {"ok", false},
                           {"error", njson{{"code", "BadParameters"},
                                           {"message", "fewer than two certified members"}}}});
    ok = false;
  }

  // Stage 5: normal disks along region points meet the invariant curve, for
  // the aperture suggested by the measured constants.
  if (have_split) {
    try {
      DiskConstants dc = measure_disk_constants(target, rep, 1.0, beta, 400, cfg.seed);
      double alpha_used = opt_num(p, "hit_factor", 0.9) * delta * dc.disk_extent /
                          std::max(dc.ratio_E, 1e-300);
      ManifoldCurve plus = approximate_WF(target, rep, CurveSide::plus, arclength, order);
      ManifoldCurve minus = approximate_WF(target, rep, CurveSide::minus, arclength, order);
      std::mt19937_64 rng(cfg.seed + 777);
      std::vector<Vec> zs = sample_region(target, rep, alpha_used, beta, n_z, rng);
      int hits = 0;
      for (const Vec& z : zs) {
        DiskHit a = disk_meets_WF(target, rep, plus, z, delta);
        DiskHit b = disk_meets_WF(target, rep, minus, z, delta);
        if (a.hit || b.hit) ++hits;
      }
      njson dj;
      dj["stage"] = "disk_intersection";
      dj["c"] = dc.ratio_E;
      dj["c0"] = dc.disk_extent;
      dj["alpha_used"] = alpha_used;
      dj["sampled"] = static_cast<int>(zs.size());
      dj["hits"] = hits;
      dj["ok"] = !zs.empty() && hits == static_cast<int>(zs.size());
      if (!dj["ok"].get<bool>()) ok = false;
      stages.push_back(dj);
    } catch (const Error& e) {
      record_error("disk_intersection", e);
    }
  }

  results["stages"] = stages;
  verdicts["pipeline_ok"] = ok;
}

}  // namespace

ScenarioConfig parse_config(const nlohmann::ordered_json& j) {
  if (!j.is_object()) fail(errc::config_error, "config must be a JSON object");
  ScenarioConfig c;
  c.raw = j;
  if (!j.contains("model") || !j["model"].is_object() || !j["model"].contains("name") ||
      !j["model"]["name"].is_string())
    fail(errc::config_error, "missing field: model.name");
  c.model_name = j["model"]["name"].get<std::string>();
  if (j["model"].contains("params")) {
    if (!j["model"]["params"].is_object())
      fail(errc::config_error, "model.params must be an object");
    for (auto& [k, v] : j["model"]["params"].items()) {
      if (!v.is_number()) fail(errc::config_error, "model parameter must be a number: " + k);
      c.model_params[k] = v.get<double>();
    }
  }
  if (!j.contains("experiment") || !j["experiment"].is_string())
    fail(errc::config_error, "missing field: experiment");
  c.experiment = j["experiment"].get<std::string>();
  if (!experiment_names().count(c.experiment))
    fail(errc::config_error, "unknown experiment: " + c.experiment);
  if (j.contains("params")) {
    if (!j["params"].is_object()) fail(errc::config_error, "params must be an object");
    c.params = j["params"];
  } else {
    c.params = njson::object();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) fail(errc::config_error, "seed must be an integer");
    c.seed = j["seed"].get<unsigned long long>();
  }
  if (j.contains("tol")) {
    if (!j["tol"].is_number()) fail(errc::config_error, "tol must be a number");
    c.tol = j["tol"].get<double>();
    if (c.tol <= 0 || c.tol > 1e-2) fail(errc::config_error, "tol out of range");
  }
  if (j.contains("timestamp")) {
    if (!j["timestamp"].is_boolean()) fail(errc::config_error, "timestamp must be a boolean");
    c.timestamp = j["timestamp"].get<bool>();
  }
  if (j.contains("exec")) {
    if (!j["exec"].is_string()) fail(errc::config_error, "exec must be a string");
    c.exec = j["exec"].get<std::string>();
    exec_mode(c);  // validate
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) fail(errc::config_error, "out must be a string");
    c.out_dir = j["out"].get<std::string>();
  }
  for (auto& [k, v] : j.items()) {
    (void)v;
    static const std::set<std::string> known = {"model",     "experiment", "params",
                                               "seed",      "tol",        "timestamp",
                                               "exec",      "out"};
    if (!known.count(k)) fail(errc::config_error, "unknown config field: " + k);
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::config_error, "cannot open config file: " + path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in, nullptr, true, true);
  } catch (const std::exception& e) {
    fail(errc::config_error, std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

RunReport run(const ScenarioConfig& config) {
  RunReport rep;
  njson& doc = rep.doc;
  doc["schema_version"] = 1;
  doc["toolkit"] = njson{{"name", "sflow"}, {"version", "0.1.0"}};
  if (config.timestamp) {
    // Opt-in: wall-clock provenance breaks byte-identical reruns.
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    doc["provenance"] = njson{{"generated_at", buf}};
  }
  doc["config"] = config.raw;

  njson results = njson::object();
  njson series = njson::object();
  njson verdicts = njson::object();

  if (config.experiment == "pipeline") {
    run_pipeline(config, results, series, verdicts);
  } else {
    VectorFieldModel model = make_model(config.model_name, config.model_params);
    if (config.experiment == "classify")
      run_classify(config, model, results, series, verdicts);
    else if (config.experiment == "certify_sink")
      run_certify(config, model, results, series, verdicts);
    else if (config.experiment == "pliss_extract")
      run_pliss_extract(config, model, results, series, verdicts);
    else if (config.experiment == "splitting")
      run_splitting(config, model, results, series, verdicts);
    else if (config.experiment == "cone_claim")
      run_cone_claim(config, model, results, series, verdicts);
    else if (config.experiment == "disk_intersection")
      run_disk(config, model, results, series, verdicts);
    else if (config.experiment == "entry_time")
      run_entry(config, model, results, series, verdicts);
    else if (config.experiment == "shrink_probe")
      run_shrink(config, model, results, series, verdicts);
    else
      fail(errc::config_error, "unknown experiment: " + config.experiment);
  }

  doc["results"] = results;
  doc["series"] = series;
  doc["verdicts"] = verdicts;
  doc["status"] = "ok";
  return rep;
}

void emit_plotdata(const RunReport& report, const std::string& which,
                   const std::string& path) {
  if (!report.doc.contains("series") || !report.doc["series"].contains(which))
    fail(errc::unknown_series, "no such series in report: " + which);
  const njson& t = report.doc["series"][which];
  std::ofstream out(path);
  if (!out) fail(errc::config_error, "cannot open output file: " + path);
  std::string head;
  for (const auto& c : t["columns"]) {
    if (!head.empty()) head += ' ';
    head += c.get<std::string>();
  }
  out << head << '\n';
  char buf[64];
  for (const auto& row : t["rows"]) {
    std::string line;
    for (const auto& v : row) {
      std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
      if (!line.empty()) line += ' ';
      line += buf;
    }
    out << line << '\n';
  }
  if (!out) fail(errc::config_error, "write failed: " + path);
}

std::vector<std::string> report_series_names(const RunReport& report) {
  std::vector<std::string> names;
  if (report.doc.contains("series"))
    for (auto& [k, v] : report.doc["series"].items()) {
      (void)v;
      names.push_back(k);
    }
  return names;
}

}  // namespace sflow

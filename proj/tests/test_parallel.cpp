#include <atomic>
#include <vector>

#include "helpers.hpp"
#include "sflow/poincare.hpp"
#include "sflow/sinks.hpp"
#include "sflow/splitting.hpp"

using namespace sflow;

TEST_SUITE("parallel") {

TEST_CASE("parallel_for covers every index exactly once") {
  for (ExecMode mode : {ExecMode::serial, ExecMode::parallel}) {
    const std::size_t n = 1000;
    std::vector<std::atomic<int>> hits(n);
    for (auto& h : hits) h = 0;
    parallel_for(n, mode, [&](std::size_t i) { ++hits[i]; });
    bool all_once = true;
    for (auto& h : hits)
      if (h != 1) all_once = false;
    CHECK(all_once);

    // n = 0 must be a no-op
    parallel_for(0, mode, [&](std::size_t) { ++hits[0]; });
    CHECK(hits[0] == 1);
  }
}

TEST_CASE("exceptions thrown inside the loop surface after the join") {
  for (ExecMode mode : {ExecMode::serial, ExecMode::parallel}) {
    CHECK_THROWS_CODE(bad_parameters, parallel_for(64, mode, [&](std::size_t i) {
                        if (i == 37) fail(errc::bad_parameters, "loop body failure");
                      }));
  }
}

TEST_CASE("worker counts") {
  CHECK(worker_count(ExecMode::serial) == 1);
  CHECK(worker_count(ExecMode::parallel) >= 1);
}

TEST_CASE("chain products agree bitwise between modes") {
  VectorFieldModel m = make_model("lorenz", {});
  Vec x(3);
  x << 1.0, 1.0, 25.0;
  PartitionSchedule sched = uniform_schedule(2.0, 0.25);
  for (bool rescaled : {false, true}) {
    ChainProduct s = chain_product(m, x, sched, rescaled, {}, ExecMode::serial);
    ChainProduct p = chain_product(m, x, sched, rescaled, {}, ExecMode::parallel);
    REQUIRE(s.leg_norms.size() == p.leg_norms.size());
    for (std::size_t i = 0; i < s.leg_norms.size(); ++i) {
      CHECK(s.leg_norms[i] == p.leg_norms[i]);
      CHECK(s.leg_log[i] == p.leg_log[i]);
      CHECK(s.factors[i] == p.factors[i]);
    }
    CHECK(s.product == p.product);
    CHECK(s.log_product == p.log_product);
  }
}

TEST_CASE("sink certification agrees bitwise between modes") {
  VectorFieldModel m = make_model("hopf", {});
  Vec guess(2);
  guess << 0.75, 0.05;
  PeriodicOrbit orbit = refine_orbit(m, guess, 6.0);
  SinkCertificate s = certify_sink(m, orbit, 0.5, 1.0, 4, 8, {}, ExecMode::serial);
  SinkCertificate p = certify_sink(m, orbit, 0.5, 1.0, 4, 8, {}, ExecMode::parallel);
  CHECK(s.certified);
  CHECK(s.certified == p.certified);
  CHECK(s.m == p.m);
  CHECK(s.log_product == p.log_product);
  CHECK(s.achieved_exponent == p.achieved_exponent);
  REQUIRE(s.leg_norms.size() == p.leg_norms.size());
  for (std::size_t i = 0; i < s.leg_norms.size(); ++i) CHECK(s.leg_norms[i] == p.leg_norms[i]);
  REQUIRE(s.phase_logs.size() == p.phase_logs.size());
  for (std::size_t i = 0; i < s.phase_logs.size(); ++i) CHECK(s.phase_logs[i] == p.phase_logs[i]);
  REQUIRE(s.margins.size() == p.margins.size());
  for (std::size_t i = 0; i < s.margins.size(); ++i) CHECK(s.margins[i] == p.margins[i]);
}

TEST_CASE("cone claim trials agree bitwise between modes") {
  VectorFieldModel m = make_model("model_ode", {{"aF", 0.3}});
  SplittingReport rep = split_at_singularity(m, Vec::Zero(3));
  ConeClaimReport s =
      cone_claim_check(m, rep, 0.4, 1.0, 0.02, 300, 0.05, 99, {}, ExecMode::serial);
  ConeClaimReport p =
      cone_claim_check(m, rep, 0.4, 1.0, 0.02, 300, 0.05, 99, {}, ExecMode::parallel);
  CHECK(s.item1_failures == p.item1_failures);
  CHECK(s.item2_failures == p.item2_failures);
  CHECK(s.min_expansion == p.min_expansion);
  CHECK(s.worst_cone_ratio == p.worst_cone_ratio);
  CHECK(s.counterexamples.size() == p.counterexamples.size());
}

TEST_CASE("entry time measurements agree bitwise between modes") {
  VectorFieldModel m = make_model("model_ode", {{"aF", 0.3}});
  SplittingReport rep = split_at_singularity(m, Vec::Zero(3));
  Vec dir = (2.0 * rep.E_basis.col(0) + rep.F_vector).normalized();
  std::vector<Vec> seq;
  double rho = 0.02;
  for (int n = 0; n < 6; ++n, rho *= 0.85) seq.push_back(rep.sigma + rho * dir);
  EntryTimes s = entry_time_experiment(m, rep, 0.4, 0.1, seq, 4.0, -1, {}, ExecMode::serial);
  EntryTimes p = entry_time_experiment(m, rep, 0.4, 0.1, seq, 4.0, -1, {}, ExecMode::parallel);
  CHECK(s.L == p.L);
  CHECK(s.L_prime == p.L_prime);
  REQUIRE(s.first_entry.size() == p.first_entry.size());
  for (std::size_t i = 0; i < s.first_entry.size(); ++i)
    CHECK(s.first_entry[i] == p.first_entry[i]);
}

}  // TEST_SUITE

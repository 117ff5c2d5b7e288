// Compares the OpenMP execution path of the data-parallel kernels against
// the serial reference on representative workloads, and checks that both
// produce bit-identical results (the kernels write to per-index slots and
// reduce in index order, so they must).

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sflow/parallel.hpp"
#include "sflow/sinks.hpp"
#include "sflow/splitting.hpp"

using namespace sflow;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct BenchCase {
  std::string name;
  // Runs the kernel in the given mode; the return value is a digest of the
  // numerical output, compared bit-for-bit between modes.
  std::function<std::vector<double>(ExecMode)> run;
};

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sflow benchmark: serial reference vs OpenMP kernels"};
  int repeat = 3;
  int trials = 400;
  app.add_option("--repeat", repeat, "timed repetitions per case (best is reported)");
  app.add_option("--trials", trials, "sample count for the cone-claim case");
  CLI11_PARSE(app, argc, argv);

  VectorFieldModel hopf = make_model("hopf", {{"mu", 0.5}});
  PeriodicOrbit orbit = refine_orbit(hopf, (Vec(2) << std::sqrt(0.5), 0).finished(), 2 * M_PI);

  VectorFieldModel block = make_model("model_ode", {{"aF", 0.3}});
  SplittingReport rep = split_at_singularity(block, Vec::Zero(3));

  std::vector<BenchCase> cases;
  cases.push_back({"certify_sink (hopf, 16 phases, m<=4)", [&](ExecMode mode) {
                     SinkCertificate c = certify_sink(hopf, orbit, 3.0, 1.0, 4, 16, {}, mode);
                     std::vector<double> digest = c.phase_logs;
                     digest.push_back(c.log_product);
                     return digest;
                   }});
  cases.push_back({"shrink_probe (hopf cycle point)", [&](ExecMode mode) {
                     ShrinkProbe pr = shrink_probe(hopf, orbit.anchor, 1.0, 0.3, 1.0, 0.05,
                                                   6.0, 8, {}, mode);
                     std::vector<double> digest = pr.diameters;
                     digest.insert(digest.end(), pr.rescaled_diameters.begin(),
                                   pr.rescaled_diameters.end());
                     return digest;
                   }});
  cases.push_back({"cone_claim_check (block model)", [&](ExecMode mode) {
                     ConeClaimReport cc =
                         cone_claim_check(block, rep, 0.5, 1.0, 0.02, trials, 0.1, 7, {}, mode);
                     return std::vector<double>{cc.min_expansion, cc.worst_cone_ratio,
                                                double(cc.item1_failures),
                                                double(cc.item2_failures)};
                   }});

  std::printf("threads available: %d\n\n", worker_count(ExecMode::parallel));
  std::printf("%-38s %12s %12s %9s %10s\n", "kernel", "serial (ms)", "openmp (ms)", "speedup",
              "identical");
  bool all_identical = true;
  for (BenchCase& bc : cases) {
    std::vector<double> ref, par;
    double best_s = 1e300, best_p = 1e300;
    for (int r = 0; r < repeat; ++r) {
      auto t0 = std::chrono::steady_clock::now();
      ref = bc.run(ExecMode::serial);
      best_s = std::min(best_s, ms_since(t0));
      t0 = std::chrono::steady_clock::now();
      par = bc.run(ExecMode::parallel);
      best_p = std::min(best_p, ms_since(t0));
    }
    bool same = bits_equal(ref, par);
    all_identical = all_identical && same;
    std::printf("%-38s %12.1f %12.1f %8.2fx %10s\n", bc.name.c_str(), best_s, best_p,
                best_s / best_p, same ? "yes" : "NO");
  }
  if (!all_identical) {
    std::fprintf(stderr, "\nserial and parallel outputs differ - kernel contract broken\n");
    return 1;
  }
  return 0;
}

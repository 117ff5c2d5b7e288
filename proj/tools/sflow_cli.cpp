#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sflow/scenario.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> emit;
  long long seed = -1;
  double tol = -1;
  std::string exec;
};

int run_experiment(const std::string& experiment, const Options& opt) {
  std::ifstream in(opt.config_path);
  if (!in) {
    std::fprintf(stderr, "error: cannot open config file: %s\n", opt.config_path.c_str());
    return 2;
  }
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in, nullptr, true, true);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: config parse error: %s\n", e.what());
    return 2;
  }
  // The subcommand picks the experiment; command-line flags override the file.
  j["experiment"] = experiment;
  if (opt.seed >= 0) j["seed"] = opt.seed;
  if (opt.tol > 0) j["tol"] = opt.tol;
  if (!opt.exec.empty()) j["exec"] = opt.exec;
  if (!opt.out_dir.empty()) j["out"] = opt.out_dir;

  sflow::ScenarioConfig cfg = sflow::parse_config(j);
  sflow::RunReport report = sflow::run(cfg);

  std::string out_dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
  std::filesystem::create_directories(out_dir);
  std::string report_path = out_dir + "/report.json";
  {
    std::ofstream out(report_path);
    if (!out) {
      std::fprintf(stderr, "error: cannot write %s\n", report_path.c_str());
      return 2;
    }
    out << report.to_string();
  }
  for (const std::string& name : opt.emit)
    sflow::emit_plotdata(report, name, out_dir + "/" + name + ".dat");

  std::printf("%s: wrote %s\n", experiment.c_str(), report_path.c_str());
  for (auto& [k, v] : report.doc["verdicts"].items())
    std::printf("  %-24s %s\n", k.c_str(), v.dump().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sflow - numerical experiments on flows: sink certification, "
               "contracted-point extraction, dominated splittings"};
  app.require_subcommand(0, 1);

  Options opt;
  std::string pending;
  const std::vector<std::string> experiments = {
      "classify",    "certify_sink",      "pliss_extract", "splitting", "cone_claim",
      "disk_intersection", "entry_time", "shrink_probe",  "pipeline"};
  for (const std::string& name : experiments) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", opt.config_path, "scenario config file (JSON)")->required();
    sub->add_option("--out", opt.out_dir, "output directory (default: config 'out' or '.')");
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--tol", opt.tol, "override the integrator tolerance");
    sub->add_option("--exec", opt.exec, "serial or parallel (override)");
    sub->add_option("--emit", opt.emit, "series name(s) to write as plot data");
    sub->callback([&pending, name] { pending = name; });
  }
  CLI::App* models = app.add_subcommand("models", "list built-in models");
  models->callback([&pending] { pending = "models"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad usage is a config problem
  }

  if (pending.empty()) {
    std::cout << app.help();
    return 0;
  }
  if (pending == "models") {
    for (const std::string& name : sflow::builtin_model_names()) std::printf("%s\n", name.c_str());
    return 0;
  }

  try {
    return run_experiment(pending, opt);
  } catch (const sflow::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", sflow::errc_name(e.code()), e.what());
    return e.code() == sflow::errc::config_error ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

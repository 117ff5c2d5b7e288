#pragma once

#include <string>

#include <json.hpp>

#include "sflow/field.hpp"

namespace sflow {

// A scenario = one model + one experiment + numeric parameters, loaded from
// a JSON file (schema documented in the README).  Runs are reproducible:
// identical config + seed => byte-identical report.
struct ScenarioConfig {
  nlohmann::ordered_json raw;  // the config as given (echoed into reports)

  std::string model_name;
  std::map<std::string, double> model_params;
  std::string experiment;
  nlohmann::ordered_json params;  // experiment parameters (numbers / arrays)
  unsigned long long seed = 1;
  double tol = 1e-10;
  bool timestamp = false;  // off by default: timestamps break determinism
  std::string exec = "parallel";
  std::string out_dir;
};

ScenarioConfig parse_config(const nlohmann::ordered_json& j);
ScenarioConfig load_config(const std::string& path);

struct RunReport {
  nlohmann::ordered_json doc;

  std::string to_string() const { return doc.dump(2) + "\n"; }
};

RunReport run(const ScenarioConfig& config);

// Write one named series of the report as a plain-text table: header row of
// column names, then one whitespace-separated sample per line.
void emit_plotdata(const RunReport& report, const std::string& which,
                   const std::string& path);

std::vector<std::string> report_series_names(const RunReport& report);

}  // namespace sflow

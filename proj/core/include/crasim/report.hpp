#pragma once

#include <map>
#include <string>
#include <vector>

#include "crasim/checker.hpp"
#include "crasim/explorer.hpp"

namespace crasim::report {

// Aggregated outcome of checking one scenario (or one topology variant).
// Totals per property always equal the number of checked traces. Runtimes
// are serialized to a separate sidecar so the summary proper stays
// byte-stable across repeated runs.
struct ScenarioReport {
  std::string scenario;
  std::string variant;  // topology variant label, empty for the default
  std::uint64_t traces = 0;
  std::map<check::PropertyId, explore::PropertyCount> counts;
  std::map<check::PropertyId, std::string> witness_paths;
  std::uint64_t ordering_violations = 0;
  double runtime_seconds = 0;
};

std::string verdict_to_json(const check::Verdict& v);
std::string verdicts_to_json(const std::vector<check::Verdict>& vs);

std::string summary_to_json(const std::vector<ScenarioReport>& reports);
// One row per (scenario, property).
std::string summary_to_csv(const std::vector<ScenarioReport>& reports);
std::string timings_to_json(const std::vector<ScenarioReport>& reports);

}  // namespace crasim::report

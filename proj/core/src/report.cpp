#include "crasim/report.hpp"

#include <sstream>

#include "json.hpp"

namespace crasim::report {

using nlohmann::json;

namespace {

json verdict_json(const check::Verdict& v) {
  json j;
  j["property"] = check::property_name(v.property);
  j["result"] = check::verdict_result_name(v.result);
  if (v.witness) {
    j["witness"] = *v.witness;
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

}  // namespace

std::string verdict_to_json(const check::Verdict& v) {
  return verdict_json(v).dump();
}

std::string verdicts_to_json(const std::vector<check::Verdict>& vs) {
  json arr = json::array();
  for (const auto& v : vs) arr.push_back(verdict_json(v));
  return arr.dump();
}

std::string summary_to_json(const std::vector<ScenarioReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) {
    json jr;
    jr["scenario"] = r.scenario;
    jr["variant"] = r.variant;
    jr["traces"] = r.traces;
    jr["ordering_violations"] = r.ordering_violations;
    json props = json::object();
    for (const auto& [p, c] : r.counts) {
      props[check::property_name(p)] = {{"holds", c.holds},
                                        {"violated", c.violated},
                                        {"inapplicable", c.inapplicable}};
      auto it = r.witness_paths.find(p);
      if (it != r.witness_paths.end()) {
        props[check::property_name(p)]["witness"] = it->second;
      }
    }
    jr["properties"] = props;
    out.push_back(jr);
  }
  return out.dump(2) + "\n";
}

std::string summary_to_csv(const std::vector<ScenarioReport>& reports) {
  std::ostringstream os;
  os << "scenario,variant,property,holds,violated,inapplicable,witness\n";
  for (const auto& r : reports) {
    for (const auto& [p, c] : r.counts) {
      std::string witness;
      auto it = r.witness_paths.find(p);
      if (it != r.witness_paths.end()) witness = it->second;
      os << r.scenario << "," << r.variant << "," << check::property_name(p)
         << "," << c.holds << "," << c.violated << "," << c.inapplicable << ","
         << witness << "\n";
    }
  }
  return os.str();
}

std::string timings_to_json(const std::vector<ScenarioReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) {
    out.push_back({{"scenario", r.scenario},
                   {"variant", r.variant},
                   {"runtime_seconds", r.runtime_seconds}});
  }
  return out.dump(2) + "\n";
}

}  // namespace crasim::report

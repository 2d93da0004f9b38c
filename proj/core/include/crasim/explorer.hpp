#pragma once

#include <functional>
#include <map>

#include "crasim/checker.hpp"
#include "crasim/engine.hpp"
#include "crasim/scenario.hpp"

namespace crasim::explore {

struct PropertyCount {
  std::uint64_t holds = 0;
  std::uint64_t violated = 0;
  std::uint64_t inapplicable = 0;

  std::uint64_t total() const { return holds + violated + inapplicable; }
};

struct ExplorationResult {
  std::uint64_t schedules = 0;
  std::map<check::PropertyId, PropertyCount> counts;
  // First violating trace per property in deterministic schedule order.
  std::map<check::PropertyId, Trace> witnesses;
  std::uint64_t ordering_violations = 0;
};

struct EnumerateOptions {
  std::size_t workers = 1;
  std::uint64_t progress_every = 0;  // 0: no progress callbacks
  std::function<void(std::uint64_t)> progress;
  // Raw stream hook; called for every enumerated trace.
  std::function<void(const Trace&)> on_trace;
};

// Executes every capability-respecting adversary schedule within the
// scenario's bounds exactly once and checks the scenario's property list
// against each trace. Throws ExplorationTooLarge when the schedule count
// passes the configured cap.
ExplorationResult enumerate(const Scenario& scenario,
                            const proto::Topology& topology,
                            const EnumerateOptions& opts = {});

// Seeded uniform sampling over the same decision space; identical
// (scenario, n, seed) triples produce identical trace lists.
std::vector<Trace> random_runs(const Scenario& scenario,
                               const proto::Topology& topology, std::size_t n,
                               std::uint64_t seed);

// Shrinks a violating trace to a locally minimal adversary-decision set by
// iterative benign substitution and re-execution. Throws NotAViolation when
// the input does not violate the property.
Trace minimize(const Scenario& scenario, const proto::Topology& topology,
               const Trace& trace, check::PropertyId property,
               const check::GroupSpec& spec = {});

// Runs one scenario with its scripted adversary actions only.
Trace scripted_run(const Scenario& scenario);
Trace scripted_run(const Scenario& scenario, const proto::Topology& topology);

}  // namespace crasim::explore

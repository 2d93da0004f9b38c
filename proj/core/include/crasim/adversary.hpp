#pragma once

#include <vector>

#include "crasim/event.hpp"
#include "crasim/knowledge.hpp"

namespace crasim::net {
class Engine;
}

namespace crasim::adv {

// Intrusive physical attacks need the device offline for at least this
// long; detection mechanisms exploit it. Scenario parameter, no blessed
// default in the literature.
struct CaptureWindow {
  DeviceId device = 0;
  TimePoint begin = 0;
  TimePoint end = 0;
};

// Capability-gated adversary actions. Every state mutation goes through the
// engine and is recorded as a trace event; knowledge only ever grows.
class Adversary {
 public:
  Adversary(AdversaryFlags flags, TimePoint t_attack)
      : flags_(flags), t_attack_(t_attack) {}

  const AdversaryFlags& flags() const { return flags_; }
  TimePoint t_attack() const { return t_attack_; }

  sym::KnowledgeSet& knowledge() { return knowledge_; }
  const sym::KnowledgeSet& knowledge() const { return knowledge_; }
  void observe(const sym::Term& body);

  // Software write to the untrusted environment (or, with an active capture,
  // the trusted one). Throws RejectedAtomic inside an attestation section,
  // RejectedTrusted for trusted-state writes without capture.
  void compromise(net::Engine& eng, DeviceId p, bool target_trusted = false);
  // Mobile-software restore to the original label; warns on a no-op.
  void restore(net::Engine& eng, DeviceId p);
  // Non-intrusive extraction of all trusted-environment terms.
  void read_secrets(net::Engine& eng, DeviceId p);
  // Intrusive capture: offline window plus secret extraction; the untrusted
  // state may be rewritten at the single commit point when the window ends.
  void capture(net::Engine& eng, DeviceId p, TimePoint begin, TimePoint end,
               bool write);

  // Engine internals for window begin/end processing.
  void capture_begin(net::Engine& eng, DeviceId p, TimePoint end, bool write);
  void capture_end(net::Engine& eng, DeviceId p, bool write);

 private:
  void extract_secrets(net::Engine& eng, DeviceId p);

  AdversaryFlags flags_;
  TimePoint t_attack_;
  sym::KnowledgeSet knowledge_;
};

// Static trace checks: capability soundness of every adversary event against
// the scenario flags, timestamp monotonicity, claim-interval sanity and the
// no-out-of-thin-air rule for received bodies.
std::vector<std::string> lint_trace(const Trace& trace);

}  // namespace crasim::adv

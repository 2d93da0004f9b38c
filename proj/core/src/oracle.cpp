#include "crasim/oracle.hpp"

#include <set>

namespace crasim::check {

namespace {

bool oracle_correct(const Trace& trace, DeviceId p, Status s, TimePoint t,
                    bool strong) {
  if (s == Status::Healthy) return is_valid_state(trace, p, t);
  return !strong || !is_valid_state(trace, p, t);
}

void oracle_check_window(const Trace& trace, Interval w) {
  if (w.start > w.end || w.end > trace.last_time()) {
    throw Error(Errc::TraceError, "claim interval outside the trace horizon");
  }
}

// Claim plus every state-mutating event before it, so the witness replays
// to the same violation.
std::vector<std::size_t> oracle_witness(const Trace& trace, std::size_t claim_index) {
  std::vector<std::size_t> out;
  TimePoint until = trace.events[claim_index].at;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.at > until) break;
    if (e.as<ev::Compromise>() || e.as<ev::Restore>() ||
        e.as<ev::CaptureBegin>() || e.as<ev::CaptureEnd>()) {
      out.push_back(i);
    }
  }
  out.push_back(claim_index);
  return out;
}

}  // namespace

Verdict oracle_check_individual(const Trace& trace, bool sync, bool strong) {
  Verdict v;
  v.property = sync ? (strong ? PropertyId::ISS : PropertyId::ISW)
                    : (strong ? PropertyId::IAS : PropertyId::IAW);
  bool any = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto* c = trace.events[i].as<ev::ClaimIndividual>();
    if (!c) continue;
    any = true;
    oracle_check_window(trace, c->window);
    std::map<DeviceId, Status> statuses;
    for (const auto& [p, s] : c->statuses) {
      if (!trace.device(p)) {
        throw Error(Errc::TraceError, "claim references unknown device");
      }
      if (s != Status::Unknown) statuses[p] = s;
    }
    if (statuses.empty()) continue;

    bool ok;
    if (!sync) {
      ok = true;
      for (const auto& [p, s] : statuses) {
        bool found = false;
        for (TimePoint t = c->window.start; t <= c->window.end; ++t) {
          if (oracle_correct(trace, p, s, t, strong)) {
            found = true;
            break;
          }
        }
        if (!found) {
          ok = false;
          break;
        }
      }
    } else {
      ok = false;
      for (TimePoint t = c->window.start; t <= c->window.end; ++t) {
        bool all = true;
        for (const auto& [p, s] : statuses) {
          if (!oracle_correct(trace, p, s, t, strong)) {
            all = false;
            break;
          }
        }
        if (all) {
          ok = true;
          break;
        }
      }
    }
    if (!ok) {
      v.result = VerdictResult::Violated;
      v.witness = oracle_witness(trace, i);
      return v;
    }
  }
  v.result = any ? VerdictResult::Holds : VerdictResult::Inapplicable;
  return v;
}

Verdict oracle_check_group(const Trace& trace, const GroupSpec& spec, bool sync,
                           bool strong) {
  Verdict v;
  v.property = sync ? (strong ? PropertyId::GSS : PropertyId::GSW)
                    : (strong ? PropertyId::GAS : PropertyId::GAW);
  const std::uint64_t threshold = spec.threshold;
  bool any = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto* c = trace.events[i].as<ev::ClaimGroup>();
    if (!c) continue;
    any = true;
    oracle_check_window(trace, c->window);

    std::vector<ev::GroupStatus> groups;
    if (spec.groups.empty()) {
      groups = c->groups;
    } else {
      std::set<DeviceId> universe;
      for (const auto& g : c->groups) {
        universe.insert(g.provers.begin(), g.provers.end());
      }
      for (const auto& wanted : spec.groups) {
        for (DeviceId p : wanted) {
          if (!universe.count(p)) {
            throw Error(Errc::SpecError, "group member not in claimed universe");
          }
        }
        std::set<DeviceId> want(wanted.begin(), wanted.end());
        bool matched = false;
        for (const auto& g : c->groups) {
          if (std::set<DeviceId>(g.provers.begin(), g.provers.end()) == want) {
            groups.push_back(g);
            matched = true;
            break;
          }
        }
        if (!matched) {
          throw Error(Errc::SpecError, "spec group does not match any claimed group");
        }
      }
    }
    for (const auto& g : groups) {
      for (DeviceId p : g.provers) {
        if (!trace.device(p)) {
          throw Error(Errc::TraceError, "claim references unknown device");
        }
      }
    }

    bool ok = true;
    if (!sync) {
      for (const auto& g : groups) {
        if (g.status != Status::Healthy) continue;
        std::uint64_t bad = 0;
        for (DeviceId p : g.provers) {
          bool found = false;
          for (TimePoint t = c->window.start; t <= c->window.end; ++t) {
            if (is_valid_state(trace, p, t)) {
              found = true;
              break;
            }
          }
          if (!found) ++bad;
        }
        if (bad > threshold) {
          ok = false;
          break;
        }
      }
    } else {
      bool have_healthy = false;
      for (const auto& g : groups) {
        if (g.status == Status::Healthy) have_healthy = true;
      }
      if (have_healthy) {
        ok = false;
        for (TimePoint t = c->window.start; t <= c->window.end; ++t) {
          bool all = true;
          for (const auto& g : groups) {
            if (g.status != Status::Healthy) continue;
            std::uint64_t bad = 0;
            for (DeviceId p : g.provers) {
              if (!is_valid_state(trace, p, t)) ++bad;
            }
            if (bad > threshold) {
              all = false;
              break;
            }
          }
          if (all) {
            ok = true;
            break;
          }
        }
      }
    }
    if (ok && strong) {
      for (const auto& g : groups) {
        if (g.status != Status::Unhealthy) continue;
        bool found = false;
        for (TimePoint t = c->window.start; t <= c->window.end; ++t) {
          std::uint64_t bad = 0;
          for (DeviceId p : g.provers) {
            if (!is_valid_state(trace, p, t)) ++bad;
          }
          if (bad > threshold) {
            found = true;
            break;
          }
        }
        if (!found) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      v.result = VerdictResult::Violated;
      v.witness = oracle_witness(trace, i);
      return v;
    }
  }
  v.result = any ? VerdictResult::Holds : VerdictResult::Inapplicable;
  return v;
}

}  // namespace crasim::check

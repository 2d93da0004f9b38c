#include "crasim/checker.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace crasim::check {

const char* property_name(PropertyId p) {
  switch (p) {
    case PropertyId::IA: return "IA";
    case PropertyId::IAW: return "IAW";
    case PropertyId::IAS: return "IAS";
    case PropertyId::ISW: return "ISW";
    case PropertyId::ISS: return "ISS";
    case PropertyId::GAW: return "GAW";
    case PropertyId::GAS: return "GAS";
    case PropertyId::GSW: return "GSW";
    case PropertyId::GSS: return "GSS";
  }
  return "?";
}

PropertyId property_from_name(const std::string& s) {
  for (PropertyId p : kAllProperties) {
    if (s == property_name(p)) return p;
  }
  throw Error(Errc::ParseError, "unknown property: " + s);
}

const char* verdict_result_name(VerdictResult r) {
  switch (r) {
    case VerdictResult::Holds: return "holds";
    case VerdictResult::Violated: return "violated";
    case VerdictResult::Inapplicable: return "inapplicable";
  }
  return "?";
}

VerdictResult verdict_result_from_name(const std::string& s) {
  if (s == "holds") return VerdictResult::Holds;
  if (s == "violated") return VerdictResult::Violated;
  if (s == "inapplicable") return VerdictResult::Inapplicable;
  throw Error(Errc::ParseError, "unknown verdict: " + s);
}

namespace {

void require_device(const Trace& trace, DeviceId d) {
  if (!trace.device(d)) {
    throw Error(Errc::TraceError, "event references unknown device " +
                                      std::to_string(d));
  }
}

// Indices of the events that determine the named provers' validity up to
// `until`, for witness construction.
std::vector<std::size_t> validity_events(const Trace& trace,
                                         const std::set<DeviceId>& provers,
                                         TimePoint until) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.at > until) break;
    DeviceId p = 0;
    if (const auto* c = e.as<ev::Compromise>()) p = c->prover;
    else if (const auto* r = e.as<ev::Restore>()) p = r->prover;
    else if (const auto* cb = e.as<ev::CaptureBegin>()) p = cb->prover;
    else if (const auto* ce = e.as<ev::CaptureEnd>()) p = ce->prover;
    else continue;
    if (provers.count(p)) out.push_back(i);
  }
  return out;
}

struct ClaimView {
  std::size_t event_index;
  TimePoint at;
  Interval window;
  // Individual: one entry per prover. Group: one entry per group.
  std::map<DeviceId, Status> statuses;
  std::vector<ev::GroupStatus> groups;
};

std::vector<ClaimView> individual_claims(const Trace& trace) {
  std::vector<ClaimView> out;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    if (const auto* c = trace.events[i].as<ev::ClaimIndividual>()) {
      ClaimView v;
      v.event_index = i;
      v.at = trace.events[i].at;
      v.window = c->window;
      for (const auto& [p, s] : c->statuses) {
        require_device(trace, p);
        if (s == Status::Unknown) continue;  // unreported provers stay out of P
        v.statuses[p] = s;
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<ClaimView> group_claims(const Trace& trace) {
  std::vector<ClaimView> out;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    if (const auto* c = trace.events[i].as<ev::ClaimGroup>()) {
      ClaimView v;
      v.event_index = i;
      v.at = trace.events[i].at;
      v.window = c->window;
      v.groups = c->groups;
      for (const auto& g : v.groups) {
        for (DeviceId p : g.provers) require_device(trace, p);
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

void check_window(const Trace& trace, const ClaimView& claim) {
  if (claim.window.start > claim.window.end ||
      claim.window.end > trace.last_time()) {
    throw Error(Errc::TraceError, "claim interval outside the trace horizon");
  }
}

bool status_correct(const TraceStateIndex& idx, DeviceId p, Status s,
                    TimePoint t, bool strong) {
  if (s == Status::Healthy) return idx.valid_at(p, t);
  return !strong || !idx.valid_at(p, t);
}

// Candidate times for one prover's existential quantification. Under a
// monotone-validity adversary the endpoints suffice: a healthy status is
// best checked at the interval start, an unhealthy one at the end.
std::vector<TimePoint> async_candidates(const TraceStateIndex& idx, DeviceId p,
                                        Status s, Interval w) {
  if (idx.monotone_non_increasing()) {
    return {s == Status::Healthy ? w.start : w.end};
  }
  return idx.change_points(p, w);
}

std::vector<TimePoint> merged_candidates(const TraceStateIndex& idx,
                                         const std::vector<DeviceId>& provers,
                                         Interval w) {
  std::set<TimePoint> ts;
  for (DeviceId p : provers) {
    for (TimePoint t : idx.change_points(p, w)) ts.insert(t);
  }
  return {ts.begin(), ts.end()};
}

}  // namespace

Verdict check_ia(const Trace& trace) {
  Verdict v;
  v.property = PropertyId::IA;
  if (!trace.meta.interactive) {
    // Non-interactive protocols have no request message to forge.
    v.result = VerdictResult::Inapplicable;
    return v;
  }
  struct Key {
    DeviceId initiator, prover;
    sym::Term req;
    bool operator<(const Key& o) const {
      if (initiator != o.initiator) return initiator < o.initiator;
      if (prover != o.prover) return prover < o.prover;
      return req < o.req;
    }
  };
  std::map<Key, std::vector<std::size_t>> sends;
  std::map<Key, std::vector<std::size_t>> completes;
  bool any_complete = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (const auto* s = e.as<ev::SendRequest>()) {
      require_device(trace, s->initiator);
      require_device(trace, s->prover);
      sends[Key{s->initiator, s->prover, s->request}].push_back(i);
    } else if (const auto* c = e.as<ev::RunComplete>()) {
      require_device(trace, c->initiator);
      require_device(trace, c->prover);
      completes[Key{c->initiator, c->prover, c->request}].push_back(i);
      any_complete = true;
    }
  }
  (void)any_complete;
  for (const auto& [key, cs] : completes) {
    const auto& ss = sends[key];
    // The k-th completed run needs a k-th distinct request sent before it.
    for (std::size_t k = 0; k < cs.size(); ++k) {
      TimePoint tc = trace.events[cs[k]].at;
      std::size_t available = 0;
      for (std::size_t si : ss) {
        if (trace.events[si].at <= tc) ++available;
      }
      if (available < k + 1) {
        v.result = VerdictResult::Violated;
        std::vector<std::size_t> w(ss.begin(), ss.end());
        w.insert(w.end(), cs.begin(), cs.begin() + k + 1);
        std::sort(w.begin(), w.end());
        v.witness = std::move(w);
        return v;
      }
    }
  }
  v.result = VerdictResult::Holds;
  return v;
}

Verdict check_individual(const Trace& trace, bool sync, bool strong) {
  Verdict v;
  v.property = sync ? (strong ? PropertyId::ISS : PropertyId::ISW)
                    : (strong ? PropertyId::IAS : PropertyId::IAW);
  auto claims = individual_claims(trace);
  if (claims.empty()) {
    v.result = VerdictResult::Inapplicable;
    return v;
  }
  TraceStateIndex idx(trace);
  for (const ClaimView& claim : claims) {
    check_window(trace, claim);
    if (claim.statuses.empty()) continue;  // empty prover set: vacuous
    std::set<DeviceId> involved;
    for (const auto& [p, s] : claim.statuses) involved.insert(p);

    bool ok = true;
    if (!sync) {
      for (const auto& [p, s] : claim.statuses) {
        bool found = false;
        for (TimePoint t : async_candidates(idx, p, s, claim.window)) {
          if (status_correct(idx, p, s, t, strong)) {
            found = true;
            break;
          }
        }
        if (!found) {
          ok = false;
          involved = {p};
          break;
        }
      }
    } else {
      std::vector<DeviceId> provers(involved.begin(), involved.end());
      bool found = false;
      for (TimePoint t : merged_candidates(idx, provers, claim.window)) {
        bool all = true;
        for (const auto& [p, s] : claim.statuses) {
          if (!status_correct(idx, p, s, t, strong)) {
            all = false;
            break;
          }
        }
        if (all) {
          found = true;
          break;
        }
      }
      ok = found;
    }
    if (!ok) {
      v.result = VerdictResult::Violated;
      auto w = validity_events(trace, involved, claim.at);
      w.push_back(claim.event_index);
      std::sort(w.begin(), w.end());
      v.witness = std::move(w);
      return v;
    }
  }
  v.result = VerdictResult::Holds;
  return v;
}

namespace {

// Resolves which claimed groups the spec asks to judge; claimed groups
// themselves when the spec leaves them open.
std::vector<ev::GroupStatus> resolve_groups(const ClaimView& claim,
                                            const GroupSpec& spec) {
  if (spec.groups.empty()) return claim.groups;
  std::set<DeviceId> universe;
  for (const auto& g : claim.groups) {
    universe.insert(g.provers.begin(), g.provers.end());
  }
  std::vector<ev::GroupStatus> out;
  for (const auto& wanted : spec.groups) {
    for (DeviceId p : wanted) {
      if (!universe.count(p)) {
        throw Error(Errc::SpecError,
                    "group member " + std::to_string(p) +
                        " is not in the claimed universe");
      }
    }
    std::set<DeviceId> want(wanted.begin(), wanted.end());
    const ev::GroupStatus* match = nullptr;
    for (const auto& g : claim.groups) {
      if (std::set<DeviceId>(g.provers.begin(), g.provers.end()) == want) {
        match = &g;
        break;
      }
    }
    if (!match) {
      throw Error(Errc::SpecError, "spec group does not match any claimed group");
    }
    out.push_back(*match);
  }
  return out;
}

}  // namespace

Verdict check_group(const Trace& trace, const GroupSpec& spec, bool sync,
                    bool strong) {
  Verdict v;
  v.property = sync ? (strong ? PropertyId::GSS : PropertyId::GSW)
                    : (strong ? PropertyId::GAS : PropertyId::GAW);
  auto claims = group_claims(trace);
  if (claims.empty()) {
    v.result = VerdictResult::Inapplicable;
    return v;
  }
  TraceStateIndex idx(trace);
  const std::uint64_t threshold = spec.threshold;
  for (const ClaimView& claim : claims) {
    check_window(trace, claim);
    auto groups = resolve_groups(claim, spec);
    std::set<DeviceId> involved;
    for (const auto& g : groups) involved.insert(g.provers.begin(), g.provers.end());
    if (involved.empty()) continue;

    bool ok = true;
    // Weak clause: healthy groups tolerate at most `threshold` members
    // without a valid time.
    if (!sync) {
      for (const auto& g : groups) {
        if (g.status != Status::Healthy) continue;
        std::uint64_t bad = 0;
        for (DeviceId p : g.provers) {
          bool found = false;
          for (TimePoint t : async_candidates(idx, p, Status::Healthy, claim.window)) {
            if (idx.valid_at(p, t)) {
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
      std::vector<DeviceId> healthy_members;
      bool have_healthy_group = false;
      for (const auto& g : groups) {
        if (g.status == Status::Healthy) {
          have_healthy_group = true;
          healthy_members.insert(healthy_members.end(), g.provers.begin(),
                                 g.provers.end());
        }
      }
      if (have_healthy_group) {
        bool found = false;
        for (TimePoint t :
             merged_candidates(idx, healthy_members, claim.window)) {
          bool all = true;
          for (const auto& g : groups) {
            if (g.status != Status::Healthy) continue;
            std::uint64_t bad = 0;
            for (DeviceId p : g.provers) {
              if (!idx.valid_at(p, t)) ++bad;
            }
            if (bad > threshold) {
              all = false;
              break;
            }
          }
          if (all) {
            found = true;
            break;
          }
        }
        ok = found;
      }
    }
    // Strong clause: unhealthy groups need more than `threshold` invalid
    // members at some time in the window.
    if (ok && strong) {
      for (const auto& g : groups) {
        if (g.status != Status::Unhealthy) continue;
        std::vector<DeviceId> members(g.provers.begin(), g.provers.end());
        bool found = false;
        for (TimePoint t : merged_candidates(idx, members, claim.window)) {
          std::uint64_t bad = 0;
          for (DeviceId p : g.provers) {
            if (!idx.valid_at(p, t)) ++bad;
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
      auto w = validity_events(trace, involved, claim.at);
      w.push_back(claim.event_index);
      std::sort(w.begin(), w.end());
      v.witness = std::move(w);
      return v;
    }
  }
  v.result = VerdictResult::Holds;
  return v;
}

const char* qosa_name(Qosa q) {
  switch (q) {
    case Qosa::Binary: return "binary";
    case Qosa::Intermediate: return "intermediate";
    case Qosa::List: return "list";
  }
  return "?";
}

Qosa classify_qosa(const Trace& trace) {
  bool any_individual = false;
  const ev::ClaimGroup* group = nullptr;
  for (const auto& e : trace.events) {
    if (e.as<ev::ClaimIndividual>()) any_individual = true;
    if (const auto* g = e.as<ev::ClaimGroup>()) group = g;
  }
  if (any_individual) return Qosa::List;
  if (!group) throw Error(Errc::NoClaims, "trace contains no claims");
  std::set<DeviceId> universe;
  for (const auto& g : group->groups) {
    universe.insert(g.provers.begin(), g.provers.end());
  }
  if (group->groups.size() == 1 &&
      group->groups[0].provers.size() == universe.size()) {
    return Qosa::Binary;
  }
  return Qosa::Intermediate;
}

Verdict check_property(const Trace& trace, PropertyId p, const GroupSpec& spec) {
  switch (p) {
    case PropertyId::IA: return check_ia(trace);
    case PropertyId::IAW: return check_individual(trace, false, false);
    case PropertyId::IAS: return check_individual(trace, false, true);
    case PropertyId::ISW: return check_individual(trace, true, false);
    case PropertyId::ISS: return check_individual(trace, true, true);
    case PropertyId::GAW: return check_group(trace, spec, false, false);
    case PropertyId::GAS: return check_group(trace, spec, false, true);
    case PropertyId::GSW: return check_group(trace, spec, true, false);
    case PropertyId::GSS: return check_group(trace, spec, true, true);
  }
  throw Error(Errc::SpecError, "bad property id");
}

Trace witness_subtrace(const Trace& trace, const std::vector<std::size_t>& witness) {
  Trace out;
  out.meta = trace.meta;
  for (std::size_t i : witness) {
    if (i >= trace.events.size()) {
      throw Error(Errc::TraceError, "witness index out of range");
    }
    out.events.push_back(trace.events[i]);
  }
  return out;
}

bool strength_ordering_ok(const std::vector<Verdict>& verdicts) {
  auto result = [&](PropertyId p) -> std::optional<VerdictResult> {
    for (const auto& v : verdicts) {
      if (v.property == p) return v.result;
    }
    return std::nullopt;
  };
  static const std::pair<PropertyId, PropertyId> pairs[] = {
      {PropertyId::ISS, PropertyId::ISW}, {PropertyId::ISS, PropertyId::IAS},
      {PropertyId::ISS, PropertyId::IAW}, {PropertyId::ISW, PropertyId::IAW},
      {PropertyId::IAS, PropertyId::IAW}, {PropertyId::GSS, PropertyId::GSW},
      {PropertyId::GSS, PropertyId::GAS}, {PropertyId::GSS, PropertyId::GAW},
      {PropertyId::GSW, PropertyId::GAW}, {PropertyId::GAS, PropertyId::GAW},
  };
  for (const auto& [stronger, weaker] : pairs) {
    auto rs = result(stronger);
    auto rw = result(weaker);
    if (rs && rw && *rs == VerdictResult::Holds &&
        *rw == VerdictResult::Violated) {
      return false;
    }
  }
  return true;
}

}  // namespace crasim::check

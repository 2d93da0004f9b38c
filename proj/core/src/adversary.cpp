#include "crasim/adversary.hpp"

#include <set>

#include "crasim/engine.hpp"

namespace crasim::adv {

void Adversary::observe(const sym::Term& body) {
  sym::Term n;
  try {
    n = sym::normalize(body);
  } catch (const Error&) {
    n = body;
  }
  knowledge_.add(n);
}

void Adversary::compromise(net::Engine& eng, DeviceId p, bool target_trusted) {
  if (!flags_.sw) {
    throw Error(Errc::RejectedCapability, "compromise requires the sw flag");
  }
  net::Device& dev = eng.device(p);
  if (dev.in_atomic_section(eng.now())) {
    throw Error(Errc::RejectedAtomic,
                dev.name + " is inside an attestation section");
  }
  if (target_trusted && !(dev.offline && eng.now() < dev.offline_until)) {
    throw Error(Errc::RejectedTrusted,
                "trusted-environment write on " + dev.name +
                    " without an active capture");
  }
  dev.sw_label = "bad";
  eng.record_event(ev::Compromise{p});
}

void Adversary::restore(net::Engine& eng, DeviceId p) {
  if (!flags_.msw) {
    throw Error(Errc::RejectedRestore, "restore requires the msw flag");
  }
  net::Device& dev = eng.device(p);
  if (!dev.compromised()) {
    eng.warn("restore of never-compromised device " + dev.name + " is a no-op");
    return;
  }
  dev.sw_label = dev.original_label;
  eng.record_event(ev::Restore{p});
}

void Adversary::read_secrets(net::Engine& eng, DeviceId p) {
  if (!flags_.pni && !flags_.pi) {
    throw Error(Errc::RejectedCapability,
                "read_secrets requires the pni or pi flag");
  }
  extract_secrets(eng, p);
  eng.record_event(ev::SecretRead{p});
}

void Adversary::capture(net::Engine& eng, DeviceId p, TimePoint begin,
                        TimePoint end, bool write) {
  if (!flags_.pi) {
    throw Error(Errc::RejectedCapability, "capture requires the pi flag");
  }
  if (end - begin < t_attack_) {
    throw Error(Errc::RejectedWindow,
                "capture window " + std::to_string(end - begin) +
                    " shorter than t_attack " + std::to_string(t_attack_));
  }
  eng.schedule_capture(p, begin, end, write);
}

void Adversary::capture_begin(net::Engine& eng, DeviceId p, TimePoint end,
                              bool write) {
  net::Device& dev = eng.device(p);
  dev.offline = true;
  dev.offline_until = end;
  extract_secrets(eng, p);
  eng.record_event(ev::CaptureBegin{p, write});
}

void Adversary::capture_end(net::Engine& eng, DeviceId p, bool write) {
  net::Device& dev = eng.device(p);
  dev.offline = false;
  if (write) dev.sw_label = "bad";
  eng.record_event(ev::CaptureEnd{p, write});
}

void Adversary::extract_secrets(net::Engine& eng, DeviceId p) {
  const net::Device& dev = eng.device(p);
  for (const auto& [name, key] : dev.keys) {
    knowledge_.add(key);
  }
  knowledge_.add(sym::Term::counter(dev.last_counter));
}

namespace {

void check_interval(const Interval& w, TimePoint at,
                    std::vector<std::string>& issues, const char* what) {
  if (w.start > w.end || w.end > at) {
    issues.push_back(std::string(what) + " interval violates start <= end <= at");
  }
}

}  // namespace

std::vector<std::string> lint_trace(const Trace& trace) {
  std::vector<std::string> issues;
  const AdversaryFlags& f = trace.meta.adversary;
  if (f.msw && !f.sw) issues.push_back("flags: msw requires sw");

  TimePoint prev = 0;
  std::set<sym::Term> sendable;
  // Injected bodies are adversary decisions recorded in the schedule.
  for (const auto& d : trace.meta.schedule) {
    if (d.rfind("inject:", 0) == 0) {
      auto second = d.find(':', 7);
      if (second != std::string::npos) {
        try {
          sendable.insert(sym::Term::from_text(d.substr(second + 1)));
        } catch (const Error&) {
          issues.push_back("schedule: unparsable inject body");
        }
      }
    }
  }

  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.at < prev) {
      issues.push_back("event " + std::to_string(i) + ": timestamp decreases");
    }
    prev = e.at;
    if (e.as<ev::Compromise>() && !f.sw) {
      issues.push_back("Compromise without sw flag");
    }
    if (e.as<ev::Restore>() && !f.msw) {
      issues.push_back("Restore without msw flag");
    }
    if (e.as<ev::SecretRead>() && !f.pni && !f.pi) {
      issues.push_back("SecretRead without pni/pi flag");
    }
    if ((e.as<ev::CaptureBegin>() || e.as<ev::CaptureEnd>()) && !f.pi) {
      issues.push_back("Capture without pi flag");
    }
    if (const auto* s = e.as<ev::MsgSend>()) {
      sendable.insert(s->body);
    }
    if (const auto* r = e.as<ev::MsgRecv>()) {
      if (!sendable.count(r->body)) {
        issues.push_back("event " + std::to_string(i) +
                         ": MsgRecv body never sent or injected");
      }
    }
    if (const auto* c = e.as<ev::ClaimIndividual>()) {
      check_interval(c->window, e.at, issues, "ClaimIndividual");
    }
    if (const auto* c = e.as<ev::ClaimGroup>()) {
      check_interval(c->window, e.at, issues, "ClaimGroup");
    }
  }
  return issues;
}

}  // namespace crasim::adv

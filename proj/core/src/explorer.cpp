#include "crasim/explorer.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <thread>

#include "crasim/protocols.hpp"

namespace crasim::explore {

using check::PropertyId;
using check::Verdict;
using check::VerdictResult;
using net::Engine;
using net::NetAction;
using sym::Term;

namespace {

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One adversary decision in the canonical text encoding used in trace
// metadata: "pre:compromise:P0", "net:delay:2", "inject:P1:<term>", "ord:1".
struct PreOption {
  enum class Kind { None, Compromise, Restore } kind = Kind::None;
  DeviceId device = 0;
  std::string text = "pre:none";
};

struct InjectOption {
  bool none = true;
  DeviceId dst = 0;
  Term body;
};

std::vector<NetAction> net_menu(const Scenario& s) {
  std::vector<NetAction> menu;
  menu.push_back({NetAction::Kind::Deliver, 0});
  if (s.explore.menu.drop) menu.push_back({NetAction::Kind::Drop, 0});
  if (s.explore.menu.delay) {
    for (TimePoint d = 1; d <= s.explore.bounds.max_delay; ++d) {
      menu.push_back({NetAction::Kind::Delay, d});
    }
  }
  if (s.explore.menu.duplicate) menu.push_back({NetAction::Kind::Duplicate, 0});
  return menu;
}

std::vector<PreOption> pre_menu(Engine& eng) {
  const Scenario& s = eng.scenario();
  std::vector<PreOption> menu;
  menu.push_back(PreOption{});
  for (DeviceId p : eng.provers()) {
    const net::Device& dev = eng.device(p);
    bool busy = dev.offline || dev.in_atomic_section(eng.now());
    if (s.explore.allow_compromise && s.adversary.sw && !dev.compromised() &&
        !busy) {
      menu.push_back(PreOption{PreOption::Kind::Compromise, p,
                               "pre:compromise:" + dev.name});
    }
    if (s.explore.allow_restore && s.adversary.msw && dev.compromised() &&
        !busy) {
      menu.push_back(
          PreOption{PreOption::Kind::Restore, p, "pre:restore:" + dev.name});
    }
  }
  return menu;
}

// Candidate forged or replayed wires, canonically ordered. Shapes:
//   replay  - previously observed wire bodies, to any device
//   request - attestation-request wires assembled from derivable parts
//   report  - aggregate-report wires with arbitrary bit patterns
std::vector<InjectOption> inject_menu(Engine& eng) {
  const Scenario& s = eng.scenario();
  std::vector<InjectOption> menu;
  menu.push_back(InjectOption{});
  if (s.explore.inject_shapes.empty()) return menu;

  std::uint32_t depth = s.explore.bounds.max_inject_depth;
  std::set<std::pair<DeviceId, Term>> seen;
  auto add = [&](DeviceId dst, const Term& body) {
    if (!sym::can_derive(eng.adversary().knowledge(), body, depth)) return;
    if (!seen.insert({dst, body}).second) return;
    menu.push_back(InjectOption{false, dst, body});
  };

  auto has_shape = [&](const char* shape) {
    return std::find(s.explore.inject_shapes.begin(), s.explore.inject_shapes.end(),
                     shape) != s.explore.inject_shapes.end();
  };

  if (has_shape("replay")) {
    std::vector<Term> bodies = eng.observed_bodies();
    std::sort(bodies.begin(), bodies.end());
    bodies.erase(std::unique(bodies.begin(), bodies.end()), bodies.end());
    for (const Term& b : bodies) {
      for (DeviceId d = 0; d < eng.device_count(); ++d) add(d, b);
    }
  }
  if (has_shape("request") && s.protocol == ProtocolId::SimplePlus) {
    std::string expected = s.devices[eng.provers()[0]].acceptable[0];
    Term key = Term::key("auth");
    for (std::uint64_t c = 1; c <= s.explore.bounds.max_rounds + 1; ++c) {
      Term body = Term::pair(
          Term::atom("req"),
          Term::pair(Term::counter(c),
                     Term::pair(Term::atom(expected), Term::atom("all"))));
      Term wire = Term::pair(body, Term::mac(key, body));
      for (DeviceId p : eng.provers()) add(p, wire);
    }
  }
  if (has_shape("report") && s.protocol == ProtocolId::SimplePlus) {
    Term key = Term::key("auth");
    std::size_t width = std::min<std::size_t>(eng.provers().size(), 4);
    for (std::uint64_t c = 1; c <= s.explore.bounds.max_rounds + 1; ++c) {
      for (std::uint64_t bits = 0; bits < (1ULL << width); ++bits) {
        std::vector<Term> vec;
        for (std::size_t i = 0; i < width; ++i) {
          vec.push_back(Term::bit((bits >> i) & 1));
        }
        Term body = Term::pair(
            Term::atom("rep"),
            Term::pair(Term::counter(c), Term::bitvec(std::move(vec))));
        Term wire = Term::pair(body, Term::mac(key, body));
        for (DeviceId d = 0; d < eng.device_count(); ++d) {
          if (eng.device(d).roles.has(Role::Verifier) ||
              eng.device(d).roles.has(Role::Aggregator)) {
            add(d, wire);
          }
        }
      }
    }
  }
  return menu;
}

// Drives one execution along a fixed choice prefix, extending with option 0
// (the benign choice) at fresh decision points and recording every menu.
class TreePolicy : public net::AdversaryPolicy {
 public:
  explicit TreePolicy(std::vector<std::uint32_t> prefix)
      : prefix_(std::move(prefix)) {}

  struct Step {
    std::uint32_t chosen;
    std::uint32_t menu;
  };
  const std::vector<Step>& path() const { return path_; }

  void pre_decision(Engine& eng, std::size_t) override {
    auto menu = pre_menu(eng);
    if (menu.size() <= 1) return;
    std::uint32_t c = next(static_cast<std::uint32_t>(menu.size()));
    const PreOption& opt = menu[c];
    if (opt.kind == PreOption::Kind::None) return;
    eng.log_decision(opt.text);
    if (opt.kind == PreOption::Kind::Compromise) {
      eng.adversary().compromise(eng, opt.device);
    } else {
      eng.adversary().restore(eng, opt.device);
    }
  }

  NetAction on_send(Engine& eng, const net::PendingMessage&, std::size_t) override {
    auto menu = net_menu(eng.scenario());
    if (menu.size() == 1) return menu[0];
    return menu[next(static_cast<std::uint32_t>(menu.size()))];
  }

  void post_decision(Engine& eng, std::size_t) override {
    if (injects_ >= eng.scenario().explore.max_injects) return;
    auto menu = inject_menu(eng);
    if (menu.size() <= 1) return;
    std::uint32_t c = next(static_cast<std::uint32_t>(menu.size()));
    const InjectOption& opt = menu[c];
    if (opt.none) return;
    ++injects_;
    eng.inject(opt.dst, opt.dst, opt.body);
  }

  std::uint32_t on_order(Engine&, std::uint32_t n) override { return next(n); }

 protected:
  virtual std::uint32_t next(std::uint32_t menu) {
    std::uint32_t v = pos_ < prefix_.size() ? prefix_[pos_] : 0;
    ++pos_;
    path_.push_back(Step{v, menu});
    return v;
  }

  std::vector<std::uint32_t> prefix_;
  std::vector<Step> path_;
  std::size_t pos_ = 0;
  std::uint32_t injects_ = 0;
};

class RandomPolicy : public TreePolicy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : TreePolicy({}), state_(seed) {}

 protected:
  std::uint32_t next(std::uint32_t menu) override {
    state_ = mix64(state_, 0x85ebca6b);
    std::uint32_t v = menu ? static_cast<std::uint32_t>(state_ % menu) : 0;
    path_.push_back(Step{v, menu});
    return v;
  }

 private:
  std::uint64_t state_;
};

// Replays a recorded decision list; fresh decision points beyond the list
// fall back to the benign choice.
class ReplayPolicy : public net::AdversaryPolicy {
 public:
  explicit ReplayPolicy(std::vector<std::string> decisions)
      : decisions_(std::move(decisions)) {}

  void pre_decision(Engine& eng, std::size_t) override {
    if (!next_is("pre:")) return;
    std::string d = take();
    eng.log_decision(d);
    std::string rest = d.substr(4);
    auto colon = rest.find(':');
    std::string action = rest.substr(0, colon);
    DeviceId p = *eng.device_by_name(rest.substr(colon + 1));
    try {
      if (action == "compromise") {
        eng.adversary().compromise(eng, p);
      } else if (action == "restore") {
        eng.adversary().restore(eng, p);
      }
    } catch (const Error& e) {
      eng.warn(std::string("replayed pre-step skipped: ") + e.what());
    }
  }

  NetAction on_send(Engine&, const net::PendingMessage&, std::size_t) override {
    if (next_is("net:")) return NetAction::from_text(take().substr(4));
    return {NetAction::Kind::Deliver, 0};
  }

  void post_decision(Engine& eng, std::size_t) override {
    if (!next_is("inject:")) return;
    std::string d = take();
    auto second = d.find(':', 7);
    DeviceId dst = *eng.device_by_name(d.substr(7, second - 7));
    Term body = Term::from_text(d.substr(second + 1));
    try {
      eng.inject(dst, dst, body);
    } catch (const Error& e) {
      eng.warn(std::string("replayed inject skipped: ") + e.what());
    }
  }

  std::uint32_t on_order(Engine&, std::uint32_t n) override {
    if (next_is("ord:")) {
      std::uint32_t v = static_cast<std::uint32_t>(std::stoul(take().substr(4)));
      return v < n ? v : 0;
    }
    return 0;
  }

 private:
  bool next_is(const char* prefix) const {
    return pos_ < decisions_.size() && decisions_[pos_].rfind(prefix, 0) == 0;
  }
  std::string take() { return decisions_[pos_++]; }

  std::vector<std::string> decisions_;
  std::size_t pos_ = 0;
};

std::vector<Verdict> check_all(const Scenario& s, const Trace& trace) {
  check::GroupSpec spec;
  spec.threshold = s.group_threshold;
  std::vector<Verdict> out;
  for (PropertyId p : s.properties) {
    out.push_back(check::check_property(trace, p, spec));
  }
  return out;
}

struct Collector {
  std::mutex mu;
  ExplorationResult result;
  std::map<PropertyId, std::vector<std::uint32_t>> witness_keys;

  void absorb(const Scenario& s, const Trace& trace,
              const std::vector<std::uint32_t>& key,
              const EnumerateOptions& opts) {
    auto verdicts = check_all(s, trace);
    std::lock_guard<std::mutex> lock(mu);
    ++result.schedules;
    for (const auto& v : verdicts) {
      auto& c = result.counts[v.property];
      switch (v.result) {
        case VerdictResult::Holds: ++c.holds; break;
        case VerdictResult::Violated: ++c.violated; break;
        case VerdictResult::Inapplicable: ++c.inapplicable; break;
      }
      if (v.result == VerdictResult::Violated) {
        auto it = witness_keys.find(v.property);
        if (it == witness_keys.end() || key < it->second) {
          witness_keys[v.property] = key;
          result.witnesses[v.property] = trace;
        }
      }
    }
    if (!check::strength_ordering_ok(verdicts)) ++result.ordering_violations;
    if (opts.on_trace) opts.on_trace(trace);
    if (opts.progress && opts.progress_every &&
        result.schedules % opts.progress_every == 0) {
      opts.progress(result.schedules);
    }
  }
};

// Depth-first enumeration over the decision tree rooted at `base`.
void dfs_from(const Scenario& s, const proto::Topology& topo,
              std::vector<std::uint32_t> base, std::uint64_t first_fixed,
              Collector& collector, const EnumerateOptions& opts,
              std::uint64_t cap) {
  std::vector<std::uint32_t> prefix = std::move(base);
  while (true) {
    Engine eng(s, topo);
    TreePolicy policy(prefix);
    eng.set_policy(&policy);
    Trace trace = eng.run();
    std::vector<std::uint32_t> key;
    key.reserve(policy.path().size());
    for (const auto& st : policy.path()) key.push_back(st.chosen);
    collector.absorb(s, trace, key, opts);
    {
      std::lock_guard<std::mutex> lock(collector.mu);
      if (collector.result.schedules > cap) {
        throw Error(Errc::ExplorationTooLarge,
                    "schedule count exceeds cap " + std::to_string(cap));
      }
    }
    // Backtrack to the deepest decision with an untried option.
    std::vector<TreePolicy::Step> path = policy.path();
    while (path.size() > first_fixed &&
           path.back().chosen + 1 >= path.back().menu) {
      path.pop_back();
    }
    if (path.size() <= first_fixed) return;
    prefix.clear();
    for (std::size_t i = 0; i + 1 < path.size(); ++i) prefix.push_back(path[i].chosen);
    prefix.push_back(path.back().chosen + 1);
  }
}

}  // namespace

ExplorationResult enumerate(const Scenario& scenario,
                            const proto::Topology& topology,
                            const EnumerateOptions& opts) {
  Collector collector;
  const std::uint64_t cap = scenario.explore.cap;

  // Probe run: establishes the first decision point's fan-out and an
  // a-priori size estimate.
  Engine probe_engine(scenario, topology);
  TreePolicy probe({});
  probe_engine.set_policy(&probe);
  Trace first = probe_engine.run();
  long double estimate = 1;
  for (const auto& st : probe.path()) estimate *= st.menu;
  if (estimate > static_cast<long double>(cap) * 64) {
    throw Error(Errc::ExplorationTooLarge,
                "estimated schedule count " + std::to_string((double)estimate) +
                    " exceeds cap " + std::to_string(cap));
  }

  std::uint32_t first_menu =
      probe.path().empty() ? 1 : probe.path().front().menu;
  std::size_t workers = std::max<std::size_t>(1, opts.workers);
  workers = std::min<std::size_t>(workers, first_menu);

  if (workers <= 1) {
    dfs_from(scenario, topology, {}, 0, collector, opts, cap);
    return std::move(collector.result);
  }

  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::uint32_t opt = static_cast<std::uint32_t>(w); opt < first_menu;
             opt += static_cast<std::uint32_t>(workers)) {
          dfs_from(scenario, topology, {opt}, 1, collector, opts, cap);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return std::move(collector.result);
}

std::vector<Trace> random_runs(const Scenario& scenario,
                               const proto::Topology& topology, std::size_t n,
                               std::uint64_t seed) {
  if (n < 1) throw Error(Errc::ConfigError, "random_runs needs n >= 1");
  std::vector<Trace> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Scenario s = scenario;
    s.seed = mix64(seed, i);
    Engine eng(s, topology);
    RandomPolicy policy(mix64(seed, i));
    eng.set_policy(&policy);
    out.push_back(eng.run());
  }
  return out;
}

namespace {

std::vector<std::string> adversary_decisions(const Trace& trace) {
  std::vector<std::string> out;
  for (const auto& d : trace.meta.schedule) {
    if (d.rfind("pre:", 0) == 0 || d.rfind("net:", 0) == 0 ||
        d.rfind("inject:", 0) == 0 || d.rfind("ord:", 0) == 0) {
      out.push_back(d);
    }
  }
  return out;
}

bool is_benign(const std::string& d) {
  return d == "net:deliver" || d.rfind("ord:", 0) == 0;
}

Trace replay(const Scenario& s, const proto::Topology& topo,
             const std::vector<std::string>& decisions) {
  Engine eng(s, topo);
  ReplayPolicy policy(decisions);
  eng.set_policy(&policy);
  return eng.run();
}

}  // namespace

Trace minimize(const Scenario& scenario, const proto::Topology& topology,
               const Trace& trace, check::PropertyId property,
               const check::GroupSpec& spec) {
  if (check::check_property(trace, property, spec).result !=
      VerdictResult::Violated) {
    throw Error(Errc::NotAViolation,
                std::string(check::property_name(property)) +
                    " is not violated by this trace");
  }
  std::vector<std::string> decisions = adversary_decisions(trace);
  Trace best = trace;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      if (is_benign(decisions[i])) continue;
      std::vector<std::string> candidate = decisions;
      if (candidate[i].rfind("net:", 0) == 0) {
        candidate[i] = "net:deliver";
      } else {
        candidate.erase(candidate.begin() + i);
      }
      Trace t = replay(scenario, topology, candidate);
      if (check::check_property(t, property, spec).result ==
          VerdictResult::Violated) {
        decisions = adversary_decisions(t);
        best = std::move(t);
        changed = true;
        break;
      }
    }
  }
  return best;
}

Trace scripted_run(const Scenario& scenario) {
  return scripted_run(scenario, scenario.build_topology());
}

Trace scripted_run(const Scenario& scenario, const proto::Topology& topology) {
  Engine eng(scenario, topology);
  ReplayPolicy policy([&] {
    std::vector<std::string> ds;
    for (const auto& d : scenario.net_script) ds.push_back("net:" + d);
    return ds;
  }());
  if (scenario.adversary.dy) eng.set_policy(&policy);
  return eng.run();
}

}  // namespace crasim::explore

#include "crasim/state.hpp"

#include <algorithm>

namespace crasim {

AcceptableStates::AcceptableStates(const TraceMeta& meta) {
  per_device_.resize(meta.devices.size());
  for (const auto& d : meta.devices) {
    set_initial(d.id, d.acceptable);
  }
}

void AcceptableStates::set_initial(DeviceId d, std::vector<std::string> labels) {
  if (d >= per_device_.size()) per_device_.resize(d + 1);
  per_device_[d].clear();
  per_device_[d].push_back(
      Entry{0, std::set<std::string>(labels.begin(), labels.end())});
}

void AcceptableStates::add_update(DeviceId d, TimePoint from,
                                  std::vector<std::string> labels) {
  if (d >= per_device_.size()) per_device_.resize(d + 1);
  auto& entries = per_device_[d];
  entries.push_back(Entry{from, std::set<std::string>(labels.begin(), labels.end())});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.from < b.from; });
}

bool AcceptableStates::contains(DeviceId d, const std::string& label,
                                TimePoint t) const {
  if (d >= per_device_.size() || per_device_[d].empty()) return false;
  const Entry* current = nullptr;
  for (const auto& e : per_device_[d]) {
    if (e.from <= t) current = &e;
  }
  return current && current->labels.count(label) != 0;
}

std::vector<TimePoint> AcceptableStates::update_times(DeviceId d,
                                                      Interval window) const {
  std::vector<TimePoint> out;
  if (d >= per_device_.size()) return out;
  for (const auto& e : per_device_[d]) {
    if (e.from > window.start && e.from <= window.end) out.push_back(e.from);
  }
  return out;
}

namespace {

// Label transitions of one device as (time, label), earliest first.
std::vector<std::pair<TimePoint, std::string>> label_history(const Trace& trace,
                                                             DeviceId p) {
  const DeviceMeta* dev = trace.device(p);
  if (!dev) throw Error(Errc::UnknownDevice, "device id " + std::to_string(p));
  std::vector<std::pair<TimePoint, std::string>> hist;
  hist.emplace_back(0, dev->initial_state);
  for (const auto& e : trace.events) {
    if (const auto* c = e.as<ev::Compromise>()) {
      if (c->prover == p) hist.emplace_back(e.at, "bad");
    } else if (const auto* r = e.as<ev::Restore>()) {
      if (r->prover == p) hist.emplace_back(e.at, dev->initial_state);
    } else if (const auto* ce = e.as<ev::CaptureEnd>()) {
      if (ce->prover == p && ce->write) hist.emplace_back(e.at, "bad");
    }
  }
  return hist;
}

std::string label_at(const std::vector<std::pair<TimePoint, std::string>>& hist,
                     TimePoint t) {
  std::string label = hist.front().second;
  for (const auto& [at, l] : hist) {
    if (at <= t) label = l;
  }
  return label;
}

}  // namespace

bool is_valid_state(const Trace& trace, DeviceId p, TimePoint t) {
  auto hist = label_history(trace, p);
  AcceptableStates acc(trace.meta);
  return acc.contains(p, label_at(hist, t), t);
}

std::vector<TimePoint> state_change_points(const Trace& trace, DeviceId p,
                                           Interval window) {
  if (trace.events.empty()) {
    throw Error(Errc::EmptyTrace, "state_change_points over empty trace");
  }
  auto hist = label_history(trace, p);
  AcceptableStates acc(trace.meta);

  std::vector<TimePoint> candidates;
  candidates.push_back(window.start);
  for (const auto& [at, label] : hist) {
    if (at > window.start && at <= window.end) candidates.push_back(at);
  }
  for (TimePoint t : acc.update_times(p, window)) candidates.push_back(t);
  candidates.push_back(window.end);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  std::vector<TimePoint> out;
  out.push_back(window.start);
  bool prev = acc.contains(p, label_at(hist, window.start), window.start);
  for (TimePoint t : candidates) {
    if (t == window.start) continue;
    bool v = acc.contains(p, label_at(hist, t), t);
    if (v != prev) {
      out.push_back(t);
      prev = v;
    }
  }
  if (out.back() != window.end) out.push_back(window.end);
  return out;
}

TraceStateIndex::TraceStateIndex(const Trace& trace) {
  AcceptableStates acc(trace.meta);
  std::size_t n = trace.meta.devices.size();
  initial_valid_.resize(n);
  flips_.resize(n);
  monotone_ = !trace.meta.adversary.restores_possible();
  for (DeviceId p = 0; p < n; ++p) {
    auto hist = label_history(trace, p);
    // Events at tick 0 take effect at tick 0.
    bool prev = acc.contains(p, label_at(hist, 0), 0);
    initial_valid_[p] = prev;
    // Flip candidates: every label transition plus acceptable-list updates.
    std::vector<TimePoint> times;
    for (const auto& [at, label] : hist) {
      if (at > 0) times.push_back(at);
    }
    TimePoint horizon = trace.last_time();
    for (TimePoint t : acc.update_times(p, Interval{0, horizon})) {
      times.push_back(t);
      monotone_ = false;
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    for (TimePoint t : times) {
      bool v = acc.contains(p, label_at(hist, t), t);
      if (v != prev) {
        flips_[p].push_back(Flip{t, v});
        prev = v;
      }
    }
  }
}

bool TraceStateIndex::valid_at(DeviceId p, TimePoint t) const {
  if (p >= initial_valid_.size()) {
    throw Error(Errc::UnknownDevice, "device id " + std::to_string(p));
  }
  bool v = initial_valid_[p];
  for (const auto& f : flips_[p]) {
    if (f.at <= t) {
      v = f.valid;
    } else {
      break;
    }
  }
  return v;
}

std::vector<TimePoint> TraceStateIndex::change_points(DeviceId p,
                                                      Interval window) const {
  if (p >= initial_valid_.size()) {
    throw Error(Errc::UnknownDevice, "device id " + std::to_string(p));
  }
  std::vector<TimePoint> out;
  out.push_back(window.start);
  for (const auto& f : flips_[p]) {
    if (f.at > window.start && f.at <= window.end) out.push_back(f.at);
  }
  if (out.back() != window.end) out.push_back(window.end);
  return out;
}

}  // namespace crasim

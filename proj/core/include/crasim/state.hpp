#pragma once

#include <set>
#include <vector>

#include "crasim/event.hpp"

namespace crasim {

// Acceptable-state lists per device. Time-constant unless updates are
// configured at epoch boundaries.
class AcceptableStates {
 public:
  AcceptableStates() = default;
  explicit AcceptableStates(const TraceMeta& meta);

  void set_initial(DeviceId d, std::vector<std::string> labels);
  void add_update(DeviceId d, TimePoint from, std::vector<std::string> labels);

  bool contains(DeviceId d, const std::string& label, TimePoint t) const;
  // Times within [start, end] at which a device's list changes.
  std::vector<TimePoint> update_times(DeviceId d, Interval window) const;

 private:
  struct Entry {
    TimePoint from;
    std::set<std::string> labels;
  };
  std::vector<std::vector<Entry>> per_device_;  // sorted by `from`
};

// True iff the software-state label of `p` at `t`, reconstructed by
// replaying compromise/restore/capture-commit events, is acceptable.
bool is_valid_state(const Trace& trace, DeviceId p, TimePoint t);

// T.start, T.end and every timestamp in T at which p's validity flips.
// Quantifying the attestation definitions over this finite set is
// equivalent to quantifying over every t in T.
std::vector<TimePoint> state_change_points(const Trace& trace, DeviceId p,
                                           Interval window);

// Precomputed validity timelines for every device in a trace; the fast
// path used by the optimized checkers.
class TraceStateIndex {
 public:
  explicit TraceStateIndex(const Trace& trace);

  bool valid_at(DeviceId p, TimePoint t) const;
  std::vector<TimePoint> change_points(DeviceId p, Interval window) const;
  // True when validity can only decrease over time (no restores and no
  // acceptable-list updates), enabling the interval-endpoint shortcut.
  bool monotone_non_increasing() const { return monotone_; }

 private:
  struct Flip {
    TimePoint at;
    bool valid;
  };
  std::vector<bool> initial_valid_;
  std::vector<std::vector<Flip>> flips_;
  bool monotone_ = true;
};

}  // namespace crasim

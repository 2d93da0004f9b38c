#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace crasim {

// Global logical time. All timestamps within a trace are non-decreasing.
using TimePoint = std::uint64_t;

struct Interval {
  TimePoint start = 0;
  TimePoint end = 0;

  bool contains(TimePoint t) const { return start <= t && t <= end; }
  bool operator==(const Interval&) const = default;
};

// Index into the scenario's device table.
using DeviceId = std::uint32_t;

enum class Role : std::uint8_t {
  Prover,
  Initiator,
  Verifier,
  Aggregator,
  RelyingParty,
};

// A device may hold several roles at once.
class RoleSet {
 public:
  RoleSet() = default;

  void add(Role r) { bits_ |= bit(r); }
  bool has(Role r) const { return (bits_ & bit(r)) != 0; }
  bool operator==(const RoleSet&) const = default;

 private:
  static std::uint8_t bit(Role r) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(r));
  }
  std::uint8_t bits_ = 0;
};

std::string role_name(Role r);
Role role_from_name(const std::string& s);

enum class Status : std::uint8_t { Healthy, Unhealthy, Unknown };

std::string status_name(Status s);
Status status_from_name(const std::string& s);

// Opaque software-state label of a device's untrusted environment.
// Labels beginning with "bad" form the distinguished compromised family;
// acceptable-state sets never contain them (enforced at scenario load).
struct SoftwareState {
  std::string label;

  bool operator==(const SoftwareState&) const = default;
};

inline bool is_compromised_label(const std::string& label) {
  return label.rfind("bad", 0) == 0;
}

enum class Errc {
  UnknownDevice,
  EmptyTrace,
  TypeMismatch,
  InvalidTimer,
  RejectedAtomic,
  RejectedTrusted,
  RejectedRestore,
  RejectedCapability,
  RejectedWindow,
  ExplorationTooLarge,
  NotAViolation,
  TraceError,
  SpecError,
  NoClaims,
  ParseError,
  ConfigError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace crasim

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crasim/term.hpp"
#include "crasim/types.hpp"

namespace crasim {

namespace ev {

struct SendRequest {
  DeviceId initiator;
  DeviceId prover;
  sym::Term request;
};

struct RecvRequest {
  DeviceId prover;
  sym::Term request;
};

// The prover finished a protocol run it attributes to `initiator`.
struct RunComplete {
  DeviceId prover;
  DeviceId initiator;
  sym::Term request;
};

struct MeasureTaken {
  DeviceId prover;
  SoftwareState state;
};

struct Compromise {
  DeviceId prover;
};

struct Restore {
  DeviceId prover;
};

struct CaptureBegin {
  DeviceId prover;
  bool write;  // whether the capture will rewrite state at commit
};

struct CaptureEnd {
  DeviceId prover;
  bool write;  // state rewritten at this single commit point
};

struct SecretRead {
  DeviceId prover;
};

struct MsgSend {
  DeviceId src;
  DeviceId dst;
  sym::Term body;
};

struct MsgRecv {
  DeviceId dst;
  sym::Term body;
};

struct AttStart {
  DeviceId verifier;
  std::uint64_t counter;
};

struct ClaimIndividual {
  DeviceId party;
  std::map<DeviceId, Status> statuses;
  Interval window;
  std::uint64_t counter;
};

struct GroupStatus {
  std::vector<DeviceId> provers;
  Status status;
};

struct ClaimGroup {
  DeviceId party;
  std::vector<GroupStatus> groups;
  Interval window;
  std::uint64_t counter;
};

struct HeartbeatSend {
  DeviceId prover;
};

struct HeartbeatRecv {
  DeviceId observer;
  DeviceId prover;
};

struct EpochKeyUpdate {
  std::uint64_t epoch;
};

}  // namespace ev

using EventData =
    std::variant<ev::SendRequest, ev::RecvRequest, ev::RunComplete,
                 ev::MeasureTaken, ev::Compromise, ev::Restore,
                 ev::CaptureBegin, ev::CaptureEnd, ev::SecretRead, ev::MsgSend,
                 ev::MsgRecv, ev::AttStart, ev::ClaimIndividual, ev::ClaimGroup,
                 ev::HeartbeatSend, ev::HeartbeatRecv, ev::EpochKeyUpdate>;

struct Event {
  TimePoint at = 0;
  EventData data;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&data);
  }
};

const char* event_kind_name(const EventData& data);

struct AdversaryFlags {
  bool sw = false;
  bool msw = false;  // implies sw
  bool pni = false;
  bool pi = false;
  bool dy = false;

  // Whether a device's state can ever return to an acceptable label.
  bool restores_possible() const { return msw; }
  bool operator==(const AdversaryFlags&) const = default;
};

struct DeviceMeta {
  DeviceId id = 0;
  std::string name;
  RoleSet roles;
  std::string initial_state;               // untrusted-environment label
  std::vector<std::string> acceptable;     // acceptable-state labels
  std::int64_t clock_offset = 0;
};

// Per-prover detector output (heartbeat / frequency monitors).
struct DetectorFlag {
  DeviceId device = 0;
  TimePoint at = 0;
  std::string reason;
};

struct TraceMeta {
  int version = 1;
  std::string scenario;
  std::string protocol;   // simpleplus | seda | pads | sap | none
  bool interactive = true;
  std::uint64_t seed = 0;
  AdversaryFlags adversary;
  TimePoint t_attack = 0;
  std::vector<DeviceMeta> devices;
  std::vector<std::string> schedule;  // adversary decisions, canonical text
  std::vector<std::string> faults;    // handler faults and warnings
  std::vector<DetectorFlag> flags;
};

struct Trace {
  TraceMeta meta;
  std::vector<Event> events;

  const DeviceMeta* device(DeviceId id) const {
    return id < meta.devices.size() ? &meta.devices[id] : nullptr;
  }
  std::optional<DeviceId> device_by_name(const std::string& name) const {
    for (const auto& d : meta.devices) {
      if (d.name == name) return d.id;
    }
    return std::nullopt;
  }
  TimePoint last_time() const { return events.empty() ? 0 : events.back().at; }
};

}  // namespace crasim

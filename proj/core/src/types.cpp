#include "crasim/types.hpp"

namespace crasim {

std::string role_name(Role r) {
  switch (r) {
    case Role::Prover: return "prover";
    case Role::Initiator: return "initiator";
    case Role::Verifier: return "verifier";
    case Role::Aggregator: return "aggregator";
    case Role::RelyingParty: return "relying_party";
  }
  return "?";
}

Role role_from_name(const std::string& s) {
  if (s == "prover") return Role::Prover;
  if (s == "initiator") return Role::Initiator;
  if (s == "verifier") return Role::Verifier;
  if (s == "aggregator") return Role::Aggregator;
  if (s == "relying_party") return Role::RelyingParty;
  throw Error(Errc::ParseError, "unknown role: " + s);
}

std::string status_name(Status s) {
  switch (s) {
    case Status::Healthy: return "Healthy";
    case Status::Unhealthy: return "Unhealthy";
    case Status::Unknown: return "Unknown";
  }
  return "?";
}

Status status_from_name(const std::string& s) {
  if (s == "Healthy") return Status::Healthy;
  if (s == "Unhealthy") return Status::Unhealthy;
  if (s == "Unknown") return Status::Unknown;
  throw Error(Errc::ParseError, "unknown status: " + s);
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::UnknownDevice: return "UnknownDevice";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::InvalidTimer: return "InvalidTimer";
    case Errc::RejectedAtomic: return "RejectedAtomic";
    case Errc::RejectedTrusted: return "RejectedTrusted";
    case Errc::RejectedRestore: return "RejectedRestore";
    case Errc::RejectedCapability: return "RejectedCapability";
    case Errc::RejectedWindow: return "RejectedWindow";
    case Errc::ExplorationTooLarge: return "ExplorationTooLarge";
    case Errc::NotAViolation: return "NotAViolation";
    case Errc::TraceError: return "TraceError";
    case Errc::SpecError: return "SpecError";
    case Errc::NoClaims: return "NoClaims";
    case Errc::ParseError: return "ParseError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "?";
}

}  // namespace crasim

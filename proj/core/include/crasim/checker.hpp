#pragma once

#include <optional>
#include <vector>

#include "crasim/event.hpp"
#include "crasim/state.hpp"

namespace crasim::check {

// The nine properties: initiator authentication plus the
// individual/group x (a)synchronous x weak/strong attestation family.
enum class PropertyId : std::uint8_t { IA, IAW, IAS, ISW, ISS, GAW, GAS, GSW, GSS };

constexpr PropertyId kAllProperties[] = {
    PropertyId::IA,  PropertyId::IAW, PropertyId::IAS,
    PropertyId::ISW, PropertyId::ISS, PropertyId::GAW,
    PropertyId::GAS, PropertyId::GSW, PropertyId::GSS};

const char* property_name(PropertyId p);
PropertyId property_from_name(const std::string& s);

enum class VerdictResult : std::uint8_t { Holds, Violated, Inapplicable };

const char* verdict_result_name(VerdictResult r);
VerdictResult verdict_result_from_name(const std::string& s);

struct Verdict {
  PropertyId property = PropertyId::IA;
  VerdictResult result = VerdictResult::Holds;
  // Indices into the trace's event list; present iff Violated. Replaying
  // just these events through the checker reproduces the violation.
  std::optional<std::vector<std::size_t>> witness;
};

// Group expectations for the group checks. Empty `groups` means "judge the
// groups exactly as claimed". The threshold relaxes both clauses: a Healthy
// group tolerates up to `threshold` members without a valid time, and an
// Unhealthy group must have more than `threshold` invalid members at some
// time. Threshold 0 is the strict reading.
struct GroupSpec {
  std::vector<std::vector<DeviceId>> groups;
  std::uint64_t threshold = 0;
};

Verdict check_ia(const Trace& trace);
Verdict check_individual(const Trace& trace, bool sync, bool strong);
Verdict check_group(const Trace& trace, const GroupSpec& spec, bool sync,
                    bool strong);

enum class Qosa : std::uint8_t { Binary, Intermediate, List };
const char* qosa_name(Qosa q);
Qosa classify_qosa(const Trace& trace);

// Dispatches a property id to the corresponding check.
Verdict check_property(const Trace& trace, PropertyId p,
                       const GroupSpec& spec = {});

// Builds the reduced trace a witness refers to: the witness events plus the
// original header metadata.
Trace witness_subtrace(const Trace& trace, const std::vector<std::size_t>& witness);

// True when no stronger property Holds while a weaker one is Violated.
// The pairs are: sync implies async, strong implies weak, within each of
// the individual and group families.
bool strength_ordering_ok(const std::vector<Verdict>& verdicts);

}  // namespace crasim::check

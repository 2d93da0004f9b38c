#pragma once

#include "crasim/checker.hpp"

namespace crasim::check {

// Reference checkers: identical contracts to check_individual/check_group,
// implemented by exhaustive enumeration of every tick in the claim window
// with no monotonicity shortcuts and no precomputed timelines. Test use
// only; they exist to cross-validate the optimized checkers.
Verdict oracle_check_individual(const Trace& trace, bool sync, bool strong);
Verdict oracle_check_group(const Trace& trace, const GroupSpec& spec, bool sync,
                           bool strong);

}  // namespace crasim::check

#pragma once

#include <iosfwd>
#include <string>

#include "crasim/event.hpp"

namespace crasim {

// Line-delimited JSON: a leading header object with the scenario metadata,
// then one event per line with fields `at`, `kind`, `args`.
std::string trace_to_jsonl(const Trace& trace);
Trace trace_from_jsonl(const std::string& text);  // throws ParseError

void write_trace_file(const Trace& trace, const std::string& path);
Trace read_trace_file(const std::string& path);

}  // namespace crasim

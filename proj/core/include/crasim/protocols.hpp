#pragma once

#include <memory>
#include <vector>

#include "crasim/engine.hpp"

namespace crasim::proto {

// The protocol plus enabled defense services, in dispatch order (services
// first so they can consume their tagged messages).
std::vector<std::unique_ptr<net::Handler>> make_handlers(const Scenario& s);

// Post-hoc frequent-attestation monitor: flags every prover whose gap
// between consecutive measurements (including the run boundaries) strictly
// exceeds t_attack.
std::vector<DetectorFlag> attestation_frequency_monitor(const Trace& trace,
                                                        TimePoint t_attack);

// Authenticated wire helpers. A mac wire is pair(body, mac(key, body));
// a sign wire is pair(body, sign(key, body)) where verification is
// structural (signatures are publicly checkable).
sym::Term wire_mac(const sym::Term& key, const sym::Term& body);
bool open_mac(const sym::Term& wire, const sym::Term& key, sym::Term* body);
sym::Term wire_sign(const sym::Term& key, const sym::Term& body);
bool open_sign(const sym::Term& wire, const std::string& key_name,
               sym::Term* body);

// First atom of a pair-shaped body; empty for anything else.
std::string message_tag(const sym::Term& body);

// nil-terminated pair list helpers for vector/list payloads.
sym::Term term_list(const std::vector<sym::Term>& elems);
std::vector<sym::Term> term_list_elems(const sym::Term& list);

}  // namespace crasim::proto

#include "crasim/trace_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace crasim {

using nlohmann::json;

namespace {

json flags_to_json(const AdversaryFlags& f) {
  json out = json::array();
  if (f.sw) out.push_back("sw");
  if (f.msw) out.push_back("msw");
  if (f.pni) out.push_back("pni");
  if (f.pi) out.push_back("pi");
  if (f.dy) out.push_back("dy");
  return out;
}

AdversaryFlags flags_from_json(const json& arr) {
  AdversaryFlags f;
  for (const auto& v : arr) {
    std::string s = v.get<std::string>();
    if (s == "sw") f.sw = true;
    else if (s == "msw") { f.msw = true; f.sw = true; }
    else if (s == "pni") f.pni = true;
    else if (s == "pi") f.pi = true;
    else if (s == "dy") f.dy = true;
    else throw Error(Errc::ParseError, "unknown adversary flag: " + s);
  }
  return f;
}

json meta_to_json(const TraceMeta& m) {
  json h;
  h["version"] = m.version;
  h["scenario"] = m.scenario;
  h["protocol"] = m.protocol;
  h["interactive"] = m.interactive;
  h["seed"] = m.seed;
  h["adversary"] = flags_to_json(m.adversary);
  h["t_attack"] = m.t_attack;
  json devs = json::array();
  for (const auto& d : m.devices) {
    json jd;
    jd["id"] = d.id;
    jd["name"] = d.name;
    json roles = json::array();
    for (Role r : {Role::Prover, Role::Initiator, Role::Verifier,
                   Role::Aggregator, Role::RelyingParty}) {
      if (d.roles.has(r)) roles.push_back(role_name(r));
    }
    jd["roles"] = roles;
    jd["initial_state"] = d.initial_state;
    jd["acceptable"] = d.acceptable;
    jd["clock_offset"] = d.clock_offset;
    devs.push_back(jd);
  }
  h["devices"] = devs;
  h["schedule"] = m.schedule;
  h["faults"] = m.faults;
  json flags = json::array();
  for (const auto& f : m.flags) {
    flags.push_back({{"device", f.device}, {"at", f.at}, {"reason", f.reason}});
  }
  h["flags"] = flags;
  return h;
}

TraceMeta meta_from_json(const json& h) {
  TraceMeta m;
  m.version = h.at("version").get<int>();
  m.scenario = h.at("scenario").get<std::string>();
  m.protocol = h.at("protocol").get<std::string>();
  m.interactive = h.at("interactive").get<bool>();
  m.seed = h.at("seed").get<std::uint64_t>();
  m.adversary = flags_from_json(h.at("adversary"));
  m.t_attack = h.at("t_attack").get<TimePoint>();
  for (const auto& jd : h.at("devices")) {
    DeviceMeta d;
    d.id = jd.at("id").get<DeviceId>();
    d.name = jd.at("name").get<std::string>();
    for (const auto& r : jd.at("roles")) {
      d.roles.add(role_from_name(r.get<std::string>()));
    }
    d.initial_state = jd.at("initial_state").get<std::string>();
    d.acceptable = jd.at("acceptable").get<std::vector<std::string>>();
    d.clock_offset = jd.at("clock_offset").get<std::int64_t>();
    m.devices.push_back(std::move(d));
  }
  m.schedule = h.at("schedule").get<std::vector<std::string>>();
  m.faults = h.at("faults").get<std::vector<std::string>>();
  for (const auto& jf : h.at("flags")) {
    DetectorFlag f;
    f.device = jf.at("device").get<DeviceId>();
    f.at = jf.at("at").get<TimePoint>();
    f.reason = jf.at("reason").get<std::string>();
    m.flags.push_back(std::move(f));
  }
  return m;
}

struct ArgsWriter {
  json operator()(const ev::SendRequest& e) const {
    return {{"initiator", e.initiator}, {"prover", e.prover}, {"req", e.request.to_text()}};
  }
  json operator()(const ev::RecvRequest& e) const {
    return {{"prover", e.prover}, {"req", e.request.to_text()}};
  }
  json operator()(const ev::RunComplete& e) const {
    return {{"prover", e.prover}, {"initiator", e.initiator}, {"req", e.request.to_text()}};
  }
  json operator()(const ev::MeasureTaken& e) const {
    return {{"prover", e.prover}, {"state", e.state.label}};
  }
  json operator()(const ev::Compromise& e) const { return {{"prover", e.prover}}; }
  json operator()(const ev::Restore& e) const { return {{"prover", e.prover}}; }
  json operator()(const ev::CaptureBegin& e) const {
    return {{"prover", e.prover}, {"write", e.write}};
  }
  json operator()(const ev::CaptureEnd& e) const {
    return {{"prover", e.prover}, {"write", e.write}};
  }
  json operator()(const ev::SecretRead& e) const { return {{"prover", e.prover}}; }
  json operator()(const ev::MsgSend& e) const {
    return {{"src", e.src}, {"dst", e.dst}, {"term", e.body.to_text()}};
  }
  json operator()(const ev::MsgRecv& e) const {
    return {{"dst", e.dst}, {"term", e.body.to_text()}};
  }
  json operator()(const ev::AttStart& e) const {
    return {{"verifier", e.verifier}, {"counter", e.counter}};
  }
  json operator()(const ev::ClaimIndividual& e) const {
    json statuses = json::object();
    for (const auto& [p, s] : e.statuses) {
      statuses[std::to_string(p)] = status_name(s);
    }
    return {{"party", e.party}, {"statuses", statuses},
            {"start", e.window.start}, {"end", e.window.end},
            {"counter", e.counter}};
  }
  json operator()(const ev::ClaimGroup& e) const {
    json groups = json::array();
    for (const auto& g : e.groups) {
      groups.push_back({{"provers", g.provers}, {"status", status_name(g.status)}});
    }
    return {{"party", e.party}, {"groups", groups},
            {"start", e.window.start}, {"end", e.window.end},
            {"counter", e.counter}};
  }
  json operator()(const ev::HeartbeatSend& e) const { return {{"prover", e.prover}}; }
  json operator()(const ev::HeartbeatRecv& e) const {
    return {{"observer", e.observer}, {"prover", e.prover}};
  }
  json operator()(const ev::EpochKeyUpdate& e) const { return {{"epoch", e.epoch}}; }
};

EventData args_from_json(const std::string& kind, const json& a) {
  using sym::Term;
  auto dev = [&](const char* f) { return a.at(f).get<DeviceId>(); };
  auto term = [&](const char* f) { return Term::from_text(a.at(f).get<std::string>()); };
  if (kind == "SendRequest") return ev::SendRequest{dev("initiator"), dev("prover"), term("req")};
  if (kind == "RecvRequest") return ev::RecvRequest{dev("prover"), term("req")};
  if (kind == "RunComplete") return ev::RunComplete{dev("prover"), dev("initiator"), term("req")};
  if (kind == "MeasureTaken") {
    return ev::MeasureTaken{dev("prover"), SoftwareState{a.at("state").get<std::string>()}};
  }
  if (kind == "Compromise") return ev::Compromise{dev("prover")};
  if (kind == "Restore") return ev::Restore{dev("prover")};
  if (kind == "CaptureBegin") return ev::CaptureBegin{dev("prover"), a.at("write").get<bool>()};
  if (kind == "CaptureEnd") return ev::CaptureEnd{dev("prover"), a.at("write").get<bool>()};
  if (kind == "SecretRead") return ev::SecretRead{dev("prover")};
  if (kind == "MsgSend") return ev::MsgSend{dev("src"), dev("dst"), term("term")};
  if (kind == "MsgRecv") return ev::MsgRecv{dev("dst"), term("term")};
  if (kind == "AttStart") return ev::AttStart{dev("verifier"), a.at("counter").get<std::uint64_t>()};
  if (kind == "ClaimIndividual") {
    ev::ClaimIndividual c;
    c.party = dev("party");
    for (const auto& [key, val] : a.at("statuses").items()) {
      c.statuses[static_cast<DeviceId>(std::stoul(key))] =
          status_from_name(val.get<std::string>());
    }
    c.window = Interval{a.at("start").get<TimePoint>(), a.at("end").get<TimePoint>()};
    c.counter = a.at("counter").get<std::uint64_t>();
    return c;
  }
  if (kind == "ClaimGroup") {
    ev::ClaimGroup c;
    c.party = dev("party");
    for (const auto& jg : a.at("groups")) {
      ev::GroupStatus g;
      g.provers = jg.at("provers").get<std::vector<DeviceId>>();
      g.status = status_from_name(jg.at("status").get<std::string>());
      c.groups.push_back(std::move(g));
    }
    c.window = Interval{a.at("start").get<TimePoint>(), a.at("end").get<TimePoint>()};
    c.counter = a.at("counter").get<std::uint64_t>();
    return c;
  }
  if (kind == "HeartbeatSend") return ev::HeartbeatSend{dev("prover")};
  if (kind == "HeartbeatRecv") return ev::HeartbeatRecv{dev("observer"), dev("prover")};
  if (kind == "EpochKeyUpdate") return ev::EpochKeyUpdate{a.at("epoch").get<std::uint64_t>()};
  throw Error(Errc::ParseError, "unknown event kind: " + kind);
}

}  // namespace

const char* event_kind_name(const EventData& data) {
  static const char* names[] = {
      "SendRequest",  "RecvRequest",  "RunComplete",   "MeasureTaken",
      "Compromise",   "Restore",      "CaptureBegin",  "CaptureEnd",
      "SecretRead",   "MsgSend",      "MsgRecv",       "AttStart",
      "ClaimIndividual", "ClaimGroup", "HeartbeatSend", "HeartbeatRecv",
      "EpochKeyUpdate"};
  return names[data.index()];
}

std::string trace_to_jsonl(const Trace& trace) {
  std::ostringstream os;
  os << meta_to_json(trace.meta).dump() << "\n";
  for (const auto& e : trace.events) {
    json line;
    line["at"] = e.at;
    line["kind"] = event_kind_name(e.data);
    line["args"] = std::visit(ArgsWriter{}, e.data);
    os << line.dump() << "\n";
  }
  return os.str();
}

Trace trace_from_jsonl(const std::string& text) {
  Trace trace;
  std::istringstream is(text);
  std::string line;
  bool have_meta = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError,
                  "trace line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!have_meta) {
        trace.meta = meta_from_json(j);
        have_meta = true;
        continue;
      }
      Event e;
      e.at = j.at("at").get<TimePoint>();
      e.data = args_from_json(j.at("kind").get<std::string>(), j.at("args"));
      trace.events.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError,
                  "trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_meta) throw Error(Errc::ParseError, "trace has no header object");
  return trace;
}

void write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ConfigError, "cannot write " + path);
  f << trace_to_jsonl(trace);
}

Trace read_trace_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ParseError, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return trace_from_jsonl(ss.str());
}

}  // namespace crasim

#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "crasim/explorer.hpp"
#include "crasim/oracle.hpp"
#include "crasim/protocols.hpp"
#include "crasim/report.hpp"
#include "crasim/scenario.hpp"
#include "crasim/trace_io.hpp"

namespace crasim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Scenario load(const std::string& path, std::optional<std::uint64_t> seed) {
  Scenario s = load_scenario(path);
  if (seed) s.seed = *seed;
  return s;
}

void attach_att_flags(const Scenario& s, Trace& trace) {
  if (!s.defense_att) return;
  for (auto& f : proto::attestation_frequency_monitor(trace, s.t_attack)) {
    trace.meta.flags.push_back(f);
  }
}

check::GroupSpec group_spec(const Scenario& s) {
  check::GroupSpec spec;
  spec.threshold = s.group_threshold;
  return spec;
}

// Aggregated expectation over an exploration: a property "holds" when no
// trace violates it, is "violated" when at least one does.
check::VerdictResult aggregate(const explore::PropertyCount& c) {
  if (c.violated > 0) return check::VerdictResult::Violated;
  if (c.holds > 0) return check::VerdictResult::Holds;
  return check::VerdictResult::Inapplicable;
}

}  // namespace

int cmd_run(const RunArgs& args) {
  try {
    Scenario s = load(args.scenario_path, args.seed);
    Trace trace = explore::scripted_run(s);
    attach_att_flags(s, trace);
    write_trace_file(trace, args.out_path);
    return 0;
  } catch (const Error& e) {
    std::cerr << "run: " << e.what() << "\n";
    return 2;
  }
}

int cmd_explore(const ExploreArgs& args) {
  Scenario s;
  try {
    s = load(args.scenario_path, args.seed);
    if (args.cap) s.explore.cap = *args.cap;
    if (s.properties.empty()) {
      std::cerr << "explore: scenario lists no properties to check\n";
      return 2;
    }
    fs::create_directories(args.out_dir);
  } catch (const Error& e) {
    std::cerr << "explore: " << e.what() << "\n";
    return 2;
  }

  std::vector<report::ScenarioReport> reports;
  try {
    std::vector<std::pair<std::string, proto::Topology>> variants;
    variants.emplace_back("", s.build_topology());
    for (std::size_t i = 0; i < s.explore.variants.size(); ++i) {
      variants.emplace_back("v" + std::to_string(i + 1),
                            s.build_topology(s.explore.variants[i]));
    }
    for (auto& [label, topo] : variants) {
      explore::EnumerateOptions opts;
      opts.workers = args.workers;
      if (!args.quiet) {
        opts.progress_every = 100000;
        opts.progress = [&](std::uint64_t n) {
          std::cout << json{{"progress", n}, {"variant", label}}.dump() << "\n";
        };
      }
      auto t0 = std::chrono::steady_clock::now();
      explore::ExplorationResult res = explore::enumerate(s, topo, opts);
      auto t1 = std::chrono::steady_clock::now();

      report::ScenarioReport r;
      r.scenario = s.name;
      r.variant = label;
      r.traces = res.schedules;
      r.counts = res.counts;
      r.ordering_violations = res.ordering_violations;
      r.runtime_seconds = std::chrono::duration<double>(t1 - t0).count();
      for (auto& [prop, witness] : res.witnesses) {
        Trace minimized = explore::minimize(s, topo, witness, prop, group_spec(s));
        std::string name = s.name + (label.empty() ? "" : "_" + label) + "_" +
                           check::property_name(prop) + "_witness.jsonl";
        fs::path path = fs::path(args.out_dir) / name;
        write_trace_file(minimized, path.string());
        r.witness_paths[prop] = name;
      }
      reports.push_back(std::move(r));
      if (!args.quiet) {
        std::cout << json{{"variant", label}, {"schedules", res.schedules}}.dump()
                  << "\n";
      }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::ExplorationTooLarge) {
      std::cerr << "explore: " << e.what() << "\n";
      return 3;
    }
    std::cerr << "explore: " << e.what() << "\n";
    return 2;
  }

  std::string summary = args.format == "csv" ? report::summary_to_csv(reports)
                                             : report::summary_to_json(reports);
  std::string ext = args.format == "csv" ? "summary.csv" : "summary.json";
  std::ofstream((fs::path(args.out_dir) / ext).string(), std::ios::binary)
      << summary;
  std::ofstream((fs::path(args.out_dir) / "timings.json").string(),
                std::ios::binary)
      << report::timings_to_json(reports);

  // Expected-verdict comparison makes reproduction scenarios self-checking.
  int rc = 0;
  for (const auto& [prop, want] : s.expected) {
    explore::PropertyCount total;
    for (const auto& r : reports) {
      auto it = r.counts.find(prop);
      if (it == r.counts.end()) continue;
      total.holds += it->second.holds;
      total.violated += it->second.violated;
      total.inapplicable += it->second.inapplicable;
    }
    check::VerdictResult got = aggregate(total);
    if (got != want) {
      std::cerr << "explore: expected " << check::property_name(prop) << " "
                << check::verdict_result_name(want) << ", got "
                << check::verdict_result_name(got) << "\n";
      rc = 1;
    }
  }
  for (const auto& r : reports) {
    if (r.ordering_violations != 0) {
      std::cerr << "explore: strength-ordering violations in " << r.scenario
                << " " << r.variant << "\n";
      rc = 1;
    }
  }
  return rc;
}

int cmd_check(const CheckArgs& args) {
  Trace trace;
  try {
    trace = read_trace_file(args.trace_path);
  } catch (const Error& e) {
    std::cerr << "check: " << e.what() << "\n";
    return 2;
  }
  std::vector<check::PropertyId> props;
  try {
    if (args.properties.empty()) {
      props.assign(std::begin(check::kAllProperties),
                   std::end(check::kAllProperties));
    } else {
      for (const auto& p : args.properties) {
        props.push_back(check::property_from_name(p));
      }
    }
  } catch (const Error& e) {
    std::cerr << "check: " << e.what() << "\n";
    return 2;
  }

  check::GroupSpec spec;
  spec.threshold = args.group_threshold;
  std::vector<check::Verdict> verdicts;
  try {
    for (check::PropertyId p : props) {
      if (args.use_oracle) {
        switch (p) {
          case check::PropertyId::IA:
            verdicts.push_back(check::check_ia(trace));
            break;
          case check::PropertyId::IAW:
          case check::PropertyId::IAS:
          case check::PropertyId::ISW:
          case check::PropertyId::ISS: {
            bool sync = p == check::PropertyId::ISW || p == check::PropertyId::ISS;
            bool strong = p == check::PropertyId::IAS || p == check::PropertyId::ISS;
            verdicts.push_back(check::oracle_check_individual(trace, sync, strong));
            break;
          }
          default: {
            bool sync = p == check::PropertyId::GSW || p == check::PropertyId::GSS;
            bool strong = p == check::PropertyId::GAS || p == check::PropertyId::GSS;
            verdicts.push_back(check::oracle_check_group(trace, spec, sync, strong));
            break;
          }
        }
      } else {
        verdicts.push_back(check::check_property(trace, p, spec));
      }
    }
  } catch (const Error& e) {
    std::cerr << "check: " << e.what() << "\n";
    return 2;
  }

  if (args.format == "csv") {
    std::cout << "property,result\n";
    for (const auto& v : verdicts) {
      std::cout << check::property_name(v.property) << ","
                << check::verdict_result_name(v.result) << "\n";
    }
  } else {
    std::cout << report::verdicts_to_json(verdicts) << "\n";
  }
  for (const auto& v : verdicts) {
    if (v.result == check::VerdictResult::Violated) return 1;
  }
  return 0;
}

int cmd_report(const ReportArgs& args) {
  json merged = json::array();
  try {
    for (const auto& input : args.inputs) {
      fs::path p(input);
      if (fs::is_directory(p)) p /= "summary.json";
      std::ifstream f(p.string(), std::ios::binary);
      if (!f) throw Error(Errc::ParseError, "cannot read " + p.string());
      json j = json::parse(f);
      for (auto& entry : j) merged.push_back(entry);
    }
  } catch (const json::exception& e) {
    std::cerr << "report: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "report: " << e.what() << "\n";
    return 2;
  }
  std::string out;
  if (args.format == "csv") {
    std::ostringstream os;
    os << "scenario,variant,property,holds,violated,inapplicable,witness\n";
    for (const auto& entry : merged) {
      for (const auto& [prop, counts] : entry.at("properties").items()) {
        os << entry.at("scenario").get<std::string>() << ","
           << entry.at("variant").get<std::string>() << "," << prop << ","
           << counts.at("holds").get<std::uint64_t>() << ","
           << counts.at("violated").get<std::uint64_t>() << ","
           << counts.at("inapplicable").get<std::uint64_t>() << ",";
        if (counts.contains("witness")) {
          os << counts.at("witness").get<std::string>();
        }
        os << "\n";
      }
    }
    out = os.str();
  } else {
    out = merged.dump(2) + "\n";
  }
  if (args.out_path.empty()) {
    std::cout << out;
  } else {
    std::ofstream(args.out_path, std::ios::binary) << out;
  }
  return 0;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"collective remote attestation simulator and trace checker"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "execute one scenario and write its trace");
  run->add_option("scenario", run_args.scenario_path, "scenario file")->required();
  run->add_option("-o,--out", run_args.out_path, "output trace path")->required();
  std::uint64_t run_seed = 0;
  auto* run_seed_opt =
      run->add_option("--seed", run_seed, "override the scenario seed")
          ->envname("CRASIM_SEED");

  ExploreArgs explore_args;
  auto* explore =
      app.add_subcommand("explore", "enumerate adversary schedules and check properties");
  explore->add_option("scenario", explore_args.scenario_path, "scenario file")
      ->required();
  explore->add_option("-o,--out", explore_args.out_dir, "output directory")
      ->required();
  std::uint64_t explore_seed = 0;
  auto* explore_seed_opt =
      explore->add_option("--seed", explore_seed, "override the scenario seed")
          ->envname("CRASIM_SEED");
  std::uint64_t explore_cap = 0;
  auto* explore_cap_opt =
      explore->add_option("--cap", explore_cap, "schedule-count cap")
          ->envname("CRASIM_CAP");
  explore->add_option("--workers", explore_args.workers, "worker threads")
      ->envname("CRASIM_WORKERS");
  explore->add_option("--format", explore_args.format, "summary format")
      ->check(CLI::IsMember({"json", "csv"}));
  explore->add_flag("--quiet", explore_args.quiet, "suppress progress output");

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "check properties against a trace file");
  check->add_option("trace", check_args.trace_path, "trace file")->required();
  check->add_option("--properties", check_args.properties,
                    "property names (default: all nine)")
      ->delimiter(',');
  check->add_option("--group-threshold", check_args.group_threshold,
                    "healthy-group invalid-member tolerance");
  check->add_option("--format", check_args.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
  check->add_flag("--oracle", check_args.use_oracle,
                  "use the naive reference checkers");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "merge exploration summaries");
  report->add_option("inputs", report_args.inputs,
                     "summary.json files or explore output directories")
      ->required();
  report->add_option("-o,--out", report_args.out_path, "output path (default stdout)");
  report->add_option("--format", report_args.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    if (run_seed_opt->count()) run_args.seed = run_seed;
    return cmd_run(run_args);
  }
  if (explore->parsed()) {
    if (explore_seed_opt->count()) explore_args.seed = explore_seed;
    if (explore_cap_opt->count()) explore_args.cap = explore_cap;
    return cmd_explore(explore_args);
  }
  if (check->parsed()) return cmd_check(check_args);
  if (report->parsed()) return cmd_report(report_args);
  return 2;
}

}  // namespace crasim::cli

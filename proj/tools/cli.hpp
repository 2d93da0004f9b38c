#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace crasim::cli {

// Exit codes: 0 success, 1 property/expectation failure, 2 input or schema
// error, 3 exploration exceeds its cap.

struct RunArgs {
  std::string scenario_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
};
int cmd_run(const RunArgs& args);

struct ExploreArgs {
  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> cap;
  std::size_t workers = 1;
  std::string format = "json";  // json | csv
  bool quiet = false;
};
int cmd_explore(const ExploreArgs& args);

struct CheckArgs {
  std::string trace_path;
  std::vector<std::string> properties;  // empty: all nine
  std::uint64_t group_threshold = 0;
  std::string format = "json";
  bool use_oracle = false;
};
int cmd_check(const CheckArgs& args);

struct ReportArgs {
  std::vector<std::string> inputs;  // summary.json files or explore out-dirs
  std::string out_path;
  std::string format = "json";
};
int cmd_report(const ReportArgs& args);

int main_entry(int argc, char** argv);

}  // namespace crasim::cli

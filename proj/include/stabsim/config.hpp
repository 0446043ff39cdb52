#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "stabsim/faults.hpp"
#include "stabsim/graph.hpp"

namespace stabsim {

// Malformed or missing configuration value.  The message names the
// offending field as "[section] key" plus the reason.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A scenario entry is either one explicit fault or a named family that
// the runner expands against the chosen graph and focus node.
struct ScenarioSpec {
  enum class Family { explicit_fault, worst_case_broadcast, memory_sweep, none };

  Family family = Family::none;
  FaultScenario fault;  // meaningful only for explicit_fault
  std::string text;     // value as written, echoed into outputs
};

struct ConfigGraph {
  enum class Source { generated, file, cascade };

  Source source = Source::generated;
  GraphSpec spec = GraphSpec::star(1);  // meaningful only for generated
  std::string path;                     // meaningful only for file

  std::string describe() const;
};

struct ExperimentConfig {
  std::string protocol;
  ConfigGraph graph;
  ScenarioSpec scenario;
  std::optional<int> node;  // focus node for scenario families
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  int max_rounds = 10000;
  std::optional<int> radius_cap;  // overrides the protocol's default cap
  int threads = 0;                // 0 = hardware concurrency
  std::string output;             // summary file path, empty = stdout only
  std::string output_format = "json";  // "json" | "csv"
};

// Scenario value grammar:
//   none
//   worst-case-broadcast
//   memory-sweep
//   broadcast node=<id> color=<int|none> final=<true|false> [round=<r>]
//   memory node=<id> color=<int|none|keep> final=<true|false|keep> [round=<r>]
ScenarioSpec parse_scenario(const std::string& text);

// Config file grammar (documented in docs/formats.md): a "format=1"
// line, then "[experiment]" and "[graph]" sections of key = value
// pairs.  Lines whose first non-space character is '#' are comments.
ExperimentConfig parse_config(std::istream& in, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

}  // namespace stabsim

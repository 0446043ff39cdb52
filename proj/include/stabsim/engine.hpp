#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stabsim/faults.hpp"
#include "stabsim/graph.hpp"
#include "stabsim/protocol.hpp"
#include "stabsim/rng.hpp"

namespace stabsim {

// One round's in-flight corruption: all neighbors of `sender` receive
// `payload` instead of the true broadcast.
struct StepFault {
  int sender = -1;
  Message payload;
};

struct RoundRecord {
  int round = 0;
  std::vector<int> changed;  // ascending node ids
};

enum class TraceMode {
  none,     // counters and contamination only
  changes,  // per-round changed sets
  full      // changed sets plus per-round broadcasts and configurations
};

struct RunOptions {
  int max_rounds = 10000;
  TraceMode trace = TraceMode::changes;
};

// Outcome of a single execution.
//
// Recovery counters use the convention that value k means k rounds
// after the fault took effect.  A corrupted broadcast takes effect
// during its delivery round, so that round itself is value 0 and the
// following rounds count 1, 2, ...  A memory corruption (and likewise a
// fault-free start) takes effect at a round boundary: the perturbed
// configuration itself is value 0 and each executed round counts from 1.
// Value -1 means the predicate never held before the run ended.
struct RunResult {
  int rounds_to_legal = -1;
  int rounds_to_legitimate = -1;
  bool diverged = false;
  int executed_rounds = 0;
  std::vector<RoundRecord> records;                // trace >= changes
  std::vector<Configuration> configs;              // trace == full
  std::vector<std::vector<Message>> broadcasts;    // trace == full
  std::vector<char> touched;  // per node: changed at least once since the fault
  Configuration final_config;
};

// Executes one synchronous round: every node broadcasts a message
// derived from its pre-round state, then all nodes transition
// simultaneously on their inboxes.  Inbox order is ascending neighbor
// id.  Per-node randomness comes from independent streams keyed by
// (trial_seed, cfg.round, node), so results do not depend on evaluation
// order.  `sent`, when non-null, receives the delivered broadcasts.
Configuration step(const Graph& g, const ProtocolHandle& protocol, const Configuration& cfg,
                   uint64_t trial_seed, const StepFault* fault, RoundRecord& record,
                   std::vector<Message>* sent = nullptr);

// Applies the scenario and executes rounds until the legitimacy
// predicate holds or max_rounds rounds have run (then diverged is set).
// The first round where the weaker legality predicate holds is recorded
// separately.
RunResult run(const Graph& g, const ProtocolHandle& protocol, const Configuration& initial,
              const FaultScenario& scenario, uint64_t trial_seed,
              const RunOptions& opts = RunOptions{});

// One JSON object per executed round: {"round": r, "changed": [...]},
// plus "states": [[color, done], ...] when the result carries full
// configurations.  The unset color is serialized as null.
void write_trace_jsonl(std::ostream& out, const RunResult& result);

}  // namespace stabsim

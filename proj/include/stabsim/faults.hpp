#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stabsim/graph.hpp"
#include "stabsim/protocol.hpp"

namespace stabsim {

// One single-fault perturbation of a legitimate configuration.
//
// memory: at the boundary before round `injection_round` broadcasts, the
// node's stored state is overwritten (absent fields keep their value).
// broadcast: during round `injection_round`, every neighbor of `node`
// receives `payload` in place of the true message; the sender's own
// state is untouched.
struct FaultScenario {
  enum class Kind { none, memory, broadcast };

  Kind kind = Kind::none;
  int node = -1;
  std::optional<int> new_color;   // memory; kNoColor clears the color
  std::optional<bool> new_done;   // memory
  Message payload;                // broadcast
  int injection_round = 0;

  static FaultScenario none_fault();
  static FaultScenario memory(int node, std::optional<int> new_color,
                              std::optional<bool> new_done, int injection_round = 0);
  static FaultScenario broadcast(int sender, Message payload, int injection_round = 0);

  std::string describe() const;
};

// Neighbors of `node` holding color `color`.  Under a legal coloring the
// members form an independent set; the constructor checks this.
struct ConflictSet {
  int node = -1;
  int color = kNoColor;
  std::vector<int> members;  // ascending ids
};

ConflictSet conflict_set(const Graph& g, const Configuration& cfg, int node, int color);

// Per-node draws from the protocol's random_state sampler, on streams
// derived from `seed` (disjoint from the streams any later run consumes).
Configuration random_configuration(const Graph& g, const ProtocolHandle& protocol,
                                   uint64_t seed);

// Runs the protocol from a random configuration until its legitimacy
// predicate holds.  Throws std::runtime_error on divergence.
Configuration legitimate_config(const Graph& g, const ProtocolHandle& protocol,
                                uint64_t seed, int max_rounds = 10000);

// The five canonical single-fault scenarios against node v of a
// legitimate coloring configuration, in fixed order:
//   broadcast (c*, done)       c* = neighbor color with the largest
//   broadcast (c*, not done)   conflict set, ties to the smallest color
//   memory    color := c*
//   memory    done := false
//   memory    color := c*, done := false
std::vector<FaultScenario> worst_case_scenarios(const Graph& g, const Configuration& cfg,
                                                int v);

// Memory corruptions of v's color over {0..deg(v)}, the unset value and
// one out-of-range color (deg(v)+1), each with the done flag kept and
// with it cleared, plus the lone flag-clear scenario.
std::vector<FaultScenario> memory_sweep(const Graph& g, const Configuration& cfg, int v);

}  // namespace stabsim

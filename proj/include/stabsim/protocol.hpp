#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stabsim/graph.hpp"
#include "stabsim/rng.hpp"

namespace stabsim {

// Shared node state for all protocols.  Coloring protocols use `color`
// (kNoColor = unset) and the message-passing variant additionally uses
// `done` to mark a node that considers its color fixed.  The MIS protocol
// stores kIn/kOut in the color slot and leaves `done` false.
constexpr int kNoColor = -1;
constexpr int kOut = 0;
constexpr int kIn = 1;

struct NodeState {
  int color = kNoColor;
  bool done = false;

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct Configuration {
  std::vector<NodeState> states;
  int round = 0;
};

// Broadcast payloads equal node states; every protocol here announces its
// full state each round.
using Message = NodeState;

// Color draw used by the message-passing protocol: kNoColor with
// probability exactly 1/2, otherwise uniform over {0..degree} \ tabu.
// Entries of tabu outside {0..degree} are ignored.  Throws
// std::domain_error if tabu covers the whole palette.
int random_color(int degree, std::span<const int> tabu, NodeRng& rng);

// Transition rules.  `inbox` holds one message per neighbor in ascending
// neighbor id order; `degree` is the node's own degree and `max_degree`
// the graph-wide maximum (the palette for a2/a3 is {0..max_degree}).
NodeState acol_transition(const NodeState& self, std::span<const Message> inbox,
                          int degree, NodeRng& rng);
NodeState a1_transition(const NodeState& self, std::span<const Message> inbox,
                        NodeRng& rng);
NodeState a2_transition(const NodeState& self, std::span<const Message> inbox,
                        int max_degree, NodeRng& rng);
NodeState a3_transition(const NodeState& self, std::span<const Message> inbox,
                        int max_degree, NodeRng& rng);

// Coloring predicates.
bool is_legal_coloring(const Graph& g, const Configuration& cfg);      // c set, c <= deg(v), proper
bool is_legitimate_acol(const Graph& g, const Configuration& cfg);     // legal and all done
bool is_proper_palette_coloring(const Graph& g, const Configuration& cfg);  // c in {0..Delta}, proper
bool is_max_rule_fixpoint(const Graph& g, const Configuration& cfg);   // no a2 move enabled
bool is_mis(const Graph& g, const Configuration& cfg);

// A protocol bundled for the engine: transition, message extraction,
// weak/strong stability predicates, a random-state sampler for
// stabilization experiments, and the claimed contamination radius
// (-1 when no constant-radius claim holds).
//
// `quiescent` must return true only when the transition is the identity
// with certainty and draws no randomness for the given (state, inbox);
// the engine then skips the transition call.  Skipping must never alter
// observable behavior.
struct ProtocolHandle {
  std::string name;
  std::function<NodeState(const NodeState&, std::span<const Message>, int degree,
                          int max_degree, NodeRng&)>
      transition;
  std::function<Message(const NodeState&)> message;
  std::function<bool(const NodeState&, std::span<const Message>, int degree,
                     int max_degree)>
      quiescent;
  std::function<bool(const Graph&, const Configuration&)> legal;
  std::function<bool(const Graph&, const Configuration&)> legitimate;
  std::function<NodeState(int degree, int max_degree, NodeRng&)> random_state;
  int radius_claim = -1;
};

ProtocolHandle acol_protocol();
ProtocolHandle a1_protocol();
ProtocolHandle a2_protocol();
ProtocolHandle a3_protocol();

// Lookup by name ("acol", "a1", "a2", "a3"); throws std::invalid_argument
// for anything else.
ProtocolHandle make_protocol(const std::string& name);

}  // namespace stabsim

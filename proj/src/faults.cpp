#include "stabsim/faults.hpp"

#include <algorithm>
#include <stdexcept>

#include "stabsim/engine.hpp"

namespace stabsim {

namespace {

std::string color_name(int c) { return c == kNoColor ? "none" : std::to_string(c); }

constexpr uint64_t kInitSalt = 0x696e6974;  // distinct stream for initial draws

}  // namespace

FaultScenario FaultScenario::none_fault() { return FaultScenario{}; }

FaultScenario FaultScenario::memory(int node, std::optional<int> new_color,
                                    std::optional<bool> new_done, int injection_round) {
  FaultScenario sc;
  sc.kind = Kind::memory;
  sc.node = node;
  sc.new_color = new_color;
  sc.new_done = new_done;
  sc.injection_round = injection_round;
  return sc;
}

FaultScenario FaultScenario::broadcast(int sender, Message payload, int injection_round) {
  FaultScenario sc;
  sc.kind = Kind::broadcast;
  sc.node = sender;
  sc.payload = payload;
  sc.injection_round = injection_round;
  return sc;
}

std::string FaultScenario::describe() const {
  switch (kind) {
    case Kind::none:
      return "none";
    case Kind::broadcast:
      return "broadcast node=" + std::to_string(node) + " color=" +
             color_name(payload.color) + " final=" + (payload.done ? "true" : "false") +
             (injection_round != 0 ? " round=" + std::to_string(injection_round) : "");
    case Kind::memory: {
      std::string s = "memory node=" + std::to_string(node);
      s += " color=" + (new_color.has_value() ? color_name(*new_color) : "keep");
      s += " final=";
      s += new_done.has_value() ? (*new_done ? "true" : "false") : "keep";
      if (injection_round != 0) s += " round=" + std::to_string(injection_round);
      return s;
    }
  }
  return "?";
}

ConflictSet conflict_set(const Graph& g, const Configuration& cfg, int node, int color) {
  ConflictSet cs;
  cs.node = node;
  cs.color = color;
  for (int w : g.neighbors(node)) {
    if (cfg.states.at(static_cast<size_t>(w)).color == color) cs.members.push_back(w);
  }
  for (size_t i = 0; i < cs.members.size(); ++i) {
    for (size_t j = i + 1; j < cs.members.size(); ++j) {
      if (g.has_edge(cs.members[i], cs.members[j])) {
        throw std::logic_error("conflict_set: members " + std::to_string(cs.members[i]) +
                               " and " + std::to_string(cs.members[j]) +
                               " are adjacent; configuration is not properly colored");
      }
    }
  }
  return cs;
}

Configuration random_configuration(const Graph& g, const ProtocolHandle& protocol,
                                   uint64_t seed) {
  const int n = g.node_count();
  const int delta = g.max_degree();
  Configuration cfg;
  cfg.states.resize(static_cast<size_t>(n));
  const uint64_t init_seed = mix_seed(seed, kInitSalt);
  for (int v = 0; v < n; ++v) {
    NodeRng rng(init_seed, 0, static_cast<uint64_t>(v));
    cfg.states[static_cast<size_t>(v)] = protocol.random_state(g.degree(v), delta, rng);
  }
  return cfg;
}

Configuration legitimate_config(const Graph& g, const ProtocolHandle& protocol,
                                uint64_t seed, int max_rounds) {
  Configuration cfg = random_configuration(g, protocol, seed);

  RunOptions opts;
  opts.max_rounds = max_rounds;
  opts.trace = TraceMode::none;
  RunResult res = run(g, protocol, cfg, FaultScenario::none_fault(), seed, opts);
  if (res.diverged) {
    throw std::runtime_error("legitimate_config: " + protocol.name +
                             " did not reach a legitimate configuration within " +
                             std::to_string(max_rounds) + " rounds (seed " +
                             std::to_string(seed) + ")");
  }
  return res.final_config;
}

std::vector<FaultScenario> worst_case_scenarios(const Graph& g, const Configuration& cfg,
                                                int v) {
  // Conflict color: the neighbor color with the most holders around v,
  // ties to the smallest color.  With no colored neighbors fall back to 0.
  int best_color = -1;
  size_t best_count = 0;
  std::vector<int> colors;
  for (int w : g.neighbors(v)) {
    int c = cfg.states.at(static_cast<size_t>(w)).color;
    if (c != kNoColor) colors.push_back(c);
  }
  std::sort(colors.begin(), colors.end());
  for (size_t i = 0; i < colors.size();) {
    size_t j = i;
    while (j < colors.size() && colors[j] == colors[i]) ++j;
    if (j - i > best_count) {
      best_count = j - i;
      best_color = colors[i];
    }
    i = j;
  }
  if (best_color < 0) best_color = 0;

  std::vector<FaultScenario> out;
  out.push_back(FaultScenario::broadcast(v, Message{best_color, true}));
  out.push_back(FaultScenario::broadcast(v, Message{best_color, false}));
  out.push_back(FaultScenario::memory(v, best_color, std::nullopt));
  out.push_back(FaultScenario::memory(v, std::nullopt, false));
  out.push_back(FaultScenario::memory(v, best_color, false));
  return out;
}

std::vector<FaultScenario> memory_sweep(const Graph& g, const Configuration& cfg, int v) {
  (void)cfg;
  std::vector<FaultScenario> out;
  std::vector<int> values;
  for (int c = 0; c <= g.degree(v); ++c) values.push_back(c);
  values.push_back(kNoColor);
  values.push_back(g.degree(v) + 1);
  for (int c : values) {
    out.push_back(FaultScenario::memory(v, c, std::nullopt));
    out.push_back(FaultScenario::memory(v, c, false));
  }
  out.push_back(FaultScenario::memory(v, std::nullopt, false));
  return out;
}

}  // namespace stabsim

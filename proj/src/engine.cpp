#include "stabsim/engine.hpp"

#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"

namespace stabsim {

Configuration step(const Graph& g, const ProtocolHandle& protocol, const Configuration& cfg,
                   uint64_t trial_seed, const StepFault* fault, RoundRecord& record,
                   std::vector<Message>* sent_out) {
  const int n = g.node_count();
  if (static_cast<int>(cfg.states.size()) != n) {
    throw std::invalid_argument("step: configuration has " +
                                std::to_string(cfg.states.size()) + " states for " +
                                std::to_string(n) + " nodes");
  }

  std::vector<Message> sent(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) sent[static_cast<size_t>(v)] = protocol.message(cfg.states[static_cast<size_t>(v)]);
  if (fault != nullptr) {
    if (fault->sender < 0 || fault->sender >= n) {
      throw std::invalid_argument("step: fault sender " + std::to_string(fault->sender) +
                                  " out of range");
    }
    // A node never receives its own broadcast, so replacing the sender's
    // outgoing message corrupts every delivery without touching its state.
    sent[static_cast<size_t>(fault->sender)] = fault->payload;
  }

  Configuration next;
  next.states.resize(static_cast<size_t>(n));
  next.round = cfg.round + 1;
  record.round = cfg.round;
  record.changed.clear();

  const int delta = g.max_degree();
  std::vector<Message> inbox;
  for (int v = 0; v < n; ++v) {
    const auto& nb = g.neighbors(v);
    inbox.clear();
    for (int u : nb) inbox.push_back(sent[static_cast<size_t>(u)]);
    const std::span<const Message> in(inbox);
    const int deg = static_cast<int>(nb.size());
    const NodeState& self = cfg.states[static_cast<size_t>(v)];
    if (protocol.quiescent(self, in, deg, delta)) {
      next.states[static_cast<size_t>(v)] = self;
    } else {
      NodeRng rng(trial_seed, static_cast<uint64_t>(cfg.round), static_cast<uint64_t>(v));
      next.states[static_cast<size_t>(v)] = protocol.transition(self, in, deg, delta, rng);
    }
    if (!(next.states[static_cast<size_t>(v)] == self)) record.changed.push_back(v);
  }
  if (sent_out != nullptr) *sent_out = std::move(sent);
  return next;
}

namespace {

void apply_memory_fault(Configuration& cfg, const FaultScenario& sc) {
  NodeState& s = cfg.states.at(static_cast<size_t>(sc.node));
  if (sc.new_color.has_value()) s.color = *sc.new_color;
  if (sc.new_done.has_value()) s.done = *sc.new_done;
}

}  // namespace

RunResult run(const Graph& g, const ProtocolHandle& protocol, const Configuration& initial,
              const FaultScenario& scenario, uint64_t trial_seed, const RunOptions& opts) {
  if (opts.max_rounds < 1) throw std::invalid_argument("run: max_rounds must be >= 1");
  const int n = g.node_count();
  const bool is_broadcast = scenario.kind == FaultScenario::Kind::broadcast;
  const int inject = scenario.injection_round;

  RunResult res;
  res.touched.assign(static_cast<size_t>(n), 0);

  Configuration cfg = initial;
  cfg.round = 0;

  auto check = [&](int value) {
    if (res.rounds_to_legal < 0 && protocol.legal(g, cfg)) res.rounds_to_legal = value;
    if (res.rounds_to_legitimate < 0 && protocol.legitimate(g, cfg)) {
      res.rounds_to_legitimate = value;
    }
  };

  // Memory faults (and fault-free starts) are judged from the round
  // boundary: the perturbed configuration counts as value 0.
  if (!is_broadcast && inject == 0) {
    if (scenario.kind == FaultScenario::Kind::memory) apply_memory_fault(cfg, scenario);
    check(0);
  }

  RoundRecord rec;
  std::vector<Message> sent;
  for (int r = 0; res.rounds_to_legitimate < 0; ++r) {
    if (r >= opts.max_rounds) {
      res.diverged = true;
      break;
    }
    if (!is_broadcast && inject == r && inject > 0) {
      if (scenario.kind == FaultScenario::Kind::memory) apply_memory_fault(cfg, scenario);
      check(0);
      if (res.rounds_to_legitimate >= 0) break;
    }

    StepFault sf;
    const StepFault* fault = nullptr;
    if (is_broadcast && r == inject) {
      sf.sender = scenario.node;
      sf.payload = scenario.payload;
      fault = &sf;
    }

    cfg = step(g, protocol, cfg, trial_seed, fault,
               rec, opts.trace == TraceMode::full ? &sent : nullptr);
    ++res.executed_rounds;

    const int value = r < inject ? -1 : (is_broadcast ? r - inject : r - inject + 1);
    if (value >= 0) {
      for (int v : rec.changed) res.touched[static_cast<size_t>(v)] = 1;
      check(value);
    }
    if (opts.trace != TraceMode::none) res.records.push_back(rec);
    if (opts.trace == TraceMode::full) {
      res.broadcasts.push_back(std::move(sent));
      res.configs.push_back(cfg);
    }
  }

  res.final_config = std::move(cfg);
  return res;
}

void write_trace_jsonl(std::ostream& out, const RunResult& result) {
  const bool full = !result.configs.empty();
  for (size_t i = 0; i < result.records.size(); ++i) {
    nlohmann::ordered_json line;
    line["round"] = result.records[i].round;
    line["changed"] = result.records[i].changed;
    if (full && i < result.configs.size()) {
      nlohmann::ordered_json states = nlohmann::ordered_json::array();
      for (const NodeState& s : result.configs[i].states) {
        nlohmann::ordered_json entry = nlohmann::ordered_json::array();
        if (s.color == kNoColor) {
          entry.push_back(nullptr);
        } else {
          entry.push_back(s.color);
        }
        entry.push_back(s.done);
        states.push_back(std::move(entry));
      }
      line["states"] = std::move(states);
    }
    out << line.dump() << '\n';
  }
}

}  // namespace stabsim

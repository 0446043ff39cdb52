#include "stabsim/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace stabsim {

namespace {

bool contains(std::span<const int> xs, int x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

// Colors 0..degree not present in tabu, ascending.
std::vector<int> palette_minus(int degree, std::span<const int> tabu) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(degree) + 1);
  for (int c = 0; c <= degree; ++c) {
    if (!contains(tabu, c)) out.push_back(c);
  }
  return out;
}

}  // namespace

int random_color(int degree, std::span<const int> tabu, NodeRng& rng) {
  if (rng.bit()) return kNoColor;
  std::vector<int> candidates = palette_minus(degree, tabu);
  if (candidates.empty()) {
    throw std::domain_error("random_color: tabu covers the whole palette {0.." +
                            std::to_string(degree) + "}");
  }
  return candidates[rng.uniform(static_cast<uint32_t>(candidates.size()))];
}

NodeState acol_transition(const NodeState& self, std::span<const Message> inbox,
                          int degree, NodeRng& rng) {
  std::vector<int> occupied;
  std::vector<int> tabu;
  occupied.reserve(inbox.size());
  for (const Message& m : inbox) {
    if (m.color == kNoColor) continue;
    occupied.push_back(m.color);
    if (m.done) tabu.push_back(m.color);
  }

  NodeState next = self;
  if (next.color == kNoColor || next.color > degree) {
    next.done = false;
  } else if (next.done) {
    if (contains(tabu, next.color)) next.done = false;
  } else {
    if (!contains(occupied, next.color)) next.done = true;
  }
  if (!next.done) next.color = random_color(degree, tabu, rng);
  return next;
}

NodeState a1_transition(const NodeState& self, std::span<const Message> inbox,
                        NodeRng& rng) {
  bool in_neighbor = false;
  for (const Message& m : inbox) {
    if (m.color == kIn) {
      in_neighbor = true;
      break;
    }
  }
  NodeState next = self;
  if (self.color == kIn) {
    if (in_neighbor) next.color = kOut;
  } else {
    if (!in_neighbor && rng.bit()) next.color = kIn;
  }
  return next;
}

namespace {

// Largest color of {0..max_degree} not used by any neighbor.  Always
// exists: the inbox holds at most max_degree messages.
int max_free_color(std::span<const Message> inbox, int max_degree) {
  std::vector<char> used(static_cast<size_t>(max_degree) + 1, 0);
  for (const Message& m : inbox) {
    if (m.color >= 0 && m.color <= max_degree) used[static_cast<size_t>(m.color)] = 1;
  }
  for (int c = max_degree; c >= 0; --c) {
    if (!used[static_cast<size_t>(c)]) return c;
  }
  throw std::logic_error("max_free_color: palette exhausted");
}

}  // namespace

NodeState a2_transition(const NodeState& self, std::span<const Message> inbox,
                        int max_degree, NodeRng& rng) {
  NodeState next = self;
  int target = max_free_color(inbox, max_degree);
  if (self.color != target && rng.bit()) next.color = target;
  return next;
}

NodeState a3_transition(const NodeState& self, std::span<const Message> inbox,
                        int max_degree, NodeRng& rng) {
  bool conflict = false;
  for (const Message& m : inbox) {
    if (m.color == self.color) {
      conflict = true;
      break;
    }
  }
  NodeState next = self;
  if (conflict && rng.bit()) {
    std::vector<char> used(static_cast<size_t>(max_degree) + 1, 0);
    for (const Message& m : inbox) {
      if (m.color >= 0 && m.color <= max_degree) used[static_cast<size_t>(m.color)] = 1;
    }
    std::vector<int> candidates;
    for (int c = 0; c <= max_degree; ++c) {
      if (!used[static_cast<size_t>(c)]) candidates.push_back(c);
    }
    next.color = candidates[rng.uniform(static_cast<uint32_t>(candidates.size()))];
  }
  return next;
}

bool is_legal_coloring(const Graph& g, const Configuration& cfg) {
  const auto& s = cfg.states;
  for (int v = 0; v < g.node_count(); ++v) {
    int c = s[static_cast<size_t>(v)].color;
    if (c == kNoColor || c > g.degree(v)) return false;
    for (int u : g.neighbors(v)) {
      if (s[static_cast<size_t>(u)].color == c) return false;
    }
  }
  return true;
}

bool is_legitimate_acol(const Graph& g, const Configuration& cfg) {
  if (!is_legal_coloring(g, cfg)) return false;
  for (const NodeState& st : cfg.states) {
    if (!st.done) return false;
  }
  return true;
}

bool is_proper_palette_coloring(const Graph& g, const Configuration& cfg) {
  const auto& s = cfg.states;
  int delta = g.max_degree();
  for (int v = 0; v < g.node_count(); ++v) {
    int c = s[static_cast<size_t>(v)].color;
    if (c < 0 || c > delta) return false;
    for (int u : g.neighbors(v)) {
      if (s[static_cast<size_t>(u)].color == c) return false;
    }
  }
  return true;
}

bool is_max_rule_fixpoint(const Graph& g, const Configuration& cfg) {
  const auto& s = cfg.states;
  int delta = g.max_degree();
  for (int v = 0; v < g.node_count(); ++v) {
    std::vector<Message> inbox;
    inbox.reserve(g.neighbors(v).size());
    for (int u : g.neighbors(v)) inbox.push_back(s[static_cast<size_t>(u)]);
    if (s[static_cast<size_t>(v)].color != max_free_color(inbox, delta)) return false;
  }
  return true;
}

bool is_mis(const Graph& g, const Configuration& cfg) {
  const auto& s = cfg.states;
  for (int v = 0; v < g.node_count(); ++v) {
    int c = s[static_cast<size_t>(v)].color;
    if (c != kIn && c != kOut) return false;
    bool in_neighbor = false;
    for (int u : g.neighbors(v)) {
      if (s[static_cast<size_t>(u)].color == kIn) in_neighbor = true;
    }
    if (c == kIn && in_neighbor) return false;
    if (c == kOut && !in_neighbor) return false;
  }
  return true;
}

namespace {

Message identity_message(const NodeState& s) { return s; }

bool acol_quiescent(const NodeState& s, std::span<const Message> inbox, int degree,
                    int /*max_degree*/) {
  if (!s.done || s.color == kNoColor || s.color > degree) return false;
  for (const Message& m : inbox) {
    if (m.done && m.color == s.color) return false;
  }
  return true;
}

bool a1_quiescent(const NodeState& s, std::span<const Message> inbox, int /*degree*/,
                  int /*max_degree*/) {
  bool in_neighbor = false;
  for (const Message& m : inbox) {
    if (m.color == kIn) {
      in_neighbor = true;
      break;
    }
  }
  return (s.color == kIn) ? !in_neighbor : in_neighbor;
}

bool a2_quiescent(const NodeState& s, std::span<const Message> inbox, int /*degree*/,
                  int max_degree) {
  return s.color == max_free_color(inbox, max_degree);
}

bool a3_quiescent(const NodeState& s, std::span<const Message> inbox, int /*degree*/,
                  int /*max_degree*/) {
  for (const Message& m : inbox) {
    if (m.color == s.color) return false;
  }
  return true;
}

}  // namespace

ProtocolHandle acol_protocol() {
  ProtocolHandle h;
  h.name = "acol";
  h.transition = [](const NodeState& self, std::span<const Message> inbox, int degree,
                    int /*max_degree*/, NodeRng& rng) {
    return acol_transition(self, inbox, degree, rng);
  };
  h.message = identity_message;
  h.quiescent = acol_quiescent;
  h.legal = is_legal_coloring;
  h.legitimate = is_legitimate_acol;
  h.random_state = [](int /*degree*/, int max_degree, NodeRng& rng) {
    // color uniform over {kNoColor} u {0..max_degree}, done a fair bit.
    NodeState s;
    s.color = static_cast<int>(rng.uniform(static_cast<uint32_t>(max_degree) + 2)) - 1;
    s.done = rng.bit();
    return s;
  };
  h.radius_claim = 1;
  return h;
}

ProtocolHandle a1_protocol() {
  ProtocolHandle h;
  h.name = "a1";
  h.transition = [](const NodeState& self, std::span<const Message> inbox,
                    int /*degree*/, int /*max_degree*/, NodeRng& rng) {
    return a1_transition(self, inbox, rng);
  };
  h.message = identity_message;
  h.quiescent = a1_quiescent;
  h.legal = is_mis;
  h.legitimate = is_mis;
  h.random_state = [](int /*degree*/, int /*max_degree*/, NodeRng& rng) {
    NodeState s;
    s.color = rng.bit() ? kIn : kOut;
    return s;
  };
  h.radius_claim = 2;
  return h;
}

ProtocolHandle a2_protocol() {
  ProtocolHandle h;
  h.name = "a2";
  h.transition = [](const NodeState& self, std::span<const Message> inbox,
                    int /*degree*/, int max_degree, NodeRng& rng) {
    return a2_transition(self, inbox, max_degree, rng);
  };
  h.message = identity_message;
  h.quiescent = a2_quiescent;
  h.legal = is_proper_palette_coloring;
  h.legitimate = is_max_rule_fixpoint;
  h.random_state = [](int /*degree*/, int max_degree, NodeRng& rng) {
    NodeState s;
    s.color = static_cast<int>(rng.uniform(static_cast<uint32_t>(max_degree) + 1));
    return s;
  };
  h.radius_claim = -1;
  return h;
}

ProtocolHandle a3_protocol() {
  ProtocolHandle h;
  h.name = "a3";
  h.transition = [](const NodeState& self, std::span<const Message> inbox,
                    int /*degree*/, int max_degree, NodeRng& rng) {
    return a3_transition(self, inbox, max_degree, rng);
  };
  h.message = identity_message;
  h.quiescent = a3_quiescent;
  h.legal = is_proper_palette_coloring;
  h.legitimate = is_proper_palette_coloring;
  h.random_state = [](int /*degree*/, int max_degree, NodeRng& rng) {
    NodeState s;
    s.color = static_cast<int>(rng.uniform(static_cast<uint32_t>(max_degree) + 1));
    return s;
  };
  h.radius_claim = 1;
  return h;
}

ProtocolHandle make_protocol(const std::string& name) {
  if (name == "acol") return acol_protocol();
  if (name == "a1") return a1_protocol();
  if (name == "a2") return a2_protocol();
  if (name == "a3") return a3_protocol();
  throw std::invalid_argument("unknown protocol \"" + name +
                              "\" (expected acol, a1, a2 or a3)");
}

}  // namespace stabsim

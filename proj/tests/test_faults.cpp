#include <optional>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "stabsim/faults.hpp"
#include "stabsim/graph.hpp"
#include "stabsim/protocol.hpp"

using namespace stabsim;

TEST_CASE("scenario descriptions") {
  CHECK(FaultScenario::none_fault().describe() == "none");
  CHECK(FaultScenario::broadcast(3, Message{2, true}).describe() ==
        "broadcast node=3 color=2 final=true");
  CHECK(FaultScenario::broadcast(3, Message{kNoColor, false}, 5).describe() ==
        "broadcast node=3 color=none final=false round=5");
  CHECK(FaultScenario::memory(1, 4, false).describe() == "memory node=1 color=4 final=false");
  CHECK(FaultScenario::memory(1, std::nullopt, std::nullopt, 2).describe() ==
        "memory node=1 color=keep final=keep round=2");
  CHECK(FaultScenario::memory(1, kNoColor, std::nullopt).describe() ==
        "memory node=1 color=none final=keep");
}

TEST_CASE("conflict sets collect the same-colored neighbors") {
  const Graph g = generate(GraphSpec::star(4));
  Configuration cfg;
  cfg.states = {{2, true}, {0, true}, {1, true}, {0, true}, {1, true}};

  const ConflictSet a = conflict_set(g, cfg, 0, 0);
  CHECK(a.node == 0);
  CHECK(a.color == 0);
  CHECK(a.members == std::vector<int>{1, 3});
  CHECK(conflict_set(g, cfg, 0, 1).members == std::vector<int>{2, 4});
  CHECK(conflict_set(g, cfg, 0, 3).members.empty());
  CHECK(conflict_set(g, cfg, 1, 2).members == std::vector<int>{0});
}

TEST_CASE("conflict sets reject adjacent members") {
  const Graph k3 = generate(GraphSpec::complete(3));
  Configuration cfg;
  cfg.states = {{0, true}, {1, true}, {1, true}};
  try {
    conflict_set(k3, cfg, 0, 1);
    FAIL("expected adjacency rejection");
  } catch (const std::logic_error& e) {
    CHECK(std::string(e.what()).find("adjacent") != std::string::npos);
  }
}

TEST_CASE("random configurations are seed-deterministic and in-domain") {
  const Graph g = generate(GraphSpec::gnp(30, 0.15, 4));
  const ProtocolHandle acol = acol_protocol();
  const Configuration a = random_configuration(g, acol, 9001);
  const Configuration b = random_configuration(g, acol, 9001);
  const Configuration c = random_configuration(g, acol, 9002);
  CHECK(a.states == b.states);
  CHECK(a.states != c.states);
  const int delta = g.max_degree();
  for (const NodeState& s : a.states) {
    CHECK(s.color >= kNoColor);
    CHECK(s.color <= delta);
  }
}

TEST_CASE("stabilized baselines satisfy each protocol's own predicate") {
  const Graph k3 = generate(GraphSpec::complete(3));
  const Configuration tri = legitimate_config(k3, acol_protocol(), 1);
  CHECK(is_legitimate_acol(k3, tri));
  // Three mutually adjacent nodes must use three distinct colors.
  CHECK(tri.states[0].color + tri.states[1].color + tri.states[2].color == 3);

  const Graph g = generate(GraphSpec::gnp(50, 0.1, 2));
  CHECK(is_legitimate_acol(g, legitimate_config(g, acol_protocol(), 7)));
  CHECK(is_mis(g, legitimate_config(g, a1_protocol(), 7)));
  CHECK(is_max_rule_fixpoint(g, legitimate_config(g, a2_protocol(), 7)));
  CHECK(is_proper_palette_coloring(g, legitimate_config(g, a3_protocol(), 7)));
}

TEST_CASE("stabilized baseline reports divergence instead of looping") {
  const Graph g = generate(GraphSpec::star(5));
  REQUIRE_FALSE(is_legitimate_acol(g, random_configuration(g, acol_protocol(), 3)));
  CHECK_THROWS_AS(legitimate_config(g, acol_protocol(), 3, 1), std::runtime_error);
  CHECK_THROWS_AS(legitimate_config(g, acol_protocol(), 3, 0), std::invalid_argument);
}

TEST_CASE("canonical single-fault scenarios in fixed order") {
  const Graph g = generate(GraphSpec::star(4));
  Configuration cfg;
  cfg.states = {{2, true}, {0, true}, {1, true}, {0, true}, {1, true}};

  // Colors 0 and 1 both appear twice around the center; ties take the
  // smaller color.
  const auto scs = worst_case_scenarios(g, cfg, 0);
  REQUIRE(scs.size() == 5);
  CHECK(scs[0].kind == FaultScenario::Kind::broadcast);
  CHECK(scs[0].payload == Message{0, true});
  CHECK(scs[1].payload == Message{0, false});
  CHECK(scs[2].kind == FaultScenario::Kind::memory);
  CHECK(scs[2].new_color == 0);
  CHECK_FALSE(scs[2].new_done.has_value());
  CHECK_FALSE(scs[3].new_color.has_value());
  CHECK(scs[3].new_done == false);
  CHECK(scs[4].new_color == 0);
  CHECK(scs[4].new_done == false);
  for (const FaultScenario& sc : scs) CHECK(sc.node == 0);

  // A leaf sees only the center's color.
  CHECK(worst_case_scenarios(g, cfg, 1)[0].payload == Message{2, true});

  // No colored neighbors: fall back to color 0.
  const Graph lone = Graph::from_edges(1, {});
  Configuration empty;
  empty.states = {{kNoColor, false}};
  CHECK(worst_case_scenarios(lone, empty, 0)[2].new_color == 0);
}

TEST_CASE("memory sweep covers the local palette plus the edge cases") {
  const Graph g = generate(GraphSpec::star(4));
  Configuration cfg;
  cfg.states = {{2, true}, {0, true}, {1, true}, {0, true}, {1, true}};

  const auto sweep = memory_sweep(g, cfg, 0);
  CHECK(sweep.size() == 15);  // 2*(deg+3)+1 for deg=4
  int flag_only = 0;
  int kept_flag = 0;
  bool saw_unset = false, saw_overflow = false;
  for (const FaultScenario& sc : sweep) {
    CHECK(sc.kind == FaultScenario::Kind::memory);
    CHECK(sc.node == 0);
    if (!sc.new_color.has_value()) {
      ++flag_only;
      CHECK(sc.new_done == false);
      continue;
    }
    if (!sc.new_done.has_value()) ++kept_flag;
    if (*sc.new_color == kNoColor) saw_unset = true;
    if (*sc.new_color == 5) saw_overflow = true;  // deg+1, outside v's range
    CHECK(*sc.new_color <= 5);
    CHECK(*sc.new_color >= kNoColor);
  }
  CHECK(flag_only == 1);
  CHECK(kept_flag == 7);
  CHECK(saw_unset);
  CHECK(saw_overflow);

  // Leaves get the minimal sweep: colors {0,1}, unset, 2, both flags, +1.
  CHECK(memory_sweep(g, cfg, 3).size() == 9);
}

// Acceptance gate: ten end-to-end checks over the chain models, the
// simulator and the experiment harness.  Each check prints one line;
// the exit code is the number of failed checks.  Tolerances and seeds
// are pinned here on purpose: reruns must be bit-identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "stabsim/engine.hpp"
#include "stabsim/experiments.hpp"
#include "stabsim/faults.hpp"
#include "stabsim/graph.hpp"
#include "stabsim/markov.hpp"
#include "stabsim/protocol.hpp"

using namespace stabsim;

namespace {

int failures = 0;

void report(int id, const char* label, bool pass, const std::string& detail) {
  std::printf("[%s] %2d. %s: %s\n", pass ? "PASS" : "FAIL", id, label, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

// ---------------------------------------------------------------- 1 --

void check_closed_form() {
  const double ln2 = std::log(2.0);
  double worst_gap = 0.0;
  int worst_d = 0;
  bool bracket_ok = true;
  for (int d = 1; d <= 100; ++d) {
    const double e = solve_absorbing(message_chain(d)).expected[static_cast<size_t>(d)];
    const double h = harmonic(d) / ln2;
    const double gap = std::abs(e - harmonic_bound(d, 0.5));
    if (gap > worst_gap) {
      worst_gap = gap;
      worst_d = d;
    }
    bracket_ok = bracket_ok && e >= h && e <= h + 1.0;
  }
  const bool pass = worst_gap <= 0.05 && bracket_ok;
  report(1, "closed-form approximation within 0.05 of the chain", pass,
         "max |E_chain - (H_d/ln2 + 1/2)| = " + fmt(worst_gap) + " at d=" +
             std::to_string(worst_d) + " (limit 0.05), bracket [H_d/ln2, H_d/ln2+1] " +
             (bracket_ok ? "held" : "violated") + " for d in [1,100]");
}

// ---------------------------------------------------------------- 2 --

void check_variance_bounds() {
  double worst_var = 0.0;
  for (int d = 1; d <= 100; ++d) {
    worst_var = std::max(
        worst_var, solve_absorbing(message_chain(d)).variance[static_cast<size_t>(d)]);
  }
  // Largest computed size stands in for the asymptotic regime.
  const double tail_gap =
      variance_bound() - solve_absorbing(message_chain(100)).variance[100];
  const bool pass = worst_var <= 3.6737 && tail_gap < 0.2;
  report(2, "recovery variance stays under 3.6737 with a tight limit", pass,
         "max Var = " + fmt(worst_var) + " (limit 3.6737), limit gap at d=100 = " +
             fmt(tail_gap) + " (< 0.2)");
}

// ---------------------------------------------------------------- 3 --

void check_memory_chain() {
  bool rows_ok = true;
  for (int d = 1; d <= 200 && rows_ok; ++d) {
    for (const auto& row : memory_chain(d).p) {
      long double sum = 0.0L;
      for (double x : row) sum += x;
      rows_ok = rows_ok && std::abs(static_cast<double>(sum - 1.0L)) <= 1e-12;
    }
  }
  bool moments_ok = true;
  double worst_e = 0.0, worst_v = 0.0;
  for (int d = 1; d <= 50; ++d) {
    const ChainSolution sol = solve_absorbing(memory_chain(d));
    const size_t p_state = static_cast<size_t>(d) + 2;
    worst_e = std::max(worst_e, sol.expected[0]);
    worst_v = std::max(worst_v, sol.variance[0]);
    moments_ok = moments_ok && std::abs(sol.expected[p_state] - 1.0) <= 1e-9 &&
                 std::abs(sol.expected[p_state - 1] - 3.0) <= 1e-9;
  }
  const double e1 = solve_absorbing(memory_chain(1)).expected[0];
  const bool pass = rows_ok && moments_ok && worst_e < 5.0 && worst_v <= 3.6 &&
                    std::abs(e1 - 3.7) <= 1e-9;
  report(3, "memory-corruption chain structure and moments", pass,
         "rows " + std::string(rows_ok ? "stochastic" : "BROKEN") + ", max E_I = " +
             fmt(worst_e) + " (< 5), max Var_I = " + fmt(worst_v) + " (<= 3.6), E_I(1) = " +
             fmt(e1) + " (= 3.7 +- 1e-9)");
}

// ---------------------------------------------------------------- 4 --

void check_star_broadcast_vs_chain() {
  const std::uint64_t master = 1;
  double worst_z = 0.0;
  std::string detail;
  bool pass = true;
  for (int d : {1, 2, 5, 10, 20}) {
    const StarCase sc = star_broadcast_case(d);
    const TrialSummary s =
        run_trials(sc.graph, acol_protocol(), sc.config, sc.fault, 100000,
                   mix_seed(master, static_cast<std::uint64_t>(d)));
    const ChainSolution sol = solve_absorbing(message_chain(d));
    const double zm =
        (s.legal.mean - sol.expected[static_cast<size_t>(d)]) / s.legal.std_error;
    const double zv =
        (s.legal.variance - sol.variance[static_cast<size_t>(d)]) / s.legal.se_variance;
    worst_z = std::max({worst_z, std::abs(zm), std::abs(zv)});
    pass = pass && std::abs(zm) <= 3.0 && std::abs(zv) <= 3.0 && s.divergent == 0;
  }
  report(4, "star broadcast simulation matches the chain (1e5 trials)", pass,
         "d in {1,2,5,10,20}, worst |z| over means and variances = " + fmt(worst_z) +
             " (limit 3)");
}

// ---------------------------------------------------------------- 5 --

void check_containment_structure() {
  const std::vector<GraphSpec> specs = {
      GraphSpec::star(5),          GraphSpec::path(8),
      GraphSpec::complete(6),      GraphSpec::gnp(24, 0.2, 8),
      GraphSpec::gnp(40, 0.1, 9),  GraphSpec::unit_disc(60, 0.2, 10),
  };
  std::uint64_t trials = 0, violations = 0;
  std::uint64_t scenario_counter = 0;
  RunOptions opts;
  opts.trace = TraceMode::none;

  auto run_checked = [&](const Graph& g, const Configuration& base,
                         const FaultScenario& sc, int delta_i, int per_scenario) {
    const bool is_memory = sc.kind == FaultScenario::Kind::memory;
    const std::uint64_t sseed = mix_seed(0xC5, scenario_counter++);
    for (int t = 0; t < per_scenario; ++t) {
      const TrialResult r = run_single(g, acol_protocol(), base, sc,
                                       trial_seed(sseed, static_cast<std::uint64_t>(t)), opts);
      ++trials;
      const std::size_t allowed =
          static_cast<std::size_t>(delta_i) + (is_memory ? 1u : 0u);
      const bool faulty_moved =
          !is_memory && std::binary_search(r.contaminated.begin(), r.contaminated.end(),
                                           sc.node);
      if (r.diverged || r.radius > 1 || r.contaminated.size() > allowed || faulty_moved) {
        ++violations;
      }
    }
  };

  std::uint64_t graph_index = 0;
  for (const GraphSpec& spec : specs) {
    const Graph g = generate(spec);
    const Configuration base =
        legitimate_config(g, acol_protocol(), mix_seed(7, graph_index++));
    for (int v = 0; v < g.node_count(); ++v) {
      const int delta_i = independent_degree(g, v, 30);
      for (const FaultScenario& sc : worst_case_scenarios(g, base, v)) {
        run_checked(g, base, sc, delta_i, 15);
      }
    }
    for (int v = 0; v < std::min(3, g.node_count()); ++v) {
      const int delta_i = independent_degree(g, v, 30);
      for (const FaultScenario& sc : memory_sweep(g, base, v)) {
        run_checked(g, base, sc, delta_i, 5);
      }
    }
  }
  const bool pass = trials >= 10000 && violations == 0;
  report(5, "coloring faults stay within one hop and the local conflict set", pass,
         std::to_string(trials) + " trials across 6 topologies, " +
             std::to_string(violations) + " violations");
}

// ---------------------------------------------------------------- 6 --

void check_unit_disc() {
  const std::uint64_t master = 1;
  int worst_delta_i = 0;
  double worst_mean = 0.0, worst_slack = 1e300;
  bool pass = true;
  for (int i = 0; i < 10; ++i) {
    const std::uint64_t inst_seed = mix_seed(master, 0x1000 + static_cast<std::uint64_t>(i));
    const Graph g = generate(GraphSpec::unit_disc(200, 0.08, inst_seed));
    int delta_i = 0;
    for (int v = 0; v < g.node_count(); ++v) {
      delta_i = std::max(delta_i, independent_degree(g, v, 30));
    }
    worst_delta_i = std::max(worst_delta_i, delta_i);

    const Configuration base = legitimate_config(g, acol_protocol(), mix_seed(inst_seed, 7));
    std::vector<FaultScenario> sweep;
    for (int v = 0; v < g.node_count(); ++v) {
      for (const FaultScenario& sc : memory_sweep(g, base, v)) sweep.push_back(sc);
    }
    const TrialSummary s = run_trials_pooled(g, acol_protocol(), base, sweep, 4,
                                             mix_seed(inst_seed, 0x7377));
    const double limit = 8.8 + 3.0 * s.legitimate.std_error;
    worst_mean = std::max(worst_mean, s.legitimate.mean);
    worst_slack = std::min(worst_slack, limit - s.legitimate.mean);
    pass = pass && delta_i <= 5 && s.legitimate.mean <= limit && s.divergent == 0;
  }
  report(6, "unit-disc memory sweeps respect the geometric containment bound", pass,
         "10 instances of unit_disc(200): max independent degree = " +
             std::to_string(worst_delta_i) + " (<= 5), worst pooled mean = " +
             fmt(worst_mean) + " (limit 8.8 + 3se)");
}

// ---------------------------------------------------------------- 7 --

void check_degenerate_faults() {
  const Graph g = generate(GraphSpec::star(5));
  Configuration base;
  base.states.assign(6, NodeState{0, true});
  base.states[0] = NodeState{1, true};
  RunOptions opts;
  opts.trace = TraceMode::none;

  // Forged broadcast of the sender's own color with the flag cleared.
  std::uint64_t noop_bad = 0;
  const FaultScenario echo = FaultScenario::broadcast(0, Message{1, false});
  for (int t = 0; t < 1000; ++t) {
    const TrialResult r = run_single(g, acol_protocol(), base, echo,
                                     trial_seed(0xD7, static_cast<std::uint64_t>(t)), opts);
    if (!r.contaminated.empty() || r.rounds_to_legitimate != 0) ++noop_bad;
  }

  // Memory corruption of the flag alone, color kept.
  const FaultScenario flag_only = FaultScenario::memory(0, std::nullopt, false);
  long long lo = 1 << 30, hi = -1;
  for (int t = 0; t < 1000; ++t) {
    const TrialResult r = run_single(g, acol_protocol(), base, flag_only,
                                     trial_seed(0xD8, static_cast<std::uint64_t>(t)), opts);
    lo = std::min<long long>(lo, r.rounds_to_legitimate);
    hi = std::max<long long>(hi, r.rounds_to_legitimate);
  }
  const bool echo_ok = noop_bad == 0;
  const bool flag_ok = lo == 3 && hi == 3;  // required: exactly 3 in every trial
  report(7, "degenerate single faults", echo_ok && flag_ok,
         "own-color echo: " + std::to_string(noop_bad) +
             " of 1000 trials changed anything (want 0); flag-only flip healed in " +
             (lo == hi ? std::to_string(lo) : std::to_string(lo) + ".." + std::to_string(hi)) +
             " rounds in all 1000 trials (required: exactly 3)");
}

// ---------------------------------------------------------------- 8 --

void check_protocol_radii() {
  const Graph g = generate(GraphSpec::gnp(24, 0.2, 8));
  const int delta = g.max_degree();

  const Configuration mis_base = legitimate_config(g, a1_protocol(), 40);
  std::vector<FaultScenario> mis_flips;
  for (int v = 0; v < g.node_count(); ++v) {
    const int flipped = mis_base.states[static_cast<size_t>(v)].color == kIn ? kOut : kIn;
    mis_flips.push_back(FaultScenario::memory(v, flipped, std::nullopt));
  }
  const TrialSummary mis =
      run_trials_pooled(g, a1_protocol(), mis_base, mis_flips, 100, 41);

  const Configuration col_base = legitimate_config(g, a3_protocol(), 50);
  std::vector<FaultScenario> col_flips;
  for (int v = 0; v < g.node_count(); ++v) {
    const int next = (col_base.states[static_cast<size_t>(v)].color + 1) % (delta + 1);
    col_flips.push_back(FaultScenario::memory(v, next, std::nullopt));
  }
  const TrialSummary col =
      run_trials_pooled(g, a3_protocol(), col_base, col_flips, 100, 51);

  const WitnessResult w = cascade_witness_search(1000, 2, 5);

  const bool pass = mis.radius.max <= 2 && mis.divergent == 0 && col.radius.max <= 1 &&
                    col.divergent == 0 && w.witness_seed.has_value() && w.max_radius >= 5;
  report(8, "radius guarantees and the unbounded recolor cascade witness", pass,
         "set flips: max radius " + std::to_string(mis.radius.max) + " (<= 2) over " +
             std::to_string(mis.trials) + " trials; recolor conflicts: max radius " +
             std::to_string(col.radius.max) + " (<= 1) over " + std::to_string(col.trials) +
             " trials; cascade radius " + std::to_string(w.max_radius) +
             " reached at seed " +
             (w.witness_seed ? std::to_string(*w.witness_seed) : std::string("none")) +
             " of a 1000-seed budget");
}

// ---------------------------------------------------------------- 9 --

void check_trace_properties() {
  const std::vector<GraphSpec> specs = {
      GraphSpec::gnp(16, 0.3, 21),  GraphSpec::gnp(24, 0.15, 22), GraphSpec::star(6),
      GraphSpec::path(10),          GraphSpec::complete(5),       GraphSpec::unit_disc(30, 0.25, 23),
  };
  const ProtocolHandle acol = acol_protocol();
  RunOptions opts;
  opts.trace = TraceMode::full;

  std::uint64_t runs = 0, violations = 0;
  for (std::uint64_t i = 0; i < 1002; ++i) {
    const Graph g = generate(specs[i % specs.size()]);
    const std::uint64_t seed = mix_seed(0x90, i);
    const Configuration start = random_configuration(g, acol, seed);
    const RunResult r = run(g, acol, start, FaultScenario::none_fault(), seed, opts);
    ++runs;
    if (r.diverged) {
      ++violations;
      continue;
    }
    bool ok = true;

    // Colors are sane from the first executed round on.
    for (const Configuration& c : r.configs) {
      for (int v = 0; v < g.node_count(); ++v) {
        const int col = c.states[static_cast<size_t>(v)].color;
        if (col != kNoColor && (col < 0 || col > g.degree(v))) ok = false;
      }
    }
    // The settled flag is only ever cleared in the first round, and a
    // node that sets it later never moves again.
    std::vector<int> locked_at(static_cast<size_t>(g.node_count()), -1);
    const Configuration* prev = &start;
    for (size_t rd = 0; rd < r.configs.size(); ++rd) {
      for (int v = 0; v < g.node_count(); ++v) {
        const NodeState& before = prev->states[static_cast<size_t>(v)];
        const NodeState& after = r.configs[rd].states[static_cast<size_t>(v)];
        if (rd >= 1 && before.done && !after.done) ok = false;
        if (!before.done && after.done && locked_at[static_cast<size_t>(v)] < 0) {
          locked_at[static_cast<size_t>(v)] = static_cast<int>(rd);
        }
        const int lock = locked_at[static_cast<size_t>(v)];
        if (lock >= 0 && static_cast<int>(rd) > lock) {
          const NodeState& at_lock =
              r.configs[static_cast<size_t>(lock)].states[static_cast<size_t>(v)];
          if (!(after == at_lock)) ok = false;
        }
      }
      prev = &r.configs[rd];
    }
    // Once legitimate, the system is silent.
    Configuration cur = r.final_config;
    for (int extra = 0; extra < 3; ++extra) {
      RoundRecord rec;
      cur = step(g, acol, cur, mix_seed(seed, 0x511), nullptr, rec);
      if (!rec.changed.empty()) ok = false;
    }
    if (!ok) ++violations;
  }
  const bool pass = runs >= 1000 && violations == 0;
  report(9, "error-free executions: sane colors, one-way flags, silence", pass,
         std::to_string(runs) + " runs, " + std::to_string(violations) + " violations");
}

// --------------------------------------------------------------- 10 --

void check_scaling() {
  const std::vector<int> sizes = {16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  const auto family = [](int n) {
    return GraphSpec::gnp(n, std::min(1.0, 8.0 / n), 101);
  };
  const std::vector<ProfileRow> rows =
      stabilization_profile(acol_protocol(), family, sizes, 200, 1);
  std::vector<double> means;
  bool cap_ok = true;
  std::uint64_t divergent = 0;
  for (const ProfileRow& r : rows) {
    means.push_back(r.mean_rounds);
    cap_ok = cap_ok &&
             static_cast<double>(r.max_rounds_seen) <=
                 10.0 * std::log2(static_cast<double>(r.n)) + 50.0;
    divergent += r.divergent;
  }
  const LogFit fit = fit_log2(sizes, means);
  const bool pass = fit.residual_ratio < 0.2 && cap_ok && divergent == 0;
  report(10, "stabilization time grows logarithmically", pass,
         "fit mean ~ " + fmt(fit.coeff) + " * log2(n), residual ratio " +
             fmt(fit.residual_ratio) + " (< 0.2), every run under 10*log2(n)+50");
}

}  // namespace

int main() {
  check_closed_form();
  check_variance_bounds();
  check_memory_chain();
  check_star_broadcast_vs_chain();
  check_containment_structure();
  check_unit_disc();
  check_degenerate_faults();
  check_protocol_radii();
  check_trace_properties();
  check_scaling();
  std::printf("%d of 10 checks failed\n", failures);
  return failures;
}

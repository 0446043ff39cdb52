#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stabsim/engine.hpp"
#include "stabsim/faults.hpp"
#include "stabsim/graph.hpp"
#include "stabsim/protocol.hpp"

namespace stabsim {

// One execution of a fault scenario, reduced to containment metrics.
// `contaminated` lists nodes whose state changed at least once after the
// fault took effect; `radius` is the largest hop distance from the
// faulty node over that set (0 when it is empty or holds only the
// faulty node).
struct TrialResult {
  int rounds_to_legal = -1;
  int rounds_to_legitimate = -1;
  std::vector<int> contaminated;
  int radius = 0;
  bool diverged = false;
};

struct MetricStats {
  double mean = 0.0;
  double variance = 0.0;   // unbiased sample variance
  double std_error = 0.0;  // of the mean
  double se_variance = 0.0;  // of the sample variance, via the 4th central moment
  long long max = 0;
  std::map<int, std::uint64_t> histogram;
};

// Order-insensitive accumulator over integer samples.  Power sums are
// kept exactly, so aggregation is bit-stable under any trial-level
// parallelism or merge order.
class MetricAccum {
 public:
  void add(long long x);
  void merge(const MetricAccum& other);
  MetricStats finalize() const;
  std::uint64_t count() const { return n_; }

 private:
  std::uint64_t n_ = 0;
  __int128 s1_ = 0, s2_ = 0, s3_ = 0, s4_ = 0;
  long long max_ = 0;
  std::map<int, std::uint64_t> hist_;
};

struct TrialSummary {
  std::uint64_t trials = 0;
  std::uint64_t divergent = 0;
  std::uint64_t faulty_changed = 0;  // trials in which the faulty node changed state
  std::uint64_t master_seed = 0;
  std::string scenario;
  MetricStats legal;         // rounds_to_legal
  MetricStats legitimate;    // rounds_to_legitimate
  MetricStats radius;
  MetricStats contaminated;  // contaminated-set size
};

int measure_radius(const Graph& g, int faulty_node, const std::vector<int>& contaminated);

TrialResult run_single(const Graph& g, const ProtocolHandle& protocol,
                       const Configuration& base, const FaultScenario& scenario,
                       std::uint64_t seed, const RunOptions& opts = RunOptions{});

// Monte Carlo over one scenario from a fixed starting configuration.
// Trial i uses seed hash(master_seed, i); results are independent of
// `threads` (0 picks the hardware count).
TrialSummary run_trials(const Graph& g, const ProtocolHandle& protocol,
                        const Configuration& base, const FaultScenario& scenario,
                        std::uint64_t trials, std::uint64_t master_seed,
                        const RunOptions& opts = RunOptions{}, int threads = 0);

// Same, pooled over a scenario list (e.g. a whole memory sweep); scenario
// k runs under master hash(master_seed, k).
TrialSummary run_trials_pooled(const Graph& g, const ProtocolHandle& protocol,
                               const Configuration& base,
                               const std::vector<FaultScenario>& scenarios,
                               std::uint64_t trials_each, std::uint64_t master_seed,
                               const RunOptions& opts = RunOptions{}, int threads = 0);

// Fault-free runs from per-trial random initial configurations,
// measuring rounds until legitimacy.  Radius and contamination metrics
// stay zero.
TrialSummary stabilization_trials(const Graph& g, const ProtocolHandle& protocol,
                                  std::uint64_t trials, std::uint64_t master_seed,
                                  const RunOptions& opts = RunOptions{}, int threads = 0);

struct ProfileRow {
  int n = 0;
  double mean_rounds = 0.0;
  int p95 = 0;
  long long max_rounds_seen = 0;
  std::uint64_t divergent = 0;
};

std::vector<ProfileRow> stabilization_profile(const ProtocolHandle& protocol,
                                              const std::function<GraphSpec(int)>& family,
                                              const std::vector<int>& sizes,
                                              std::uint64_t trials, std::uint64_t master_seed,
                                              const RunOptions& opts = RunOptions{},
                                              int threads = 0);

// Least-squares fit y ~ coeff * log2(n) through the origin.
// residual_ratio = ||y - fit|| / ||y||.
struct LogFit {
  double coeff = 0.0;
  double residual_ratio = 0.0;
};
LogFit fit_log2(const std::vector<int>& sizes, const std::vector<double>& means);

// Fixture for the max-rule recolor protocol: a 6-node spine whose colors
// descend 5..0, with pendant gadgets pinning every spine node's
// max-rule target.  Corrupting the degree-1 end of the spine to color 4
// lets a recolor wave walk the full spine with probability >= 1/3, so
// the contamination radius reaches max_degree (= 5) almost surely over
// a few dozen seeds.  The bundled configuration is a max-rule fixpoint.
struct CascadeSetup {
  Graph graph;
  Configuration config;
  std::vector<int> spine;  // spine node ids in order; spine[0] is the fault target
};
CascadeSetup max_rule_cascade_setup();

struct WitnessResult {
  int max_radius = 0;
  std::uint64_t trials = 0;
  std::optional<std::uint64_t> witness_seed;  // first seed reaching the target
};
WitnessResult cascade_witness_search(std::uint64_t seeds, std::uint64_t master_seed,
                                     int target_radius);

// Star fixture with the center colored 1 and all d leaves colored 0.
// `fault` is the worst corrupted broadcast (payload (0, true), hitting
// every leaf) or the center-color memory corruption (color := 0 with the
// flag kept), respectively.
struct StarCase {
  Graph graph;
  Configuration config;
  FaultScenario fault;
};
StarCase star_broadcast_case(int d);
StarCase star_memory_case(int d);

}  // namespace stabsim

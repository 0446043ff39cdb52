#include "stabsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace stabsim {

void MetricAccum::add(long long x) {
  ++n_;
  const __int128 v = x;
  s1_ += v;
  s2_ += v * v;
  s3_ += v * v * v;
  s4_ += v * v * v * v;
  if (n_ == 1 || x > max_) max_ = x;
  ++hist_[static_cast<int>(x)];
}

void MetricAccum::merge(const MetricAccum& other) {
  if (other.n_ == 0) return;
  if (n_ == 0 || other.max_ > max_) max_ = other.max_;
  n_ += other.n_;
  s1_ += other.s1_;
  s2_ += other.s2_;
  s3_ += other.s3_;
  s4_ += other.s4_;
  for (const auto& [k, c] : other.hist_) hist_[k] += c;
}

MetricStats MetricAccum::finalize() const {
  MetricStats st;
  st.histogram = hist_;
  st.max = max_;
  if (n_ == 0) return st;
  const long double n = static_cast<long double>(n_);
  const long double m = static_cast<long double>(s1_) / n;
  st.mean = static_cast<double>(m);
  if (n_ < 2) return st;
  const long double m2 = static_cast<long double>(s2_) / n - m * m;
  const long double var = m2 * n / (n - 1);
  st.variance = static_cast<double>(std::max<long double>(var, 0));
  st.std_error = static_cast<double>(std::sqrt(std::max<long double>(var, 0) / n));
  // 4th central moment from raw power sums.
  const long double s2 = static_cast<long double>(s2_);
  const long double s3 = static_cast<long double>(s3_);
  const long double s4 = static_cast<long double>(s4_);
  const long double m4 = (s4 - 4 * m * s3 + 6 * m * m * s2) / n - 3 * m * m * m * m;
  const long double se2 =
      (m4 - var * var * (n - 3) / (n - 1)) / n;
  st.se_variance = static_cast<double>(std::sqrt(std::max<long double>(se2, 0)));
  return st;
}

int measure_radius(const Graph& g, int faulty_node, const std::vector<int>& contaminated) {
  if (contaminated.empty()) return 0;
  const std::vector<int> dist = g.bfs_distances(faulty_node);
  int radius = 0;
  for (int v : contaminated) {
    const int dv = dist.at(static_cast<size_t>(v));
    if (dv < 0) {
      throw std::logic_error("measure_radius: contaminated node " + std::to_string(v) +
                             " unreachable from node " + std::to_string(faulty_node));
    }
    radius = std::max(radius, dv);
  }
  return radius;
}

TrialResult run_single(const Graph& g, const ProtocolHandle& protocol,
                       const Configuration& base, const FaultScenario& scenario,
                       std::uint64_t seed, const RunOptions& opts) {
  RunOptions local = opts;
  local.trace = TraceMode::none;
  const RunResult rr = run(g, protocol, base, scenario, seed, local);

  TrialResult tr;
  tr.rounds_to_legal = rr.rounds_to_legal;
  tr.rounds_to_legitimate = rr.rounds_to_legitimate;
  tr.diverged = rr.diverged;
  for (int v = 0; v < g.node_count(); ++v) {
    if (rr.touched[static_cast<size_t>(v)]) tr.contaminated.push_back(v);
  }
  if (scenario.kind != FaultScenario::Kind::none) {
    tr.radius = measure_radius(g, scenario.node, tr.contaminated);
  }
  return tr;
}

namespace {

struct Collected {
  MetricAccum legal, legitimate, radius, contaminated;
  std::uint64_t divergent = 0;
  std::uint64_t faulty_changed = 0;

  void absorb(const TrialResult& tr, int faulty_node) {
    if (tr.diverged) {
      ++divergent;
    } else {
      if (tr.rounds_to_legal >= 0) legal.add(tr.rounds_to_legal);
      legitimate.add(tr.rounds_to_legitimate);
    }
    radius.add(tr.radius);
    contaminated.add(static_cast<long long>(tr.contaminated.size()));
    if (faulty_node >= 0 &&
        std::binary_search(tr.contaminated.begin(), tr.contaminated.end(), faulty_node)) {
      ++faulty_changed;
    }
  }

  void merge(const Collected& o) {
    legal.merge(o.legal);
    legitimate.merge(o.legitimate);
    radius.merge(o.radius);
    contaminated.merge(o.contaminated);
    divergent += o.divergent;
    faulty_changed += o.faulty_changed;
  }
};

int resolve_threads(int threads, std::uint64_t trials) {
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 1 : static_cast<int>(hw);
  }
  if (trials < 256) return 1;
  return static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), trials));
}

// Runs `trials` seeded executions of `make_trial`, split over workers.
// Workers collect into private accumulators that are merged in worker
// order, so the outcome is independent of scheduling.
template <typename TrialFn>
Collected collect_trials(std::uint64_t trials, int threads, int faulty_node,
                         const TrialFn& make_trial) {
  const int nthreads = resolve_threads(threads, trials);
  std::vector<Collected> parts(static_cast<size_t>(nthreads));
  if (nthreads == 1) {
    for (std::uint64_t t = 0; t < trials; ++t) parts[0].absorb(make_trial(t), faulty_node);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w) {
      workers.emplace_back([&, w]() {
        for (std::uint64_t t = static_cast<std::uint64_t>(w); t < trials;
             t += static_cast<std::uint64_t>(nthreads)) {
          parts[static_cast<size_t>(w)].absorb(make_trial(t), faulty_node);
        }
      });
    }
    for (auto& th : workers) th.join();
  }
  Collected total;
  for (const Collected& c : parts) total.merge(c);
  return total;
}

TrialSummary summarize(const Collected& c, std::uint64_t trials, std::uint64_t master_seed,
                       std::string scenario) {
  TrialSummary s;
  s.trials = trials;
  s.divergent = c.divergent;
  s.faulty_changed = c.faulty_changed;
  s.master_seed = master_seed;
  s.scenario = std::move(scenario);
  s.legal = c.legal.finalize();
  s.legitimate = c.legitimate.finalize();
  s.radius = c.radius.finalize();
  s.contaminated = c.contaminated.finalize();
  return s;
}

}  // namespace

TrialSummary run_trials(const Graph& g, const ProtocolHandle& protocol,
                        const Configuration& base, const FaultScenario& scenario,
                        std::uint64_t trials, std::uint64_t master_seed,
                        const RunOptions& opts, int threads) {
  if (trials < 1) throw std::invalid_argument("run_trials: trials must be >= 1");
  const Collected c = collect_trials(
      trials, threads, scenario.kind == FaultScenario::Kind::none ? -1 : scenario.node,
      [&](std::uint64_t t) {
        return run_single(g, protocol, base, scenario, trial_seed(master_seed, t), opts);
      });
  return summarize(c, trials, master_seed, scenario.describe());
}

TrialSummary run_trials_pooled(const Graph& g, const ProtocolHandle& protocol,
                               const Configuration& base,
                               const std::vector<FaultScenario>& scenarios,
                               std::uint64_t trials_each, std::uint64_t master_seed,
                               const RunOptions& opts, int threads) {
  if (scenarios.empty()) {
    throw std::invalid_argument("run_trials_pooled: scenario list is empty");
  }
  Collected total;
  for (size_t k = 0; k < scenarios.size(); ++k) {
    const FaultScenario& sc = scenarios[k];
    const std::uint64_t sub_seed = mix_seed(master_seed, static_cast<std::uint64_t>(k));
    const Collected c = collect_trials(
        trials_each, threads, sc.kind == FaultScenario::Kind::none ? -1 : sc.node,
        [&](std::uint64_t t) {
          return run_single(g, protocol, base, sc, trial_seed(sub_seed, t), opts);
        });
    total.merge(c);
  }
  return summarize(total, trials_each * scenarios.size(), master_seed,
                   "pooled[" + std::to_string(scenarios.size()) + " scenarios]");
}

TrialSummary stabilization_trials(const Graph& g, const ProtocolHandle& protocol,
                                  std::uint64_t trials, std::uint64_t master_seed,
                                  const RunOptions& opts, int threads) {
  if (trials < 1) throw std::invalid_argument("stabilization_trials: trials must be >= 1");
  const Collected c = collect_trials(trials, threads, -1, [&](std::uint64_t t) {
    const std::uint64_t seed = trial_seed(master_seed, t);
    const Configuration start = random_configuration(g, protocol, seed);
    RunOptions local = opts;
    local.trace = TraceMode::none;
    const RunResult rr = run(g, protocol, start, FaultScenario::none_fault(), seed, local);
    TrialResult tr;
    tr.rounds_to_legal = rr.rounds_to_legal;
    tr.rounds_to_legitimate = rr.rounds_to_legitimate;
    tr.diverged = rr.diverged;
    return tr;
  });
  return summarize(c, trials, master_seed, "stabilization");
}

std::vector<ProfileRow> stabilization_profile(const ProtocolHandle& protocol,
                                              const std::function<GraphSpec(int)>& family,
                                              const std::vector<int>& sizes,
                                              std::uint64_t trials, std::uint64_t master_seed,
                                              const RunOptions& opts, int threads) {
  for (size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw std::invalid_argument("stabilization_profile: sizes must be ascending");
    }
  }
  std::vector<ProfileRow> rows;
  for (size_t i = 0; i < sizes.size(); ++i) {
    const int n = sizes[i];
    const Graph g = generate(family(n));
    const std::uint64_t seed = mix_seed(master_seed, static_cast<std::uint64_t>(i));
    const TrialSummary s = stabilization_trials(g, protocol, trials, seed, opts, threads);

    ProfileRow row;
    row.n = n;
    row.mean_rounds = s.legitimate.mean;
    row.max_rounds_seen = s.legitimate.max;
    row.divergent = s.divergent;
    // 95th percentile from the histogram of non-divergent trials.
    std::uint64_t total = 0;
    for (const auto& [v, c] : s.legitimate.histogram) total += c;
    std::uint64_t cum = 0;
    for (const auto& [v, c] : s.legitimate.histogram) {
      cum += c;
      if (static_cast<long double>(cum) >= 0.95L * static_cast<long double>(total)) {
        row.p95 = v;
        break;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

LogFit fit_log2(const std::vector<int>& sizes, const std::vector<double>& means) {
  if (sizes.size() != means.size() || sizes.empty()) {
    throw std::invalid_argument("fit_log2: sizes and means must be equal-length, nonempty");
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < sizes.size(); ++i) {
    const double x = std::log2(static_cast<double>(sizes[i]));
    sxy += x * means[i];
    sxx += x * x;
    syy += means[i] * means[i];
  }
  LogFit fit;
  fit.coeff = sxy / sxx;
  double rss = 0;
  for (size_t i = 0; i < sizes.size(); ++i) {
    const double r = means[i] - fit.coeff * std::log2(static_cast<double>(sizes[i]));
    rss += r * r;
  }
  fit.residual_ratio = syy > 0 ? std::sqrt(rss / syy) : 0.0;
  return fit;
}

CascadeSetup max_rule_cascade_setup() {
  // Spine colors descend 5..0.  gadget(k) pins color k next to its
  // parent: a node colored k whose own children are gadgets k+1..5, so
  // its max-rule target stays k for any parent color != k.
  std::vector<std::pair<int, int>> edges;
  std::vector<int> colors;
  auto new_node = [&](int color) {
    colors.push_back(color);
    return static_cast<int>(colors.size()) - 1;
  };
  std::function<int(int, int)> gadget = [&](int color, int parent) {
    const int id = new_node(color);
    edges.emplace_back(parent, id);
    for (int c = color + 1; c <= 5; ++c) gadget(c, id);
    return id;
  };

  std::vector<int> spine;
  for (int i = 0; i < 6; ++i) {
    spine.push_back(new_node(5 - i));
    if (i > 0) edges.emplace_back(spine[static_cast<size_t>(i) - 1], spine[static_cast<size_t>(i)]);
  }
  // spine[k] needs neighbor colors {5, ..., 7-k} pinned beyond what the
  // spine itself provides.
  gadget(5, spine[2]);
  for (int c = 4; c <= 5; ++c) gadget(c, spine[3]);
  for (int c = 3; c <= 5; ++c) gadget(c, spine[4]);
  for (int c = 2; c <= 5; ++c) gadget(c, spine[5]);

  CascadeSetup setup{Graph::from_edges(static_cast<int>(colors.size()), edges), {}, spine};
  setup.config.states.resize(colors.size());
  for (size_t v = 0; v < colors.size(); ++v) setup.config.states[v] = NodeState{colors[v], true};
  return setup;
}

WitnessResult cascade_witness_search(std::uint64_t seeds, std::uint64_t master_seed,
                                     int target_radius) {
  const CascadeSetup setup = max_rule_cascade_setup();
  const ProtocolHandle a2 = a2_protocol();
  const int delta = setup.graph.max_degree();
  const FaultScenario fault =
      FaultScenario::memory(setup.spine[0], delta - 1, std::nullopt);

  WitnessResult res;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    const TrialResult tr =
        run_single(setup.graph, a2, setup.config, fault, trial_seed(master_seed, s));
    res.max_radius = std::max(res.max_radius, tr.radius);
    res.trials = s + 1;
    if (tr.radius >= target_radius && !res.witness_seed.has_value()) {
      res.witness_seed = s;
      break;
    }
  }
  return res;
}

namespace {

StarCase star_case(int d) {
  StarCase sc{generate(GraphSpec::star(d)), {}, {}};
  sc.config.states.assign(static_cast<size_t>(d) + 1, NodeState{0, true});
  sc.config.states[0] = NodeState{1, true};
  return sc;
}

}  // namespace

StarCase star_broadcast_case(int d) {
  StarCase sc = star_case(d);
  sc.fault = FaultScenario::broadcast(0, Message{0, true});
  return sc;
}

StarCase star_memory_case(int d) {
  StarCase sc = star_case(d);
  sc.fault = FaultScenario::memory(0, 0, std::nullopt);
  return sc;
}

}  // namespace stabsim

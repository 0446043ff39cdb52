#include "stabsim/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "stabsim/rng.hpp"

namespace stabsim {

Graph::Graph(int n) {
  if (n < 0) throw std::invalid_argument("graph node count must be >= 0");
  adj_.resize(static_cast<std::size_t>(n));
}

Graph Graph::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  Graph g(n);
  for (const auto& [u, v] : edges) g.add_edge(u, v);
  return g;
}

void Graph::add_edge(int u, int v) {
  const int n = node_count();
  if (u < 0 || u >= n || v < 0 || v >= n)
    throw std::invalid_argument("edge endpoint out of range");
  if (u == v) throw std::invalid_argument("self loops are not allowed");
  auto& au = adj_[static_cast<std::size_t>(u)];
  auto it = std::lower_bound(au.begin(), au.end(), v);
  if (it != au.end() && *it == v) return;
  au.insert(it, v);
  auto& av = adj_[static_cast<std::size_t>(v)];
  av.insert(std::lower_bound(av.begin(), av.end(), u), u);
  ++edges_;
}

const std::vector<int>& Graph::neighbors(int v) const {
  if (v < 0 || v >= node_count()) throw std::out_of_range("node id out of range");
  return adj_[static_cast<std::size_t>(v)];
}

int Graph::max_degree() const {
  int best = 0;
  for (const auto& a : adj_) best = std::max(best, static_cast<int>(a.size()));
  return best;
}

bool Graph::has_edge(int u, int v) const {
  const auto& au = neighbors(u);
  return std::binary_search(au.begin(), au.end(), v);
}

std::vector<int> Graph::bfs_distances(int source) const {
  if (source < 0 || source >= node_count())
    throw std::out_of_range("bfs source out of range");
  std::vector<int> dist(static_cast<std::size_t>(node_count()), -1);
  std::deque<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : neighbors(v)) {
      if (dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

GraphSpec GraphSpec::star(int d) {
  GraphSpec s;
  s.family = Family::star;
  s.d = d;
  return s;
}

GraphSpec GraphSpec::path(int n) {
  GraphSpec s;
  s.family = Family::path;
  s.n = n;
  return s;
}

GraphSpec GraphSpec::complete(int n) {
  GraphSpec s;
  s.family = Family::complete;
  s.n = n;
  return s;
}

GraphSpec GraphSpec::gnp(int n, double p, std::uint64_t seed) {
  GraphSpec s;
  s.family = Family::gnp;
  s.n = n;
  s.p = p;
  s.seed = seed;
  return s;
}

GraphSpec GraphSpec::unit_disc(int n, double radius, std::uint64_t seed) {
  GraphSpec s;
  s.family = Family::unit_disc;
  s.n = n;
  s.radius = radius;
  s.seed = seed;
  return s;
}

GraphSpec GraphSpec::hub_over_h(GraphSpec embedded) {
  GraphSpec s;
  s.family = Family::hub_over_h;
  s.h = std::make_shared<GraphSpec>(std::move(embedded));
  return s;
}

std::string GraphSpec::describe() const {
  std::ostringstream out;
  switch (family) {
    case Family::star: out << "star(d=" << d << ")"; break;
    case Family::path: out << "path(n=" << n << ")"; break;
    case Family::complete: out << "complete(n=" << n << ")"; break;
    case Family::gnp: out << "gnp(n=" << n << ",p=" << p << ",seed=" << seed << ")"; break;
    case Family::unit_disc:
      out << "unit_disc(n=" << n << ",radius=" << radius << ",seed=" << seed << ")";
      break;
    case Family::hub_over_h:
      out << "hub_over_h(" << (h ? h->describe() : "?") << ")";
      break;
  }
  return out.str();
}

namespace {

Graph generate_gnp(int n, double p, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("gnp.n must be >= 0");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("gnp.p must lie in [0,1]");
  Graph g(n);
  NodeRng rng(mix_seed(seed, 0x676e70));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform01() < p) g.add_edge(i, j);
  return g;
}

Graph generate_unit_disc(int n, double radius, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("unit_disc.n must be >= 0");
  if (radius <= 0.0) throw std::invalid_argument("unit_disc.radius must be > 0");
  std::vector<double> x(static_cast<std::size_t>(n));
  std::vector<double> y(static_cast<std::size_t>(n));
  NodeRng rng(mix_seed(seed, 0x756463));
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = rng.uniform01();
    y[static_cast<std::size_t>(i)] = rng.uniform01();
  }
  Graph g(n);
  const double r2 = radius * radius;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
      const double dy = y[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)];
      if (dx * dx + dy * dy <= r2) g.add_edge(i, j);
    }
  }
  return g;
}

}  // namespace

Graph generate(const GraphSpec& spec) {
  switch (spec.family) {
    case GraphSpec::Family::star: {
      if (spec.d < 0) throw std::invalid_argument("star.d must be >= 0");
      Graph g(spec.d + 1);
      for (int i = 1; i <= spec.d; ++i) g.add_edge(0, i);
      return g;
    }
    case GraphSpec::Family::path: {
      if (spec.n < 1) throw std::invalid_argument("path.n must be >= 1");
      Graph g(spec.n);
      for (int i = 0; i + 1 < spec.n; ++i) g.add_edge(i, i + 1);
      return g;
    }
    case GraphSpec::Family::complete: {
      if (spec.n < 1) throw std::invalid_argument("complete.n must be >= 1");
      Graph g(spec.n);
      for (int i = 0; i < spec.n; ++i)
        for (int j = i + 1; j < spec.n; ++j) g.add_edge(i, j);
      return g;
    }
    case GraphSpec::Family::gnp:
      return generate_gnp(spec.n, spec.p, spec.seed);
    case GraphSpec::Family::unit_disc:
      return generate_unit_disc(spec.n, spec.radius, spec.seed);
    case GraphSpec::Family::hub_over_h: {
      if (!spec.h) throw std::invalid_argument("hub_over_h.h is missing");
      const Graph inner = generate(*spec.h);
      const int hub = inner.node_count();
      Graph g(hub + 1);
      for (int v = 0; v < hub; ++v) {
        for (int w : inner.neighbors(v))
          if (v < w) g.add_edge(v, w);
        g.add_edge(v, hub);
      }
      return g;
    }
  }
  throw std::logic_error("unknown graph family");
}

Graph generate(GraphSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  if (spec.family == GraphSpec::Family::hub_over_h && spec.h) {
    auto inner = std::make_shared<GraphSpec>(*spec.h);
    inner->seed = seed;
    spec.h = std::move(inner);
  }
  return generate(spec);
}

namespace {

// Max independent set over a <=64-node induced subgraph given adjacency
// masks.  Branch on a highest-degree candidate; prune when the remaining
// candidates cannot beat the incumbent.
struct MisSearch {
  const std::vector<std::uint64_t>& adj;
  int best = 0;

  void run(std::uint64_t cand, int size) {
    if (size + std::popcount(cand) <= best) return;
    if (cand == 0) {
      best = std::max(best, size);
      return;
    }
    int pick = -1, pick_deg = -1;
    for (std::uint64_t m = cand; m != 0; m &= m - 1) {
      const int v = std::countr_zero(m);
      const int deg = std::popcount(adj[static_cast<std::size_t>(v)] & cand);
      if (deg > pick_deg) {
        pick = v;
        pick_deg = deg;
      }
    }
    const std::uint64_t bit = 1ULL << pick;
    run(cand & ~bit & ~adj[static_cast<std::size_t>(pick)], size + 1);
    run(cand & ~bit, size);
  }
};

}  // namespace

int independent_degree(const Graph& g, int v, int cap) {
  const auto& nbrs = g.neighbors(v);
  const int k = static_cast<int>(nbrs.size());
  if (k > cap) {
    std::ostringstream msg;
    msg << "neighborhood of node " << v << " has " << k
        << " nodes, exceeding the exact-search cap of " << cap;
    throw std::length_error(msg.str());
  }
  if (k <= 1) return k;
  std::vector<std::uint64_t> adj(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (g.has_edge(nbrs[static_cast<std::size_t>(i)], nbrs[static_cast<std::size_t>(j)])) {
        adj[static_cast<std::size_t>(i)] |= 1ULL << j;
        adj[static_cast<std::size_t>(j)] |= 1ULL << i;
      }
  MisSearch search{adj, 0};
  search.run(k == 64 ? ~0ULL : (1ULL << k) - 1, 0);
  return search.best;
}

int max_independent_degree(const Graph& g, int cap) {
  int best = 0;
  for (int v = 0; v < g.node_count(); ++v)
    best = std::max(best, independent_degree(g, v, cap));
  return best;
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << "format=1\n";
  out << "n=" << g.node_count() << "\n";
  for (int v = 0; v < g.node_count(); ++v)
    for (int w : g.neighbors(v))
      if (v < w) out << v << " " << w << "\n";
}

namespace {

[[noreturn]] void format_error(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "edge list line " << line << ": " << what;
  throw std::runtime_error(msg.str());
}

}  // namespace

Graph read_edge_list(std::istream& in) {
  std::string line;
  int line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw std::runtime_error("edge list is empty");
  if (line == "format=1") {
    if (!next_line()) throw std::runtime_error("edge list missing n= header");
  } else if (line.rfind("format=", 0) == 0) {
    format_error(line_no, "unsupported format version");
  }
  if (line.rfind("n=", 0) != 0) format_error(line_no, "expected n=<count> header");
  int n = 0;
  try {
    n = std::stoi(line.substr(2));
  } catch (const std::exception&) {
    format_error(line_no, "invalid node count");
  }
  if (n < 0) format_error(line_no, "invalid node count");

  Graph g(n);
  while (next_line()) {
    std::istringstream row(line);
    int u = 0, v = 0;
    if (!(row >> u >> v)) format_error(line_no, "expected \"u v\" pair");
    std::string rest;
    if (row >> rest) format_error(line_no, "trailing tokens after edge");
    if (u < 0 || u >= n || v < 0 || v >= n)
      format_error(line_no, "node id out of range");
    if (u == v) format_error(line_no, "self loop");
    g.add_edge(u, v);
  }
  return g;
}

void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_edge_list(g, out);
}

Graph load_edge_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_edge_list(in);
}

}  // namespace stabsim

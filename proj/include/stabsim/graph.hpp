#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace stabsim {

// Undirected simple graph with nodes 0..n-1 and sorted adjacency lists.
class Graph {
 public:
  explicit Graph(int n);

  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges);

  int node_count() const { return static_cast<int>(adj_.size()); }
  int edge_count() const { return edges_; }

  // Inserts the edge {u, v}.  Duplicate insertions are ignored; self loops
  // and out-of-range endpoints are rejected.
  void add_edge(int u, int v);

  const std::vector<int>& neighbors(int v) const;
  int degree(int v) const { return static_cast<int>(neighbors(v).size()); }
  int max_degree() const;
  bool has_edge(int u, int v) const;

  // Hop distances from source; -1 for unreachable nodes.
  std::vector<int> bfs_distances(int source) const;

 private:
  std::vector<std::vector<int>> adj_;
  int edges_ = 0;
};

// Description of a generated graph family.
struct GraphSpec {
  enum class Family { star, path, complete, gnp, unit_disc, hub_over_h };

  Family family = Family::star;
  int d = 0;                     // star: number of leaves
  int n = 0;                     // path / complete / gnp / unit_disc
  double p = 0.0;                // gnp edge probability
  double radius = 0.0;           // unit_disc connection radius
  std::uint64_t seed = 0;        // gnp / unit_disc point and edge draws
  std::shared_ptr<GraphSpec> h;  // hub_over_h: the embedded graph

  static GraphSpec star(int d);
  static GraphSpec path(int n);
  static GraphSpec complete(int n);
  static GraphSpec gnp(int n, double p, std::uint64_t seed);
  static GraphSpec unit_disc(int n, double radius, std::uint64_t seed);
  static GraphSpec hub_over_h(GraphSpec embedded);

  std::string describe() const;
};

// Deterministic for a given spec (including its seed).  The seed overload
// substitutes the spec's seed.  Invalid parameters throw
// std::invalid_argument naming the offending field.
Graph generate(const GraphSpec& spec);
Graph generate(GraphSpec spec, std::uint64_t seed);

// Size of a maximum independent set within N(v) (the independent degree).
// Exact branch-and-bound; neighborhoods larger than `cap` nodes throw
// std::length_error instead of silently approximating.
int independent_degree(const Graph& g, int v, int cap = 30);
int max_independent_degree(const Graph& g, int cap = 30);

// Edge-list text format: "format=1" line, "n=<count>" line, then one
// "u v" pair per line.  Import rejects malformed lines and out-of-range
// ids with a std::runtime_error carrying the line number.
void write_edge_list(const Graph& g, std::ostream& out);
Graph read_edge_list(std::istream& in);
void save_edge_list(const Graph& g, const std::string& path);
Graph load_edge_list(const std::string& path);

}  // namespace stabsim

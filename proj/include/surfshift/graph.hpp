#ifndef SURFSHIFT_GRAPH_HPP
#define SURFSHIFT_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace surfshift {

using Vertex = std::int32_t;

/// Torus coordinates, each in the representative range {-n+1, ..., n}.
struct Coord {
  int x = 0;
  int y = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

/// Undirected edge stored canonically with a < b.
struct Edge {
  Vertex a = 0;
  Vertex b = 0;

  static Edge canonical(Vertex v, Vertex w) { return v < w ? Edge{v, w} : Edge{w, v}; }
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class GraphKind { torus, generic };

/// Finite, connected, simple graph. Vertices are dense ids 0..vertex_count()-1.
/// Immutable after construction; copies share the distance table.
class Graph {
 public:
  /// The 2D discrete torus with vertex set {-n+1,...,n}^2. Vertex ids are
  /// row-major over (x, y): id = (x+n-1)*2n + (y+n-1).
  static Graph torus(int n) {
    if (n < 2) throw std::invalid_argument("torus: n must be >= 2, got " + std::to_string(n));
    Graph g;
    g.kind_ = GraphKind::torus;
    g.side_ = n;
    const int m = 2 * n;
    g.vertex_count_ = m * m;
    g.coords_.resize(static_cast<std::size_t>(m) * m);
    for (int ix = 0; ix < m; ++ix)
      for (int iy = 0; iy < m; ++iy) g.coords_[ix * m + iy] = Coord{ix - n + 1, iy - n + 1};

    std::vector<Edge> edges;
    edges.reserve(2 * static_cast<std::size_t>(m) * m);
    for (int ix = 0; ix < m; ++ix) {
      for (int iy = 0; iy < m; ++iy) {
        const Vertex v = ix * m + iy;
        edges.push_back(Edge::canonical(v, ((ix + 1) % m) * m + iy));
        edges.push_back(Edge::canonical(v, ix * m + (iy + 1) % m));
      }
    }
    g.build_adjacency(std::move(edges));
    return g;
  }

  /// A generic graph from an edge list. Rejects self-loops, multi-edges,
  /// out-of-range endpoints and disconnected graphs.
  static Graph from_edges(int vertex_count, std::span<const Edge> edges) {
    if (vertex_count < 1) throw std::invalid_argument("graph: vertex_count must be >= 1");
    std::vector<Edge> canon;
    canon.reserve(edges.size());
    for (const Edge& e : edges) {
      if (e.a < 0 || e.b < 0 || e.a >= vertex_count || e.b >= vertex_count)
        throw std::invalid_argument("graph: edge endpoint out of range");
      if (e.a == e.b) throw std::invalid_argument("graph: self-loop at vertex " + std::to_string(e.a));
      canon.push_back(Edge::canonical(e.a, e.b));
    }
    std::sort(canon.begin(), canon.end());
    if (std::adjacent_find(canon.begin(), canon.end()) != canon.end())
      throw std::invalid_argument("graph: multi-edge");

    Graph g;
    g.kind_ = GraphKind::generic;
    g.vertex_count_ = vertex_count;
    g.build_adjacency(std::move(canon));
    g.build_distance_table();
    return g;
  }

  /// Path graph 0 - 1 - ... - (count-1).
  static Graph path(int count) {
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < count; ++i) edges.push_back({i, i + 1});
    return from_edges(count, edges);
  }

  GraphKind kind() const { return kind_; }
  bool is_torus() const { return kind_ == GraphKind::torus; }
  /// Torus parameter n (side length is 2n). Zero for generic graphs.
  int side() const { return side_; }
  int vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  int degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }

  bool adjacent(Vertex v, Vertex w) const {
    const auto nb = neighbors(v);
    return std::find(nb.begin(), nb.end(), w) != nb.end();
  }

  /// Pinned vertex: (0,0) on the torus, id 0 otherwise.
  Vertex origin() const { return is_torus() ? at({0, 0}) : 0; }

  Coord coord(Vertex v) const {
    require_torus("coord");
    return coords_[v];
  }

  /// Vertex at the given coordinates, reduced modulo 2n into the representative range.
  Vertex at(Coord c) const {
    require_torus("at");
    const int m = 2 * side_;
    const int ix = wrap(c.x + side_ - 1, m);
    const int iy = wrap(c.y + side_ - 1, m);
    return ix * m + iy;
  }

  /// Representative of an integer coordinate modulo 2n in {-n+1, ..., n}.
  int representative(int c) const {
    require_torus("representative");
    return wrap(c + side_ - 1, 2 * side_) - side_ + 1;
  }

  /// Shortest-path length. Wraps around on the torus.
  int distance(Vertex v, Vertex w) const {
    if (is_torus()) {
      const int m = 2 * side_;
      const Coord a = coords_[v];
      const Coord b = coords_[w];
      const int dx = std::abs(a.x - b.x);
      const int dy = std::abs(a.y - b.y);
      return std::min(dx, m - dx) + std::min(dy, m - dy);
    }
    return (*dist_)[static_cast<std::size_t>(v) * vertex_count_ + w];
  }

  int diameter() const { return diameter_; }

  /// Literal-coordinate l1 norm |v1| + |v2|; not the wrapped distance to the origin.
  int l1_norm(Vertex v) const {
    require_torus("l1_norm");
    return std::abs(coords_[v].x) + std::abs(coords_[v].y);
  }

  /// Two-colouring with the origin on side 0, or nullopt when the graph is not bipartite.
  std::optional<std::vector<int>> bipartition() const {
    std::vector<int> colour(vertex_count_, -1);
    std::queue<Vertex> q;
    colour[origin()] = 0;
    q.push(origin());
    while (!q.empty()) {
      const Vertex v = q.front();
      q.pop();
      for (Vertex w : neighbors(v)) {
        if (colour[w] < 0) {
          colour[w] = 1 - colour[v];
          q.push(w);
        } else if (colour[w] == colour[v]) {
          return std::nullopt;
        }
      }
    }
    return colour;
  }

 private:
  Graph() = default;

  static int wrap(int a, int m) { return ((a % m) + m) % m; }

  void require_torus(const char* what) const {
    if (!is_torus()) throw std::invalid_argument(std::string(what) + ": requires a torus graph");
  }

  void build_adjacency(std::vector<Edge> edges) {
    edges_ = std::move(edges);
    std::vector<int> deg(vertex_count_, 0);
    for (const Edge& e : edges_) {
      ++deg[e.a];
      ++deg[e.b];
    }
    offsets_.assign(vertex_count_ + 1, 0);
    for (int v = 0; v < vertex_count_; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
    adj_.resize(offsets_.back());
    std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : edges_) {
      adj_[fill[e.a]++] = e.b;
      adj_[fill[e.b]++] = e.a;
    }
    if (is_torus()) diameter_ = 2 * side_;
  }

  void build_distance_table() {
    const std::size_t n = vertex_count_;
    auto table = std::make_shared<std::vector<std::int32_t>>(n * n, -1);
    std::vector<Vertex> frontier;
    for (Vertex s = 0; s < vertex_count_; ++s) {
      std::int32_t* row = table->data() + s * n;
      row[s] = 0;
      frontier.assign(1, s);
      for (std::size_t head = 0; head < frontier.size(); ++head) {
        const Vertex v = frontier[head];
        for (Vertex w : neighbors(v)) {
          if (row[w] < 0) {
            row[w] = row[v] + 1;
            frontier.push_back(w);
          }
        }
      }
      if (frontier.size() != n) throw std::invalid_argument("graph: not connected");
      diameter_ = std::max(diameter_, row[frontier.back()]);
    }
    dist_ = std::move(table);
  }

  GraphKind kind_ = GraphKind::generic;
  int side_ = 0;
  int vertex_count_ = 0;
  int diameter_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> offsets_;
  std::vector<Vertex> adj_;
  std::vector<Coord> coords_;
  std::shared_ptr<const std::vector<std::int32_t>> dist_;
};

/// Radii r(v) of the components of an edge subset, with distances measured in
/// the full graph, and the largest component diameter.
struct ComponentMetrics {
  std::vector<int> r;
  int big_m = 0;
};

inline ComponentMetrics component_metrics(const Graph& g, std::span<const Edge> subset) {
  const int n = g.vertex_count();
  std::vector<Vertex> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Vertex v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (const Edge& e : subset) {
    if (!g.adjacent(e.a, e.b)) throw std::invalid_argument("component_metrics: edge not in graph");
    const Vertex ra = find(e.a);
    const Vertex rb = find(e.b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  // Bucket vertices by component root.
  std::vector<int> start(n + 1, 0);
  std::vector<Vertex> root(n);
  for (Vertex v = 0; v < n; ++v) {
    root[v] = find(v);
    ++start[root[v] + 1];
  }
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<Vertex> members(n);
  std::vector<int> fill(start.begin(), start.end() - 1);
  for (Vertex v = 0; v < n; ++v) members[fill[root[v]]++] = v;

  ComponentMetrics out;
  out.r.assign(n, 0);
  for (Vertex c = 0; c < n; ++c) {
    const int lo = start[c];
    const int hi = start[c + 1];
    if (hi - lo < 2) continue;
    for (int i = lo; i < hi; ++i) {
      const Vertex v = members[i];
      int best = 0;
      for (int j = lo; j < hi; ++j) best = std::max(best, g.distance(v, members[j]));
      out.r[v] = best;
      out.big_m = std::max(out.big_m, best);
    }
  }
  return out;
}

}  // namespace surfshift

#endif

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "surfshift/graph.hpp"

using namespace surfshift;

TEST(Torus, SizesAndDegrees) {
  for (int n : {2, 3, 5}) {
    const Graph g = Graph::torus(n);
    EXPECT_EQ(g.vertex_count(), 4 * n * n);
    EXPECT_EQ(g.edge_count(), static_cast<std::size_t>(2 * 4 * n * n));
    for (Vertex v = 0; v < g.vertex_count(); ++v) EXPECT_EQ(g.degree(v), 4);
  }
  const Graph g2 = Graph::torus(2);
  EXPECT_EQ(g2.vertex_count(), 16);
  EXPECT_EQ(g2.edge_count(), 32u);
}

TEST(Torus, RejectsSmallN) {
  EXPECT_THROW(Graph::torus(1), std::invalid_argument);
  EXPECT_THROW(Graph::torus(0), std::invalid_argument);
}

TEST(Torus, WrapAroundNeighbours) {
  const Graph g = Graph::torus(2);
  const Vertex v = g.at({1, 0});
  // Coordinates live in {-1, 0, 1, 2}; (1,-1) is the wrap partner of (1,3).
  std::vector<Vertex> expect{g.at({0, 0}), g.at({2, 0}), g.at({1, 1}), g.at({1, -1})};
  std::sort(expect.begin(), expect.end());
  std::vector<Vertex> got(g.neighbors(v).begin(), g.neighbors(v).end());
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, expect);
  EXPECT_EQ(g.at({1, 3}), g.at({1, -1}));
  EXPECT_EQ(g.coord(g.at({2, 2})), (Coord{2, 2}));
  EXPECT_EQ(g.coord(g.at({3, 3})), (Coord{-1, -1}));
}

TEST(Torus, DistanceMatchesBfs) {
  for (int n : {2, 3, 4}) {
    const Graph g = Graph::torus(n);
    for (Vertex s = 0; s < g.vertex_count(); s += 3) {
      const auto d = oracle::bfs(g, s);
      for (Vertex w = 0; w < g.vertex_count(); ++w) ASSERT_EQ(g.distance(s, w), d[w]);
    }
  }
  const Graph g2 = Graph::torus(2);
  EXPECT_EQ(g2.distance(g2.at({0, 0}), g2.at({1, 1})), 2);
  const Graph g4 = Graph::torus(4);
  EXPECT_EQ(g4.distance(g4.at({0, 0}), g4.at({4, 4})), 8);
  EXPECT_EQ(g4.diameter(), 8);
}

TEST(Torus, DistanceIsAMetric) {
  const Graph g = Graph::torus(3);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, g.vertex_count() - 1);
  for (int i = 0; i < 2000; ++i) {
    Vertex u = pick(rng), v = pick(rng), w = pick(rng);
    EXPECT_EQ(g.distance(v, v), 0);
    EXPECT_EQ(g.distance(v, w), g.distance(w, v));
    EXPECT_LE(g.distance(v, w), g.distance(v, u) + g.distance(u, w));
  }
}

TEST(Torus, TranslationPreservesAdjacency) {
  const Graph g = Graph::torus(4);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> off(-10, 10);
  for (int trial = 0; trial < 50; ++trial) {
    const int a = off(rng), b = off(rng);
    for (const Edge& e : g.edges()) {
      const Coord p = g.coord(e.a), q = g.coord(e.b);
      ASSERT_TRUE(g.adjacent(g.at({p.x + a, p.y + b}), g.at({q.x + a, q.y + b})));
    }
  }
}

TEST(Torus, L1NormUsesLiteralCoordinates) {
  const Graph g = Graph::torus(4);
  EXPECT_EQ(g.l1_norm(g.at({0, 0})), 0);
  EXPECT_EQ(g.l1_norm(g.at({4, 4})), 8);
  EXPECT_EQ(g.l1_norm(g.at({-3, 2})), 5);
  // (4,4) is at wrapped distance 8 from the origin as well, but (3,-3) differs from (-3,3) only by label.
  EXPECT_EQ(g.l1_norm(g.at({-4, 0})), 4);  // -4 = 4 mod 8
  EXPECT_THROW(Graph::path(3).l1_norm(0), std::invalid_argument);
}

TEST(GenericGraph, Validation) {
  std::vector<Edge> loop{{0, 0}};
  EXPECT_THROW(Graph::from_edges(2, loop), std::invalid_argument);
  std::vector<Edge> multi{{0, 1}, {1, 0}};
  EXPECT_THROW(Graph::from_edges(2, multi), std::invalid_argument);
  std::vector<Edge> split{{0, 1}, {2, 3}};
  EXPECT_THROW(Graph::from_edges(4, split), std::invalid_argument);
  const Graph p = Graph::path(4);
  EXPECT_EQ(p.distance(0, 3), 3);
  EXPECT_EQ(p.diameter(), 3);
  EXPECT_EQ(p.origin(), 0);
}

TEST(GenericGraph, BipartitionDetectsOddCycles) {
  std::vector<Edge> tri{{0, 1}, {1, 2}, {0, 2}};
  EXPECT_FALSE(Graph::from_edges(3, tri).bipartition().has_value());
  auto colours = Graph::torus(3).bipartition();
  ASSERT_TRUE(colours.has_value());
}

TEST(ComponentMetrics, EmptyAndSingleEdge) {
  const Graph g = Graph::torus(4);
  auto cm = component_metrics(g, {});
  EXPECT_EQ(cm.big_m, 0);
  for (int r : cm.r) EXPECT_EQ(r, 0);

  const Vertex u = g.at({0, 0}), w = g.at({1, 0});
  std::vector<Edge> one{Edge::canonical(u, w)};
  cm = component_metrics(g, one);
  EXPECT_EQ(cm.r[u], 1);
  EXPECT_EQ(cm.r[w], 1);
  EXPECT_EQ(cm.big_m, 1);
}

TEST(ComponentMetrics, PathOfTwoEdges) {
  const Graph g = Graph::torus(4);
  const Vertex u = g.at({0, 0}), x = g.at({1, 0}), w = g.at({1, 1});
  std::vector<Edge> path{Edge::canonical(u, x), Edge::canonical(x, w)};
  auto cm = component_metrics(g, path);
  EXPECT_EQ(cm.big_m, 2);
  EXPECT_EQ(cm.r[u], 2);
  EXPECT_EQ(cm.r[x], 1);
}

TEST(ComponentMetrics, MatchesOracleAndIsMonotone) {
  const Graph g = Graph::torus(3);
  std::mt19937_64 rng(3);
  std::bernoulli_distribution keep(0.35);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Edge> subset;
    for (const Edge& e : g.edges())
      if (keep(rng)) subset.push_back(e);
    int oracle_m = 0;
    const auto r = oracle::component_radii(g, subset, &oracle_m);
    const auto cm = component_metrics(g, subset);
    EXPECT_EQ(cm.r, r);
    EXPECT_EQ(cm.big_m, oracle_m);

    std::vector<Edge> bigger = subset;
    for (const Edge& e : g.edges())
      if (keep(rng)) bigger.push_back(e);
    std::sort(bigger.begin(), bigger.end());
    bigger.erase(std::unique(bigger.begin(), bigger.end()), bigger.end());
    EXPECT_GE(component_metrics(g, bigger).big_m, cm.big_m);
  }
}

TEST(ComponentMetrics, RejectsForeignEdges) {
  const Graph g = Graph::torus(2);
  std::vector<Edge> bad{Edge::canonical(g.at({0, 0}), g.at({1, 1}))};
  EXPECT_THROW(component_metrics(g, bad), std::invalid_argument);
}

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "surfshift/potential.hpp"
#include "surfshift/sampler.hpp"
#include "surfshift/stats.hpp"

using namespace surfshift;

TEST(Potential, Evaluation) {
  const auto h = Potential::hammock(1.0);
  EXPECT_EQ(h(0.5), 0.0);
  EXPECT_EQ(h(1.0), 0.0);
  EXPECT_EQ(h(-1.0), 0.0);
  EXPECT_EQ(h(1.0001), kInf);
  EXPECT_EQ(Potential::quadratic(1.0)(2.0), 4.0);
  EXPECT_EQ(Potential::double_well(2.0, 1.0)(1.0), 0.0);
  EXPECT_EQ(Potential::double_well(2.0, 1.0)(0.0), 2.0);
  EXPECT_EQ(Potential::smooth_interval(1.0, 3.0, false)(1.0), kInf);
  EXPECT_EQ(Potential::smooth_interval(1.0, 3.0, true)(1.0), 3.0);
  EXPECT_EQ(Potential::smooth_line(1.0, 1.0)(2.0), 20.0);
  EXPECT_THROW(Potential::hammock(0.0), std::invalid_argument);
  EXPECT_THROW(Potential::quadratic(-1.0), std::invalid_argument);
}

TEST(Potential, SymmetricAndBoundedBelow) {
  const std::vector<Potential> all{Potential::hammock(1.5), Potential::quadratic(0.7), Potential::double_well(1.0, 0.8),
                                   Potential::smooth_interval(1.0, 2.0), Potential::smooth_line(0.5, 0.25)};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(-4.0, 4.0);
  for (const auto& u : all) {
    for (int i = 0; i < 1000; ++i) {
      const double t = x(rng);
      ASSERT_EQ(u(t), u(-t)) << u.name();
      ASSERT_GE(u(t), u.inf_u()) << u.name();
      if (!u.bounded_support()) {
        const double c = u.envelope_curvature();
        ASSERT_GE(u(t), c * t * t - u.envelope_offset() - 1e-12) << u.name();
      }
    }
  }
}

TEST(Potential, Rescaling) {
  const auto h = Potential::hammock(1.0).rescaled(2.0);
  EXPECT_EQ(h.radius(), 0.5);
  EXPECT_EQ(h(0.5), 0.0);
  EXPECT_EQ(h(0.51), kInf);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x(-3.0, 3.0);
  const std::vector<Potential> all{Potential::hammock(1.5), Potential::quadratic(0.7), Potential::double_well(1.0, 0.8),
                                   Potential::smooth_interval(1.0, 2.0), Potential::smooth_line(0.5, 0.25)};
  for (const auto& u : all) {
    const auto same = u.rescaled(1.0);
    const double kp = 1.7;
    const auto r = rescale_potential(u, kp);
    for (int i = 0; i < 200; ++i) {
      const double t = x(rng);
      ASSERT_EQ(same(t), u(t));
      if (std::isfinite(u(kp * t))) ASSERT_NEAR(r(t), u(kp * t), 1e-12 * (1 + u(kp * t))) << u.name();
      else ASSERT_EQ(r(t), kInf);
    }
  }
  EXPECT_NEAR(Potential::quadratic(1.0).rescaled(3.0)(1.0), 9.0, 1e-12);
}

TEST(ConditionalSupport, Examples) {
  const Graph g = Graph::path(3);
  std::vector<double> phi{0.3, 0.0, -0.2};
  const auto iv = conditional_support(g, Potential::hammock(1.0), phi, 1);
  EXPECT_DOUBLE_EQ(iv.lo, -0.7);
  EXPECT_DOUBLE_EQ(iv.hi, 0.8);
  std::vector<double> flat{0.4, 0.0, 0.4};
  const auto iv2 = conditional_support(g, Potential::hammock(0.5), flat, 1);
  EXPECT_DOUBLE_EQ(iv2.lo, -0.1);
  EXPECT_DOUBLE_EQ(iv2.hi, 0.9);
  const auto line = conditional_support(g, Potential::smooth_line(1.0, 0.0), phi, 1);
  EXPECT_EQ(line.lo, -kInf);
  EXPECT_EQ(line.hi, kInf);
  std::vector<double> bad{1.5, 0.0, -1.5};
  EXPECT_THROW(conditional_support(g, Potential::hammock(1.0), bad, 1), InfeasibleState);
}

TEST(HeatBath, PinnedVertexRejected) {
  const Graph g = Graph::path(2);
  SurfaceChain c(g, Potential::hammock(1.0), 1);
  EXPECT_THROW(c.heat_bath_step(0), std::invalid_argument);
}

TEST(HeatBath, TwoVertexLaws) {
  const Graph g = Graph::path(2);
  struct Case {
    Potential u;
    double var;
  };
  for (const auto& c : {Case{Potential::hammock(1.0), 1.0 / 3.0}, Case{Potential::quadratic(1.0), 0.5}}) {
    SurfaceChain chain(g, c.u, 11);
    Moments m;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      chain.sweep();
      m.add(chain.heights()[1]);
    }
    EXPECT_NEAR(m.mean, 0.0, 4 * std::sqrt(c.var / n)) << c.u.name();
    EXPECT_NEAR(m.variance(), c.var, 0.01) << c.u.name();
  }
}

// Rejection samplers against direct numerical integration of the conditional density.
TEST(HeatBath, RejectionSamplersMatchQuadrature) {
  const Graph g = Graph::path(3);
  const std::vector<double> phi{0.4, 0.0, -0.3};
  const std::vector<Potential> all{Potential::double_well(1.0, 0.8), Potential::smooth_interval(1.0, 2.0),
                                   Potential::smooth_line(0.5, 0.25)};
  for (const auto& u : all) {
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    const int steps = 200000;
    const double lo = -8.0, hi = 8.0, h = (hi - lo) / steps;
    for (int i = 0; i <= steps; ++i) {
      const double x = lo + i * h;
      const double e = u(x - phi[0]) + u(x - phi[2]);
      if (!std::isfinite(e)) continue;
      const double w = oracle::simpson_weight(i, steps) * h / 3 * std::exp(-e);
      z += w;
      m1 += w * x;
      m2 += w * x * x;
    }
    const double mean = m1 / z, var = m2 / z - mean * mean;
    RandomStream rng(5, 0);
    Moments m;
    const int n = 200000;
    for (int i = 0; i < n; ++i) m.add(sample_conditional(g, u, phi, 1, rng));
    EXPECT_NEAR(m.mean, mean, 5 * std::sqrt(var / n)) << u.name();
    EXPECT_NEAR(m.variance(), var, 5 * var * std::sqrt(3.0 / n)) << u.name();
  }
}

TEST(HeatBath, MonotoneUnderSharedUniforms) {
  const Graph g = Graph::torus(3);
  const auto u = Potential::hammock(1.0);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    // Two ordered feasible configurations from the bounding pair and a random chain state.
    SurfaceChain c(g, u, 100 + trial);
    c.run(5);
    std::vector<double> lo(c.heights()), hi(c.heights());
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      const double d = g.distance(v, g.origin());
      lo[v] = std::max(-d, lo[v] - 0.3 * std::uniform_real_distribution<double>(0, 1)(rng));
      hi[v] = std::min(d, hi[v] + 0.3 * std::uniform_real_distribution<double>(0, 1)(rng));
    }
    if (!is_feasible(g, u, lo) || !is_feasible(g, u, hi)) continue;
    const auto key = stream_key(trial, 0);
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      if (v == g.origin()) continue;
      const double reach = g.distance(v, g.origin());
      const auto ilo = conditional_support(g, u, lo, v), ihi = conditional_support(g, u, hi, v);
      lo[v] = coupled_hammock_draw(ilo, reach, key, 1, v, 8);
      hi[v] = coupled_hammock_draw(ihi, reach, key, 1, v, 8);
      ASSERT_LE(lo[v], hi[v]);
      // plain heat-bath quantile with a shared uniform
      const double s = std::uniform_real_distribution<double>(0, 1)(rng);
      ASSERT_LE(ilo.lo + s * ilo.length(), ihi.lo + s * ihi.length());
    }
  }
}

TEST(Sampler, FeasibleDeterministicLipschitz) {
  const Graph g = Graph::torus(4);
  const auto u = Potential::hammock(1.0);
  const auto a = sample_surface(g, u, 50, 99);
  const auto b = sample_surface(g, u, 50, 99);
  EXPECT_EQ(a.heights, b.heights);
  EXPECT_EQ(a[g.origin()], 0.0);
  EXPECT_TRUE(is_feasible(g, u, a.heights));
  for (Vertex v = 0; v < g.vertex_count(); ++v) EXPECT_LE(std::abs(a[v]), g.distance(v, g.origin()));
  EXPECT_NE(sample_surface(g, u, 50, 100).heights, a.heights);

  for (const auto& pot : {Potential::quadratic(1.0), Potential::double_well(1.0, 0.8), Potential::smooth_interval(0.8, 1.0),
                          Potential::smooth_line(0.5, 0.25)}) {
    const auto s = sample_surface(g, pot, 20, 5);
    EXPECT_TRUE(std::isfinite(max_edge_energy(g, pot, s.heights))) << pot.name();
  }
}

TEST(Sampler, BipartiteStartForPotentialInfiniteAtZero) {
  // Finite only for 0.5 <= |x| <= 1: every edge must tilt.
  const auto ring = Potential::custom("ring", 1.0, [](double x) { return std::abs(x) >= 0.5 ? 0.0 : kInf; }, 0.0);
  const Graph g = Graph::torus(3);
  const auto start = SurfaceChain::initial_heights(g, ring);
  EXPECT_TRUE(is_feasible(g, ring, start));
  const auto s = sample_surface(g, ring, 30, 3);
  EXPECT_TRUE(is_feasible(g, ring, s.heights));
  std::vector<Edge> tri{{0, 1}, {1, 2}, {0, 2}};
  EXPECT_THROW(SurfaceChain::initial_heights(Graph::from_edges(3, tri), ring), std::runtime_error);
}

TEST(Cftp, DeterministicFeasibleAndUniformOnPath) {
  const Graph g = Graph::path(2);
  const auto a = cftp_hammock(g, 1.0, 17);
  const auto b = cftp_hammock(g, 1.0, 17);
  EXPECT_EQ(a.config.heights, b.config.heights);
  std::vector<double> xs;
  for (std::uint64_t s = 0; s < 4000; ++s) xs.push_back(cftp_hammock(g, 1.0, 1000 + s).config[1]);
  const auto ks = ks_test(xs, [](double x) { return std::clamp((x + 1.0) / 2.0, 0.0, 1.0); });
  EXPECT_GT(ks.p_value, 0.01);

  const Graph t = Graph::torus(3);
  const auto c = cftp_hammock(t, 1.0, 4);
  EXPECT_TRUE(is_feasible(t, Potential::hammock(1.0), c.config.heights));
  EXPECT_EQ(c.config[t.origin()], 0.0);
}

TEST(Cftp, EpochCap) {
  CftpOptions opts;
  opts.max_epochs = 1;
  opts.proposals = 0;  // only quantile draws: bounding chains of torus(3) cannot meet in one sweep
  EXPECT_THROW(cftp_hammock(Graph::torus(3), 1.0, 1, opts), EpochCapExceeded);
}

TEST(Sampler, TranslationCovariance) {
  // Var(phi_v) with the pin at 0 equals Var(phi_{u+v} - phi_u): compare two translates.
  const Graph g = Graph::torus(2);
  const Vertex v = g.at({1, 1});
  const Vertex u = g.at({1, 0}), uv = g.at({2, 1});
  SurfaceChain c(g, Potential::hammock(1.0), 21);
  c.run(100);
  Moments direct, shifted;
  for (int i = 0; i < 100000; ++i) {
    c.sweep();
    direct.add(c.heights()[v]);
    shifted.add(c.heights()[uv] - c.heights()[u]);
  }
  EXPECT_NEAR(direct.variance(), shifted.variance(), 0.03);
  EXPECT_NEAR(direct.mean, 0.0, 0.03);
}

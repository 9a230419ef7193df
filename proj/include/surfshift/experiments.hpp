// Monte Carlo experiments on the pinned surface measure: variance, small-ball,
// tail and maximum estimators, the controlled-gradients probe, the chessboard
// check, and the shifted-configuration survey.
#ifndef SURFSHIFT_EXPERIMENTS_HPP
#define SURFSHIFT_EXPERIMENTS_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "addition.hpp"
#include "graph.hpp"
#include "potential.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "stats.hpp"
#include "tau.hpp"

namespace surfshift {

// ---------------------------------------------------------------------------
// Chain running

/// Runs f(0..count-1) on a pool of worker threads; each index runs exactly once
/// and the first exception is rethrown after all workers stop.
template <class F>
void parallel_for(int count, int threads, F f) {
  if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

enum class SamplerMethod { heat_bath, cftp };

struct ChainPlan {
  int chains = 4;
  std::uint64_t burn_in = 1000;  // sweeps before the first record
  std::uint64_t samples = 1000;  // records per chain
  std::uint64_t thin = 1;        // sweeps between records
  int batches = 20;              // per chain, for the batch jackknife
  int threads = 0;               // 0: hardware concurrency
  SweepOptions sweep{};
  SamplerMethod method = SamplerMethod::heat_bath;
  CftpOptions cftp{};
};

/// 200 (2n)^2 sweeps on torus(n), 200 |V| otherwise.
inline std::uint64_t default_burn_in(const Graph& g) {
  const std::uint64_t side = g.is_torus() ? 2 * g.side() : g.vertex_count();
  return 200 * side * side;
}

/// Observables recorded along the chains, chain-major: value(c, s, j).
struct SampleTable {
  int chains = 0;
  std::uint64_t samples = 0;
  int width = 0;
  std::vector<double> data;

  double value(int c, std::uint64_t s, int j) const {
    return data[(static_cast<std::size_t>(c) * samples + s) * width + j];
  }
  std::vector<double> series(int c, int j) const {
    std::vector<double> out(samples);
    for (std::uint64_t s = 0; s < samples; ++s) out[s] = value(c, s, j);
    return out;
  }
};

/// Runs the chains of `plan` and records obs(heights, out) for each state.
/// Chain c uses stream (seed, c); CFTP sample s of chain c uses stream
/// (seed, c * 2^32 + s). The result depends only on (g, u, plan, seed).
template <class Obs>
SampleTable sample_observables(const Graph& g, const Potential& u, const ChainPlan& plan, std::uint64_t seed,
                               int width, Obs obs) {
  if (plan.chains < 1 || plan.samples < 1 || plan.thin < 1 || plan.batches < 1)
    throw std::invalid_argument("chain plan: chains, samples, thin and batches must be >= 1");
  if (plan.method == SamplerMethod::cftp && u.kind() != PotentialKind::hammock)
    throw std::invalid_argument("chain plan: exact sampling is only available for the hammock potential");
  SampleTable t{plan.chains, plan.samples, width, {}};
  t.data.assign(static_cast<std::size_t>(plan.chains) * plan.samples * width, 0.0);
  parallel_for(plan.chains, plan.threads, [&](int c) {
    double* row = t.data.data() + static_cast<std::size_t>(c) * plan.samples * width;
    if (plan.method == SamplerMethod::cftp) {
      CftpOptions o = plan.cftp;
      for (std::uint64_t s = 0; s < plan.samples; ++s) {
        o.chain = (static_cast<std::uint64_t>(c) << 32) + s;
        const auto r = cftp_hammock(g, u.radius(), seed, o);
        obs(std::span<const double>(r.config.heights), std::span<double>(row + s * width, width));
      }
      return;
    }
    SurfaceChain chain(g, u, seed, static_cast<std::uint64_t>(c), plan.sweep);
    chain.run(plan.burn_in);
    for (std::uint64_t s = 0; s < plan.samples; ++s) {
      chain.run(plan.thin);
      obs(std::span<const double>(chain.heights()), std::span<double>(row + s * width, width));
    }
  });
  return t;
}

/// Per-group column sums for the batch jackknife: group (c, b) holds records
/// [b S / B, (b + 1) S / B) of chain c.
struct GroupSums {
  int groups = 0;
  int width = 0;
  std::vector<double> sum;    // groups x width
  std::vector<double> count;  // groups

  static GroupSums from(const SampleTable& t, int batches) {
    GroupSums gs;
    batches = static_cast<int>(std::min<std::uint64_t>(batches, t.samples));
    gs.groups = t.chains * batches;
    gs.width = t.width;
    gs.sum.assign(static_cast<std::size_t>(gs.groups) * t.width, 0.0);
    gs.count.assign(gs.groups, 0.0);
    for (int c = 0; c < t.chains; ++c)
      for (int b = 0; b < batches; ++b) {
        const int g = c * batches + b;
        const std::uint64_t lo = t.samples * b / batches, hi = t.samples * (b + 1) / batches;
        for (std::uint64_t s = lo; s < hi; ++s)
          for (int j = 0; j < t.width; ++j) gs.sum[static_cast<std::size_t>(g) * t.width + j] += t.value(c, s, j);
        gs.count[g] = static_cast<double>(hi - lo);
      }
    return gs;
  }

  /// Column means over all groups except `excluded` (none when < 0).
  std::vector<double> means(int excluded = -1) const {
    std::vector<double> m(width, 0.0);
    double n = 0.0;
    for (int g = 0; g < groups; ++g) {
      if (g == excluded) continue;
      for (int j = 0; j < width; ++j) m[j] += sum[static_cast<std::size_t>(g) * width + j];
      n += count[g];
    }
    for (double& x : m) x /= n;
    return m;
  }
};

/// Mean over chains of the integrated autocorrelation time of column j.
inline double mean_autocorrelation(const SampleTable& t, int j) {
  double s = 0.0;
  for (int c = 0; c < t.chains; ++c) {
    const auto x = t.series(c, j);
    s += integrated_autocorrelation(x);
  }
  return s / t.chains;
}

// ---------------------------------------------------------------------------
// Height statistics

/// Pairs (a, b) whose differences phi_a - phi_b share the law of phi_v under
/// the pinned measure: all translates (u + v, u) on the torus, just (v, origin)
/// elsewhere.
inline std::vector<std::pair<Vertex, Vertex>> difference_pairs(const Graph& g, Vertex v, bool translate = true) {
  std::vector<std::pair<Vertex, Vertex>> out;
  if (!g.is_torus() || !translate) {
    out.push_back({v, g.origin()});
    return out;
  }
  const Coord cv = g.coord(v);
  for (Vertex w = 0; w < g.vertex_count(); ++w) {
    const Coord cw = g.coord(w);
    out.push_back({g.at({cw.x + cv.x, cw.y + cv.y}), w});
  }
  return out;
}

/// |v|_1 on the torus, graph distance to the origin elsewhere.
inline int vertex_norm(const Graph& g, Vertex v) { return g.is_torus() ? g.l1_norm(v) : g.distance(v, g.origin()); }

struct SurveyOptions {
  std::vector<double> radii;   // small-ball radii r >= 1
  std::vector<double> levels;  // tail levels t >= 1, threshold t sqrt(log(1 + |v|_1))
  bool translate = true;       // average over translates on the torus
};

struct ProbabilityEstimate {
  double threshold = 0.0;  // r, or t
  double cutoff = 0.0;     // the height bound actually compared against
  EstimateWithError estimate;
  bool in_regime = true;
};

struct SurveyReport {
  Vertex v = 0;
  int norm = 0;
  EstimateWithError variance;
  EstimateWithError mean;  // diagnostic, 0 by symmetry
  double first_half = 0.0;
  double second_half = 0.0;
  double tau_int = 1.0;
  double effective_samples = 0.0;
  bool regime = true;  // |v|_1 >= (log n)^2
  std::vector<ProbabilityEstimate> small_ball;
  std::vector<ProbabilityEstimate> tail;
  EstimateWithError max_median;  // median of max_w |phi_w|
  double max_mean = 0.0;
  std::vector<double> max_samples;
  int ceiling_violations = 0;  // max < |phi_v| or, for bounded U, max > K diam
};

/// One pass over the chains collecting everything needed by the variance,
/// small-ball, tail and maximum estimators. Per record, with D ranging over the
/// difference pairs: Y = mean D^2, Dbar = mean D, and the fractions of |D| at
/// most r and above each tail cutoff (from the same counts, so the two
/// complementary fractions add up to one).
inline SurveyReport survey_heights(const Graph& g, const Potential& u, Vertex v, const ChainPlan& plan,
                                   std::uint64_t seed, const SurveyOptions& opts = {}) {
  if (v == g.origin()) throw std::invalid_argument("survey: v must differ from the pinned vertex");
  for (double r : opts.radii)
    if (!(r >= 1.0)) throw std::invalid_argument("survey: small-ball radius must be >= 1");
  for (double t : opts.levels)
    if (!(t >= 1.0)) throw std::invalid_argument("survey: tail level must be >= 1");

  SurveyReport rep;
  rep.v = v;
  rep.norm = vertex_norm(g, v);
  const double scale = std::sqrt(std::log1p(static_cast<double>(rep.norm)));
  const auto pairs = difference_pairs(g, v, opts.translate);
  const double npairs = static_cast<double>(pairs.size());
  const int nr = static_cast<int>(opts.radii.size());
  const int nt = static_cast<int>(opts.levels.size());
  std::vector<double> cutoffs;
  for (double t : opts.levels) cutoffs.push_back(t * scale);
  const double ceiling = u.bounded_support() ? u.radius() * g.diameter() : kInf;

  // columns: Y, Dbar, max, phi_v, radii..., levels..., ceiling flag
  const int width = 5 + nr + nt;
  const auto table = sample_observables(g, u, plan, seed, width, [&](std::span<const double> h, std::span<double> out) {
    double y = 0.0, d = 0.0;
    std::vector<std::int64_t> inside(nr, 0), above(nt, 0);
    for (const auto& [a, b] : pairs) {
      const double x = h[a] - h[b];
      y += x * x;
      d += x;
      for (int i = 0; i < nr; ++i) inside[i] += std::abs(x) <= opts.radii[i];
      for (int i = 0; i < nt; ++i) above[i] += std::abs(x) > cutoffs[i];
    }
    double mx = 0.0;
    for (double x : h) mx = std::max(mx, std::abs(x));
    out[0] = y / npairs;
    out[1] = d / npairs;
    out[2] = mx;
    out[3] = h[v];
    for (int i = 0; i < nr; ++i) out[4 + i] = static_cast<double>(inside[i]) / npairs;
    for (int i = 0; i < nt; ++i) out[4 + nr + i] = static_cast<double>(above[i]) / npairs;
    out[4 + nr + nt] = (mx < std::abs(h[v]) || mx > ceiling) ? 1.0 : 0.0;
  });

  const auto gs = GroupSums::from(table, plan.batches);
  const std::int64_t n = static_cast<std::int64_t>(plan.chains) * static_cast<std::int64_t>(plan.samples);
  auto var_stat = [&](int ex) {
    const auto m = gs.means(ex);
    return m[0] - m[1] * m[1];
  };
  rep.variance = jackknife(gs.groups, var_stat);
  rep.variance.n_samples = n;
  rep.variance.seed = seed;
  rep.mean = jackknife(gs.groups, [&](int ex) { return gs.means(ex)[1]; });
  rep.mean.n_samples = n;
  rep.mean.seed = seed;

  // Burn-in check: the same statistic on each half of every chain.
  auto half_variance = [&](bool second) {
    Moments y, d;
    for (int c = 0; c < table.chains; ++c)
      for (std::uint64_t s = second ? table.samples / 2 : 0; s < (second ? table.samples : table.samples / 2); ++s) {
        y.add(table.value(c, s, 0));
        d.add(table.value(c, s, 1));
      }
    return y.mean - d.mean * d.mean;
  };
  rep.first_half = half_variance(false);
  rep.second_half = half_variance(true);
  rep.tau_int = mean_autocorrelation(table, 0);
  rep.effective_samples = static_cast<double>(n) / rep.tau_int;

  const double logn = g.is_torus() ? std::log(static_cast<double>(g.side())) : 0.0;
  rep.regime = rep.norm >= logn * logn;

  for (int i = 0; i < nr; ++i) {
    ProbabilityEstimate p;
    p.threshold = p.cutoff = opts.radii[i];
    p.estimate = jackknife(gs.groups, [&](int ex) { return gs.means(ex)[4 + i]; });
    p.estimate.n_samples = n;
    p.estimate.seed = seed;
    rep.small_ball.push_back(p);
  }
  for (int i = 0; i < nt; ++i) {
    ProbabilityEstimate p;
    p.threshold = opts.levels[i];
    p.cutoff = cutoffs[i];
    p.estimate = jackknife(gs.groups, [&](int ex) { return gs.means(ex)[4 + nr + i]; });
    p.estimate.n_samples = n;
    p.estimate.seed = seed;
    p.in_regime = g.is_torus() && p.threshold <= (1.0 + std::sqrt(static_cast<double>(rep.norm))) / (1.0 + logn);
    rep.tail.push_back(p);
  }

  // Maximum: median over all records, batch-jackknifed.
  rep.max_samples.reserve(n);
  for (int c = 0; c < table.chains; ++c)
    for (std::uint64_t s = 0; s < table.samples; ++s) rep.max_samples.push_back(table.value(c, s, 2));
  const int per_chain = static_cast<int>(std::min<std::uint64_t>(plan.batches, plan.samples));
  rep.max_median = jackknife(gs.groups, [&](int ex) {
    if (ex < 0) return median(rep.max_samples);
    const int c = ex / per_chain, b = ex % per_chain;
    const std::uint64_t lo = plan.samples * b / per_chain, hi = plan.samples * (b + 1) / per_chain;
    std::vector<double> keep;
    keep.reserve(rep.max_samples.size());
    for (std::size_t i = 0; i < rep.max_samples.size(); ++i) {
      const std::uint64_t s = i % plan.samples;
      if (static_cast<int>(i / plan.samples) == c && s >= lo && s < hi) continue;
      keep.push_back(rep.max_samples[i]);
    }
    return median(std::move(keep));
  });
  rep.max_median.n_samples = n;
  rep.max_median.seed = seed;
  rep.max_mean = gs.means()[2];
  for (int c = 0; c < table.chains; ++c)
    for (std::uint64_t s = 0; s < table.samples; ++s) rep.ceiling_violations += table.value(c, s, 4 + nr + nt) != 0.0;
  return rep;
}

inline SurveyReport estimate_variance(const Graph& g, const Potential& u, Vertex v, const ChainPlan& plan,
                                      std::uint64_t seed) {
  return survey_heights(g, u, v, plan, seed);
}

inline ProbabilityEstimate estimate_small_ball(const Graph& g, const Potential& u, Vertex v, double r,
                                               const ChainPlan& plan, std::uint64_t seed) {
  return survey_heights(g, u, v, plan, seed, {{r}, {}}).small_ball.front();
}

inline ProbabilityEstimate estimate_tail(const Graph& g, const Potential& u, Vertex v, double t, const ChainPlan& plan,
                                         std::uint64_t seed) {
  return survey_heights(g, u, v, plan, seed, {{}, {t}}).tail.front();
}

/// Median of max_w |phi_w|; the survey's target vertex is the far corner (or
/// the farthest vertex from the origin).
inline SurveyReport estimate_max(const Graph& g, const Potential& u, const ChainPlan& plan, std::uint64_t seed) {
  Vertex far = 0;
  for (Vertex w = 0; w < g.vertex_count(); ++w)
    if (g.distance(w, g.origin()) > g.distance(far, g.origin())) far = w;
  return survey_heights(g, u, far, plan, seed);
}

// ---------------------------------------------------------------------------
// Controlled gradients

using EdgeTuple = std::vector<Edge>;

namespace detail {

struct LatticeEdge {
  int x0, y0, x1, y1;  // unit step from (x0,y0) to (x1,y1), normalised so (x0,y0) < (x1,y1)
  auto operator<=>(const LatticeEdge&) const = default;
};

inline LatticeEdge lattice_edge(int x0, int y0, int x1, int y1) {
  if (std::tie(x1, y1) < std::tie(x0, y0)) return {x1, y1, x0, y0};
  return {x0, y0, x1, y1};
}

}  // namespace detail

/// Every connected set of k distinct edges, k = 1..k_max, up to translation,
/// placed near the origin of the torus.
inline std::vector<EdgeTuple> connected_edge_tuples(const Graph& g, int k_max) {
  if (!g.is_torus()) throw std::invalid_argument("connected_edge_tuples: requires a torus graph");
  using Shape = std::vector<detail::LatticeEdge>;
  auto normalise = [](Shape s) {
    int mx = 1 << 30, my = 1 << 30;
    for (const auto& e : s) {
      mx = std::min({mx, e.x0, e.x1});
      my = std::min({my, e.y0, e.y1});
    }
    for (auto& e : s) e = {e.x0 - mx, e.y0 - my, e.x1 - mx, e.y1 - my};
    std::sort(s.begin(), s.end());
    return s;
  };
  std::set<Shape> level{normalise({detail::lattice_edge(0, 0, 1, 0)}), normalise({detail::lattice_edge(0, 0, 0, 1)})};
  std::vector<Shape> all(level.begin(), level.end());
  for (int k = 2; k <= k_max; ++k) {
    std::set<Shape> next;
    for (const auto& s : level)
      for (const auto& e : s)
        for (auto [px, py] : {std::pair{e.x0, e.y0}, std::pair{e.x1, e.y1}})
          for (auto [dx, dy] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
            const auto f = detail::lattice_edge(px, py, px + dx, py + dy);
            if (std::find(s.begin(), s.end(), f) != s.end()) continue;
            Shape t = s;
            t.push_back(f);
            next.insert(normalise(t));
          }
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
  }
  std::vector<EdgeTuple> out;
  for (const auto& s : all) {
    EdgeTuple t;
    for (const auto& e : s) t.push_back(Edge::canonical(g.at({e.x0, e.y0}), g.at({e.x1, e.y1})));
    out.push_back(t);
  }
  return out;
}

struct TupleResult {
  EdgeTuple edges;
  EstimateWithError probability;  // P(all edges of the tuple are L-extremal)
  EstimateWithError ratio;        // probability / delta^k
  bool within_bound = true;       // ratio <= 1 + 3 std_error(ratio)
};

struct GradientsReport {
  double level = 0.0;
  EstimateWithError delta;  // max over single edges
  std::vector<TupleResult> tuples;
  bool all_within = true;
  int max_k = 0;
  double delta_needed = 0.0;  // max over tuples of P^(1/k): the smallest delta the point estimates allow
};

/// Estimates P(e_1, ..., e_k all have |gradient| >= level) for each tuple
/// (averaged over translates on the torus), delta = the largest single-edge
/// probability among the edges involved, and the ratios P / delta^k with
/// batch-jackknife errors (delta re-estimated in every replicate).
inline GradientsReport controlled_gradients_probe(const Graph& g, const Potential& u, double level,
                                                  const std::vector<EdgeTuple>& tuples, const ChainPlan& plan,
                                                  std::uint64_t seed, bool translate = true) {
  if (!(level > 0.0)) throw std::invalid_argument("controlled gradients: level must be > 0");
  for (const auto& t : tuples) {
    if (t.empty()) throw std::invalid_argument("controlled gradients: empty edge tuple");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!g.adjacent(t[i].a, t[i].b)) throw std::invalid_argument("controlled gradients: tuple edge not in graph");
      for (std::size_t j = 0; j < i; ++j)
        if (Edge::canonical(t[i].a, t[i].b) == Edge::canonical(t[j].a, t[j].b))
          throw std::invalid_argument("controlled gradients: edges within a tuple must be distinct");
    }
  }
  // Single edges come first in the column layout, then the tuples.
  std::vector<Edge> singles;
  for (const auto& t : tuples)
    for (const Edge& e : t) {
      const Edge c = Edge::canonical(e.a, e.b);
      if (std::find(singles.begin(), singles.end(), c) == singles.end()) singles.push_back(c);
    }
  std::vector<Vertex> shifts{g.origin()};
  if (translate && g.is_torus()) {
    shifts.resize(g.vertex_count());
    for (Vertex w = 0; w < g.vertex_count(); ++w) shifts[w] = w;
  }
  auto moved = [&](Vertex a, Vertex s) {
    if (s == g.origin()) return a;
    const Coord ca = g.coord(a), cs = g.coord(s);
    return g.at({ca.x + cs.x, ca.y + cs.y});
  };
  // Flattened translated edge endpoints: [column][shift][edge] -> (a, b).
  std::vector<std::vector<std::pair<Vertex, Vertex>>> cols;
  auto add_col = [&](const EdgeTuple& t) {
    std::vector<std::pair<Vertex, Vertex>> c;
    for (Vertex s : shifts)
      for (const Edge& e : t) c.push_back({moved(e.a, s), moved(e.b, s)});
    cols.push_back(std::move(c));
  };
  for (const Edge& e : singles) add_col({e});
  for (const auto& t : tuples) add_col(t);
  const int ns = static_cast<int>(shifts.size());

  const int width = static_cast<int>(cols.size());
  const int n_single = static_cast<int>(singles.size());
  std::vector<int> sizes(n_single, 1);
  for (const auto& t : tuples) sizes.push_back(static_cast<int>(t.size()));

  const auto table = sample_observables(g, u, plan, seed, width, [&](std::span<const double> h, std::span<double> out) {
    for (int j = 0; j < width; ++j) {
      const int k = sizes[j];
      const auto& c = cols[j];
      int hits = 0;
      for (int s = 0; s < ns; ++s) {
        bool all = true;
        for (int i = 0; i < k && all; ++i) {
          const auto [a, b] = c[s * k + i];
          all = std::abs(h[a] - h[b]) >= level;
        }
        hits += all;
      }
      out[j] = static_cast<double>(hits) / ns;
    }
  });

  const auto gs = GroupSums::from(table, plan.batches);
  const std::int64_t n = static_cast<std::int64_t>(plan.chains) * static_cast<std::int64_t>(plan.samples);
  auto delta_of = [&](const std::vector<double>& m) { return *std::max_element(m.begin(), m.begin() + n_single); };
  GradientsReport rep;
  rep.level = level;
  rep.delta = jackknife(gs.groups, [&](int ex) { return delta_of(gs.means(ex)); });
  rep.delta.n_samples = n;
  rep.delta.seed = seed;
  // Means per replicate, computed once.
  std::vector<std::vector<double>> reps(gs.groups + 1);
  reps[0] = gs.means();
  for (int gi = 0; gi < gs.groups; ++gi) reps[gi + 1] = gs.means(gi);
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    const int j = n_single + static_cast<int>(t);
    const int k = sizes[j];
    TupleResult tr;
    tr.edges = tuples[t];
    tr.probability = jackknife(gs.groups, [&](int ex) { return reps[ex + 1][j]; });
    tr.probability.n_samples = n;
    tr.probability.seed = seed;
    tr.ratio = jackknife(gs.groups, [&](int ex) {
      const auto& m = reps[ex + 1];
      const double d = delta_of(m);
      return d > 0.0 ? m[j] / std::pow(d, k) : 0.0;
    });
    tr.ratio.n_samples = n;
    tr.ratio.seed = seed;
    tr.within_bound = tr.probability.value <= std::pow(rep.delta.value, k) * (1.0 + 3.0 * tr.ratio.std_error);
    rep.all_within = rep.all_within && tr.within_bound;
    rep.max_k = std::max(rep.max_k, k);
    rep.delta_needed = std::max(rep.delta_needed, std::pow(tr.probability.value, 1.0 / k));
    rep.tuples.push_back(std::move(tr));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Block functions and the chessboard check

/// f(phi) = f0(phi at the corners of the unit square based at `base`, taken in
/// the order perm), with corners c0 = base, c1 = base + (1,0), c2 = base + (0,1),
/// c3 = base + (1,1). Values are clamped to [-bound, bound].
class BlockFunction {
 public:
  using Kernel = std::function<double(double, double, double, double)>;

  BlockFunction(std::string name, Kernel f0, double bound)
      : name_(std::move(name)), f0_(std::make_shared<Kernel>(std::move(f0))), bound_(bound) {
    if (!(bound > 0.0)) throw std::invalid_argument("block function: bound must be > 0");
  }

  static BlockFunction constant(double c) {
    return BlockFunction("constant", [c](double, double, double, double) { return c; }, std::max(1.0, std::abs(c)));
  }
  /// 1{|phi(1,0) - phi(0,0)| >= level}.
  static BlockFunction steep_horizontal(double level) {
    return BlockFunction(
        "steep_horizontal", [level](double a, double b, double, double) { return std::abs(b - a) >= level ? 1.0 : 0.0; },
        1.0);
  }
  /// 1{|phi(0,1) - phi(0,0)| >= level}.
  static BlockFunction steep_vertical(double level) {
    return BlockFunction(
        "steep_vertical", [level](double a, double, double c, double) { return std::abs(c - a) >= level ? 1.0 : 0.0; },
        1.0);
  }
  /// 1{|phi(1,0) - phi(0,0)| <= level}.
  static BlockFunction flat_horizontal(double level) {
    return BlockFunction(
        "flat_horizontal", [level](double a, double b, double, double) { return std::abs(b - a) <= level ? 1.0 : 0.0; },
        1.0);
  }

  const std::string& name() const { return name_; }
  Coord base() const { return base_; }
  const std::array<int, 4>& perm() const { return perm_; }
  double bound() const { return bound_; }

  std::array<Vertex, 4> corners(const Graph& g) const {
    return {g.at(base_), g.at({base_.x + 1, base_.y}), g.at({base_.x, base_.y + 1}), g.at({base_.x + 1, base_.y + 1})};
  }

  double operator()(const Graph& g, std::span<const double> phi) const {
    const auto c = corners(g);
    const double v = (*f0_)(phi[c[perm_[0]]], phi[c[perm_[1]]], phi[c[perm_[2]]], phi[c[perm_[3]]]);
    return std::clamp(v, -bound_, bound_);
  }

  /// The reflected block function theta_t f, based at base + t. Odd t.x swaps
  /// the square's columns and odd t.y its rows before f0 sees the corners.
  BlockFunction reflected(const Graph& g, Coord t) const {
    BlockFunction out = *this;
    const Coord nb = g.coord(g.at({base_.x + t.x, base_.y + t.y}));
    out.base_ = nb;
    const bool ox = (t.x % 2) != 0, oy = (t.y % 2) != 0;
    std::array<int, 4> sigma{0, 1, 2, 3};
    if (ox && oy) sigma = {3, 2, 1, 0};
    else if (ox) sigma = {1, 0, 3, 2};
    else if (oy) sigma = {2, 3, 0, 1};
    for (int i = 0; i < 4; ++i) out.perm_[i] = sigma[perm_[i]];
    return out;
  }

  /// Same function of phi (base and corner order match).
  bool same_block(const BlockFunction& o) const {
    return f0_ == o.f0_ && base_ == o.base_ && perm_ == o.perm_ && bound_ == o.bound_;
  }

 private:
  std::string name_;
  std::shared_ptr<Kernel> f0_;
  double bound_;
  Coord base_{0, 0};
  std::array<int, 4> perm_{0, 1, 2, 3};
};

/// Largest |f(phi + c) - f(phi)| over random corner values and offsets.
inline double gradient_invariance_defect(const Graph& g, const BlockFunction& f, std::uint64_t seed, int trials = 1000) {
  RandomStream rng(seed, 0);
  std::vector<double> phi(g.vertex_count()), shifted(g.vertex_count());
  double worst = 0.0;
  for (int i = 0; i < trials; ++i) {
    for (double& x : phi) x = rng.uniform(-3.0, 3.0);
    const double c = rng.uniform(-10.0, 10.0);
    for (std::size_t j = 0; j < phi.size(); ++j) shifted[j] = phi[j] + c;
    worst = std::max(worst, std::abs(f(g, shifted) - f(g, phi)));
  }
  return worst;
}

struct Band {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool binary = false;  // every sample was 0 or 1 (Wilson interval used)
};

/// Mean with a z-sigma band: Wilson for {0,1}-valued samples, otherwise mean
/// +- z standard errors over `groups` equal batches.
inline Band mean_band(std::span<const double> xs, double z, int groups) {
  Band b;
  Moments m;
  bool binary = true;
  for (double x : xs) {
    m.add(x);
    binary = binary && (x == 0.0 || x == 1.0);
  }
  b.value = m.mean;
  b.binary = binary;
  const double n = static_cast<double>(xs.size());
  if (binary) {
    const auto w = wilson_interval(m.mean * n, n, z);
    b.lo = w.lo;
    b.hi = w.hi;
    return b;
  }
  groups = std::max(2, std::min<int>(groups, static_cast<int>(xs.size())));
  std::vector<double> gm(groups, 0.0), gc(groups, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int gi = static_cast<int>(i * groups / xs.size());
    gm[gi] += xs[i];
    gc[gi] += 1.0;
  }
  const auto est = jackknife(groups, [&](int ex) {
    double s = 0.0, c = 0.0;
    for (int gi = 0; gi < groups; ++gi)
      if (gi != ex) s += gm[gi], c += gc[gi];
    return s / c;
  });
  b.lo = m.mean - z * est.std_error;
  b.hi = m.mean + z * est.std_error;
  return b;
}

struct ChessboardTerm {
  BlockFunction f;
  Coord t;
};

struct ChessboardReport {
  int volume = 0;                 // |V|
  Band lhs;                       // E prod_i theta_{t_i} f_i
  std::vector<Band> rhs_factors;  // E prod_{t in V} theta_t f_i
  double lhs_power = 0.0;         // |lhs|^|V|
  double rhs_product = 0.0;
  double lhs_power_lo = 0.0;      // (lower end of the |lhs| band)^|V|
  double rhs_product_hi = 0.0;    // product of the upper ends
  bool holds_point = false;
  bool holds_band = false;
  std::int64_t samples = 0;
};

/// |E prod_i theta_{t_i} f_i|^|V| against prod_i E prod_{t in V} theta_t f_i,
/// each expectation estimated from the same samples with a z-sigma band.
inline ChessboardReport chessboard_check(const Graph& g, const Potential& u, const std::vector<ChessboardTerm>& terms,
                                         const ChainPlan& plan, std::uint64_t seed, double z = 3.0) {
  if (!g.is_torus()) throw std::invalid_argument("chessboard_check: requires a torus graph");
  if (terms.empty()) throw std::invalid_argument("chessboard_check: need at least one block function");
  for (const auto& term : terms)
    if (term.f.base() != Coord{0, 0} || term.f.perm() != std::array<int, 4>{0, 1, 2, 3})
      throw std::invalid_argument("chessboard_check: block functions must be based at the origin");
  for (std::size_t i = 0; i < terms.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (g.at(terms[i].t) == g.at(terms[j].t)) throw std::invalid_argument("chessboard_check: translates must be distinct");

  const int nv = g.vertex_count();
  std::vector<BlockFunction> lhs_fs;
  for (const auto& term : terms) lhs_fs.push_back(term.f.reflected(g, term.t));
  std::vector<std::vector<BlockFunction>> homog(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i)
    for (Vertex w = 0; w < nv; ++w) homog[i].push_back(terms[i].f.reflected(g, g.coord(w)));

  const int width = 1 + static_cast<int>(terms.size());
  const auto table = sample_observables(g, u, plan, seed, width, [&](std::span<const double> h, std::span<double> out) {
    double p = 1.0;
    for (const auto& f : lhs_fs) p *= f(g, h);
    out[0] = p;
    for (std::size_t i = 0; i < homog.size(); ++i) {
      double q = 1.0;
      for (const auto& f : homog[i]) q *= f(g, h);
      out[1 + i] = q;
    }
  });

  ChessboardReport rep;
  rep.volume = nv;
  rep.samples = static_cast<std::int64_t>(plan.chains) * static_cast<std::int64_t>(plan.samples);
  const int groups = plan.chains * plan.batches;
  auto column = [&](int j) {
    std::vector<double> xs;
    xs.reserve(rep.samples);
    for (int c = 0; c < table.chains; ++c)
      for (std::uint64_t s = 0; s < table.samples; ++s) xs.push_back(table.value(c, s, j));
    return xs;
  };
  rep.lhs = mean_band(column(0), z, groups);
  const double abs_lhs = std::abs(rep.lhs.value);
  // Lower end of |E|: zero when the band straddles zero.
  const double abs_lo = rep.lhs.lo > 0.0 ? rep.lhs.lo : (rep.lhs.hi < 0.0 ? -rep.lhs.hi : 0.0);
  rep.lhs_power = std::pow(abs_lhs, nv);
  rep.lhs_power_lo = std::pow(abs_lo, nv);
  rep.rhs_product = 1.0;
  rep.rhs_product_hi = 1.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    rep.rhs_factors.push_back(mean_band(column(1 + static_cast<int>(i)), z, groups));
    rep.rhs_product *= rep.rhs_factors.back().value;
    rep.rhs_product_hi *= std::max(0.0, rep.rhs_factors.back().hi);
  }
  rep.holds_point = rep.lhs_power <= rep.rhs_product;
  rep.holds_band = rep.lhs_power_lo <= rep.rhs_product_hi;
  return rep;
}

// ---------------------------------------------------------------------------
// Shifted configurations

struct ShiftedConfigReport {
  Vertex u = 0;
  double a = 0.0;
  double s = 0.0;
  int capital_l = 0;
  std::int64_t samples = 0;
  EstimateWithError p_small;        // |phi_u| <= a
  EstimateWithError p_plus;         // |phi_u - tau(u)| <= a + eps/2
  EstimateWithError p_minus;        // |phi_u + tau(u)| <= a + eps/2
  EstimateWithError p_jacobian;     // J+ J- < s^2
  EstimateWithError p_big_m;        // M(phi) > L(tau, eps)
  EstimateWithError union_bound;    // sum_v 1{r(phi, v) >= L}, averaged
  EstimateWithError image_plus;     // |T+(phi)_u - tau(u)| <= a + eps/2
  EstimateWithError image_minus;    // |T-(phi)_u + tau(u)| <= a + eps/2
  double max_identity_gap = 0.0;    // max |T+-(phi) - phi| when tau = 0, else 0
  std::int64_t shift_bound_violations = 0;
  std::int64_t image_violations = 0;       // phi in E but an image misses its window
  std::int64_t union_bound_violations = 0; // samples with 1{M > L} > sum_v 1{r_v >= L}
};

/// Runs the addition algorithm on sampled configurations and records the
/// events entering the shifted-configuration comparison at vertex u.
inline ShiftedConfigReport shifted_config_experiment(const Potential& pot, const AdditionPlan& plan, Vertex u_vertex,
                                                     double a, double s, const ChainPlan& chains, std::uint64_t seed) {
  plan.require_zero_at_origin();
  const Graph& g = plan.graph();
  if (!(a >= 0.0) || !(s > 0.0)) throw std::invalid_argument("shifted configurations: need a >= 0 and s > 0");
  const TauPrimeTable table(plan);
  const int l = table.capital_l(plan.eps());
  const double eps = plan.eps();
  const double tu = plan.tau(u_vertex);
  const bool zero_tau = std::all_of(plan.tau().begin(), plan.tau().end(), [](double t) { return t == 0.0; });
  constexpr int kWidth = 12;
  const auto tab = sample_observables(g, pot, chains, seed, kWidth, [&](std::span<const double> h, std::span<double> out) {
    const Configuration phi{std::vector<double>(h.begin(), h.end()), {{g.origin(), 0.0}}};
    const auto tr = run_addition(plan, phi);
    const auto up = apply_shifts(phi, tr, +1.0);
    const auto down = apply_shifts(phi, tr, -1.0);
    const auto cm = extremal_metrics(plan, phi);
    const auto sb = shift_bounds_check(plan, phi, tr, table);
    const double pu = phi[u_vertex];
    out[0] = std::abs(pu) <= a;
    out[1] = std::abs(pu - tu) <= a + eps / 2.0;
    out[2] = std::abs(pu + tu) <= a + eps / 2.0;
    out[3] = tr.log_j_plus + tr.log_j_minus < 2.0 * std::log(s);
    out[4] = cm.big_m > l;
    int count_r = 0;
    for (int r : cm.r) count_r += r >= l;
    out[5] = count_r;
    out[6] = std::abs(up[u_vertex] - tu) <= a + eps / 2.0;
    out[7] = std::abs(down[u_vertex] + tu) <= a + eps / 2.0;
    double gap = 0.0;
    if (zero_tau)
      for (Vertex v = 0; v < g.vertex_count(); ++v) gap = std::max({gap, std::abs(up[v] - h[v]), std::abs(down[v] - h[v])});
    out[8] = gap;
    out[9] = sb.violations();
    const bool in_e = out[0] != 0.0 && cm.big_m <= l;
    out[10] = in_e && (out[6] == 0.0 || out[7] == 0.0);
    out[11] = out[4] > count_r;
  });
  const auto gs = GroupSums::from(tab, chains.batches);
  ShiftedConfigReport rep;
  rep.u = u_vertex;
  rep.a = a;
  rep.s = s;
  rep.capital_l = l;
  rep.samples = static_cast<std::int64_t>(chains.chains) * static_cast<std::int64_t>(chains.samples);
  auto est = [&](int j) {
    auto e = jackknife(gs.groups, [&](int ex) { return gs.means(ex)[j]; });
    e.n_samples = rep.samples;
    e.seed = seed;
    return e;
  };
  rep.p_small = est(0);
  rep.p_plus = est(1);
  rep.p_minus = est(2);
  rep.p_jacobian = est(3);
  rep.p_big_m = est(4);
  rep.union_bound = est(5);
  rep.image_plus = est(6);
  rep.image_minus = est(7);
  for (int c = 0; c < tab.chains; ++c)
    for (std::uint64_t i = 0; i < tab.samples; ++i) {
      rep.max_identity_gap = std::max(rep.max_identity_gap, tab.value(c, i, 8));
      rep.shift_bound_violations += static_cast<std::int64_t>(tab.value(c, i, 9));
      rep.image_violations += static_cast<std::int64_t>(tab.value(c, i, 10));
      rep.union_bound_violations += static_cast<std::int64_t>(tab.value(c, i, 11));
    }
  return rep;
}

}  // namespace surfshift

#endif

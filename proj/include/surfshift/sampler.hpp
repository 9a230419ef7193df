// Single-site dynamics for mu_{G,0,U} and exact sampling for the hammock.
#ifndef SURFSHIFT_SAMPLER_HPP
#define SURFSHIFT_SAMPLER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "addition.hpp"
#include "graph.hpp"
#include "potential.hpp"
#include "rng.hpp"

namespace surfshift {

/// A configuration violating a hard-core constraint.
class InfeasibleState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CFTP did not coalesce within the configured number of epochs.
class EpochCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool empty() const { return lo > hi; }
  double length() const { return hi - lo; }
};

/// Where phi_v may move given its neighbours: the intersection of
/// [phi_w - K, phi_w + K] over w ~ v, or the whole line when K is infinite.
inline Interval conditional_support(const Graph& g, const Potential& u, std::span<const double> phi, Vertex v) {
  Interval out;
  if (!u.bounded_support()) return out;
  const double k = u.radius();
  for (Vertex w : g.neighbors(v)) {
    out.lo = std::max(out.lo, phi[w] - k);
    out.hi = std::min(out.hi, phi[w] + k);
  }
  if (out.empty() || (!u.closed_endpoints() && out.lo == out.hi))
    throw InfeasibleState("vertex " + std::to_string(v) + " has no admissible height (hard-core constraint violated)");
  return out;
}

/// Largest U over the edges; +inf means infeasible.
inline double max_edge_energy(const Graph& g, const Potential& u, std::span<const double> phi) {
  double m = -kInf;
  for (const Edge& e : g.edges()) m = std::max(m, u(phi[e.a] - phi[e.b]));
  return m;
}

inline bool is_feasible(const Graph& g, const Potential& u, std::span<const double> phi) {
  for (const Edge& e : g.edges())
    if (!u.finite_at(phi[e.a] - phi[e.b])) return false;
  return true;
}

struct SweepOptions {
  bool random_scan = false;
  int overrelax = 0;            // reflection sweeps after each heat-bath sweep (hammock, quadratic)
  int max_rejections = 1000000;  // per draw, for rejection samplers
};

namespace detail {

inline double neighbour_mean(const Graph& g, std::span<const double> phi, Vertex v) {
  double s = 0.0;
  for (Vertex w : g.neighbors(v)) s += phi[w];
  return s / g.degree(v);
}

inline double energy_at(const Graph& g, const Potential& u, std::span<const double> phi, Vertex v, double x) {
  double e = 0.0;
  for (Vertex w : g.neighbors(v)) e += u(x - phi[w]);
  return e;
}

}  // namespace detail

/// Draws phi_v from its exact single-site conditional, density proportional to
/// exp(-sum_{w~v} U(x - phi_w)).
inline double sample_conditional(const Graph& g, const Potential& u, std::span<const double> phi, Vertex v,
                                 RandomStream& rng, int max_rejections = 1000000) {
  const int deg = g.degree(v);
  switch (u.kind()) {
    case PotentialKind::hammock: {
      const Interval iv = conditional_support(g, u, phi, v);
      return iv.lo + rng.uniform() * iv.length();
    }
    case PotentialKind::quadratic: {
      const double sd = std::sqrt(1.0 / (2.0 * u.a() * deg));
      return detail::neighbour_mean(g, phi, v) + sd * rng.normal();
    }
    case PotentialKind::smooth_interval:
    case PotentialKind::custom: {
      // Uniform envelope on the support, bounded by exp(-deg inf U).
      const Interval iv = conditional_support(g, u, phi, v);
      const double floor = deg * u.inf_u();
      for (int i = 0; i < max_rejections; ++i) {
        const double x = iv.lo + rng.uniform() * iv.length();
        const double e = detail::energy_at(g, u, phi, v, x);
        if (std::isfinite(e) && rng.uniform() < std::exp(floor - e)) return x;
      }
      break;
    }
    case PotentialKind::double_well:
    case PotentialKind::smooth_line: {
      // Gaussian envelope from U(y) >= c y^2 - C.
      const double c = u.envelope_curvature();
      const double big_c = u.envelope_offset();
      const double mean = detail::neighbour_mean(g, phi, v);
      const double sd = std::sqrt(1.0 / (2.0 * c * deg));
      for (int i = 0; i < max_rejections; ++i) {
        const double x = mean + sd * rng.normal();
        double excess = 0.0;
        for (Vertex w : g.neighbors(v)) {
          const double y = x - phi[w];
          excess += u(y) - c * y * y + big_c;
        }
        if (rng.uniform() < std::exp(-excess)) return x;
      }
      break;
    }
  }
  throw std::runtime_error("single-site sampler: acceptance rate below floor for potential " + u.name());
}

/// The origin-pinned chain on one graph: heights plus its private random stream.
class SurfaceChain {
 public:
  SurfaceChain(const Graph& g, const Potential& u, std::uint64_t seed, std::uint64_t chain = 0,
               SweepOptions opts = {})
      : g_(&g), u_(u), rng_(seed, chain), opts_(opts), heights_(initial_heights(g, u)) {}

  SurfaceChain(const Graph& g, const Potential& u, std::vector<double> start, std::uint64_t seed,
               std::uint64_t chain = 0, SweepOptions opts = {})
      : g_(&g), u_(u), rng_(seed, chain), opts_(opts), heights_(std::move(start)) {
    if (static_cast<int>(heights_.size()) != g.vertex_count())
      throw std::invalid_argument("SurfaceChain: start configuration has the wrong size");
    if (heights_[g.origin()] != 0.0) throw std::invalid_argument("SurfaceChain: start must vanish at the origin");
    if (!is_feasible(g, u, heights_)) throw InfeasibleState("SurfaceChain: start configuration is infeasible");
  }

  /// Zeros when U(0) is finite; otherwise 0 on the origin's side of a
  /// bipartition and a on the other, for some a with U(a) finite.
  static std::vector<double> initial_heights(const Graph& g, const Potential& u) {
    std::vector<double> h(g.vertex_count(), 0.0);
    if (u.finite_at(0.0)) return h;
    const auto colours = g.bipartition();
    if (!colours) throw std::runtime_error("no feasible initialization: U(0) is infinite and the graph is not bipartite");
    double a = -1.0;
    const double reach = u.bounded_support() ? u.radius() : 1.0;
    for (int j = 1; j <= 4096 && a < 0.0; ++j)
      if (u.finite_at(reach * j / 4096.0)) a = reach * j / 4096.0;
    if (a < 0.0) throw std::runtime_error("no feasible initialization: found no a with U(a) finite");
    const int origin_colour = (*colours)[g.origin()];
    for (Vertex v = 0; v < g.vertex_count(); ++v) h[v] = (*colours)[v] == origin_colour ? 0.0 : a;
    return h;
  }

  void heat_bath_step(Vertex v) {
    if (v == g_->origin()) throw std::invalid_argument("heat_bath_step: vertex " + std::to_string(v) + " is pinned");
    heights_[v] = sample_conditional(*g_, u_, heights_, v, rng_, opts_.max_rejections);
  }

  /// x -> (mirror point) - x; leaves the conditional law invariant.
  void reflect_step(Vertex v) {
    if (u_.kind() == PotentialKind::hammock) {
      const Interval iv = conditional_support(*g_, u_, heights_, v);
      heights_[v] = iv.lo + iv.hi - heights_[v];
    } else if (u_.kind() == PotentialKind::quadratic) {
      heights_[v] = 2.0 * detail::neighbour_mean(*g_, heights_, v) - heights_[v];
    }
  }

  void sweep() {
    const int n = g_->vertex_count();
    const Vertex pin = g_->origin();
    if (opts_.random_scan) {
      for (int i = 0; i < n - 1; ++i) {
        Vertex v = static_cast<Vertex>(rng_.uniform() * n);
        if (v >= n) v = n - 1;
        if (v != pin) heat_bath_step(v);
      }
    } else {
      for (Vertex v = 0; v < n; ++v)
        if (v != pin) heat_bath_step(v);
    }
    for (int r = 0; r < opts_.overrelax; ++r)
      for (Vertex v = 0; v < n; ++v)
        if (v != pin) reflect_step(v);
    ++sweeps_done_;
  }

  void run(std::uint64_t sweeps) {
    for (std::uint64_t i = 0; i < sweeps; ++i) sweep();
  }

  const std::vector<double>& heights() const { return heights_; }
  std::vector<double>& heights() { return heights_; }
  Configuration configuration() const { return Configuration{heights_, {{g_->origin(), 0.0}}}; }
  std::uint64_t sweeps_done() const { return sweeps_done_; }
  const Graph& graph() const { return *g_; }
  const Potential& potential() const { return u_; }

 private:
  const Graph* g_;
  Potential u_;
  RandomStream rng_;
  SweepOptions opts_;
  std::vector<double> heights_;
  std::uint64_t sweeps_done_ = 0;
};

/// Systematic-scan heat bath from the default start.
inline Configuration sample_surface(const Graph& g, const Potential& u, std::uint64_t sweeps, std::uint64_t seed,
                                    std::uint64_t chain = 0, SweepOptions opts = {}) {
  if (sweeps < 1) throw std::invalid_argument("sample_surface: sweeps must be >= 1");
  SurfaceChain c(g, u, seed, chain, opts);
  c.run(sweeps);
  return c.configuration();
}

struct CftpOptions {
  int max_epochs = 40;   // start times -1, -2, -4, ..., -2^(max_epochs-1)
  int proposals = 32;    // shared uniform proposals per (time, site) before the quantile fallback
  std::uint64_t chain = 0;
};

struct CftpResult {
  Configuration config;
  int epochs = 0;
  std::uint64_t start_time = 0;  // coalesced when started from time -start_time
};

/// Monotone coupled update for the hammock. Proposals Y_j, uniform on the
/// widest possible range R_v = [-K d(v,0), K d(v,0)], are shared by all chains;
/// each takes the first one inside its own interval, falling back to the
/// quantile lo + u (hi - lo). The result is uniform on the interval and
/// nondecreasing in (lo, hi), so ordered chains stay ordered and chains whose
/// intervals both contain the same first proposal merge.
///
/// Proposal j comes from half j % 2 of the Philox block (time, v, j / 2); the
/// fallback uniform from block (time, v, kFallbackBlock).
inline constexpr std::uint32_t kFallbackBlock = 0x80000000u;

/// Draws for several chains at once from the same proposals.
template <std::size_t N>
std::array<double, N> coupled_hammock_draws(const std::array<Interval, N>& ivs, double reach,
                                            const Philox4x32::Key& key, std::uint64_t time, Vertex v, int proposals) {
  std::array<double, N> out{};
  std::array<bool, N> done{};
  std::size_t left = N;
  const auto site = static_cast<std::uint32_t>(v);
  for (int j = 0; j < proposals && left > 0; j += 2) {
    const auto us = counter_uniform_pair(key, time, site, static_cast<std::uint32_t>(j / 2));
    for (int h = 0; h < 2 && j + h < proposals; ++h) {
      const double y = -reach + 2.0 * reach * us[h];
      for (std::size_t i = 0; i < N; ++i)
        if (!done[i] && y >= ivs[i].lo && y <= ivs[i].hi) {
          out[i] = y;
          done[i] = true;
          --left;
        }
    }
  }
  if (left > 0) {
    const double u = counter_uniform(key, time, site, kFallbackBlock);
    for (std::size_t i = 0; i < N; ++i)
      if (!done[i]) out[i] = ivs[i].lo + u * ivs[i].length();
  }
  return out;
}

inline double coupled_hammock_draw(const Interval& iv, double reach, const Philox4x32::Key& key, std::uint64_t time,
                                   Vertex v, int proposals) {
  return coupled_hammock_draws<1>({iv}, reach, key, time, v, proposals)[0];
}

/// Coupling from the past for the hammock: bounding chains +-K d(v,0) run from
/// -T to 0 with randomness indexed by absolute time, T doubling until they meet.
inline CftpResult cftp_hammock(const Graph& g, double k, std::uint64_t seed, CftpOptions opts = {}) {
  const Potential u = Potential::hammock(k);
  const int n = g.vertex_count();
  const Vertex pin = g.origin();
  const auto key = stream_key(seed, opts.chain);
  std::vector<double> reach(n);
  for (Vertex v = 0; v < n; ++v) reach[v] = k * g.distance(v, pin);

  std::vector<double> top(n), bottom(n);
  std::uint64_t t_start = 1;
  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch, t_start *= 2) {
    top = reach;
    for (Vertex v = 0; v < n; ++v) bottom[v] = -reach[v];
    for (std::uint64_t t = t_start; t >= 1; --t) {
      for (Vertex v = 0; v < n; ++v) {
        if (v == pin) continue;
        const auto d = coupled_hammock_draws<2>({conditional_support(g, u, top, v), conditional_support(g, u, bottom, v)},
                                                reach[v], key, t, v, opts.proposals);
        top[v] = d[0];
        bottom[v] = d[1];
      }
    }
    if (top == bottom) return {Configuration{top, {{pin, 0.0}}}, epoch, t_start};
  }
  throw EpochCapExceeded("cftp_hammock: no coalescence after " + std::to_string(opts.max_epochs) + " epochs");
}

}  // namespace surfshift

#endif

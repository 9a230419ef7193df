// Randomized property campaign for the addition algorithm: random graphs,
// requested shifts and configurations, every checkable property per instance.
#ifndef SURFSHIFT_CAMPAIGN_HPP
#define SURFSHIFT_CAMPAIGN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "addition.hpp"
#include "graph.hpp"
#include "potential.hpp"
#include "rng.hpp"
#include "tau.hpp"

namespace surfshift {

namespace detail {

inline int uniform_int(RandomStream& rng, int lo, int hi) {
  const int span = hi - lo + 1;
  return lo + std::min(span - 1, static_cast<int>(rng.uniform() * span));
}

inline std::vector<int> bfs_distances(const Graph& g, Vertex s) {
  std::vector<int> d(g.vertex_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v) d[v] = g.distance(s, v);
  return d;
}

}  // namespace detail

inline Graph random_connected_graph(RandomStream& rng, int n, int extra) {
  std::vector<Edge> edges;
  std::vector<char> have(static_cast<std::size_t>(n) * n, 0);
  auto mark = [&](int a, int b) { have[a * n + b] = have[b * n + a] = 1; };
  for (int v = 1; v < n; ++v) {
    const int u = detail::uniform_int(rng, 0, v - 1);
    edges.push_back({u, v});
    mark(u, v);
  }
  for (int i = 0; i < extra; ++i) {
    const int a = detail::uniform_int(rng, 0, n - 1);
    const int b = detail::uniform_int(rng, 0, n - 1);
    if (a == b || have[a * n + b]) continue;
    mark(a, b);
    edges.push_back({a, b});
  }
  return Graph::from_edges(n, edges);
}

struct CampaignInstance {
  AdditionPlan plan;
  Configuration phi;
  std::string label;
};

/// One random instance. Graphs: torus(2..6) or a connected graph on <= 40
/// vertices (or the given graph). tau: constant, tau_log, eta (random target)
/// or iid, scaled by one of {0.02, 0.2, 1, 10} and capped at 10. phi: uniform
/// on [-3,3]^V, or a min of +-distance functions (gradients exactly 1 on many
/// edges), possibly scaled down.
inline CampaignInstance random_campaign_instance(RandomStream& rng, const std::optional<Graph>& fixed = {}) {
  Graph g = fixed ? *fixed
                  : (rng.uniform() < 0.6 ? Graph::torus(detail::uniform_int(rng, 2, 6))
                                         : [&] {
                                             const int n = detail::uniform_int(rng, 2, 40);
                                             return random_connected_graph(rng, n, detail::uniform_int(rng, 0, 2 * n));
                                           }());
  const int nv = g.vertex_count();

  const double scales[] = {0.02, 0.2, 1.0, 10.0};
  const double scale = scales[detail::uniform_int(rng, 0, 3)];
  int pick = detail::uniform_int(rng, 0, 3);
  if (!g.is_torus() && (pick == 1 || pick == 2)) pick = 3;
  std::vector<double> tau(nv);
  std::string tau_kind;
  switch (pick) {
    case 0:
      tau_kind = "constant";
      std::fill(tau.begin(), tau.end(), scale * rng.uniform());
      break;
    case 1:
      tau_kind = "tau_log";
      tau = tau_log_field(g);
      break;
    case 2:
      tau_kind = "eta";
      tau = EtaProfile(g, detail::uniform_int(rng, 0, nv - 1)).field();
      break;
    default:
      tau_kind = "random";
      for (double& t : tau) t = scale * rng.uniform();
      break;
  }
  if (pick == 1 || pick == 2)
    for (double& t : tau) t *= scale;
  for (double& t : tau) t = std::min(t, 10.0);

  std::vector<double> phi(nv);
  std::string phi_kind;
  if (rng.uniform() < 0.4) {
    phi_kind = "uniform";
    for (double& x : phi) x = rng.uniform(-3.0, 3.0);
  } else {
    phi_kind = "lipschitz";
    std::fill(phi.begin(), phi.end(), kInf);
    const int m = detail::uniform_int(rng, 1, 4);
    for (int j = 0; j < m; ++j) {
      const auto d = detail::bfs_distances(g, detail::uniform_int(rng, 0, nv - 1));
      const double c = detail::uniform_int(rng, -16, 16) / 8.0;
      const double sign = j % 2 ? -1.0 : 1.0;
      for (Vertex v = 0; v < nv; ++v) phi[v] = std::min(phi[v], sign * d[v] + c);
    }
    if (rng.uniform() < 0.5) {
      const double lambda = rng.uniform(0.1, 1.0);
      for (double& x : phi) x *= lambda;
      phi_kind = "lipschitz-scaled";
    }
  }
  const double epss[] = {0.1, 0.25, 0.5};
  const double eps = epss[detail::uniform_int(rng, 0, 2)];
  std::string label = (g.is_torus() ? "torus(" + std::to_string(g.side()) + ")"
                                    : "graph(" + std::to_string(nv) + ")") +
                      " tau=" + tau_kind + " phi=" + phi_kind + " eps=" + std::to_string(eps);
  return {AdditionPlan(std::move(g), std::move(tau), eps), Configuration{std::move(phi), {}}, std::move(label)};
}

/// Violation counts for one instance; all zero means every property held.
struct InstanceCheck {
  int round_trip = 0;      // |T+^-1(T+ phi) - phi| > 1e-9
  int surjectivity = 0;    // |T+(T+^-1 phi) - phi| > 1e-9
  int increment = 0;       // shift outside [0, tau]
  int lipschitz = 0;       // gradient >= 1 moved, or gradient < 1 pushed to >= 1
  int monotone = 0;        // shifts decrease along the processing order
  int mirror = 0;          // T-(phi) != -T+(-phi)
  int shift_bounds = 0;    // upper and (under M <= L) lower shift bounds
  int jacobian_bound = 0;  // geometric-mean Jacobian bound under M <= L
  bool applicable = false;
  double round_trip_error = 0.0;

  int total() const {
    return round_trip + surjectivity + increment + lipschitz + monotone + mirror + shift_bounds + jacobian_bound;
  }
};

inline double sup_distance(const Configuration& a, const Configuration& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline InstanceCheck check_addition_instance(const AdditionPlan& plan, const Configuration& phi,
                                             double slack = 1e-12) {
  InstanceCheck c;
  const Graph& g = plan.graph();
  const auto tr = run_addition(plan, phi);
  const auto up = apply_shifts(phi, tr, +1.0);
  const auto down = apply_shifts(phi, tr, -1.0);

  c.round_trip_error = sup_distance(run_inverse(plan, up), phi);
  c.round_trip = c.round_trip_error > 1e-9;
  c.surjectivity = sup_distance(t_plus(plan, run_inverse(plan, phi)), phi) > 1e-9;

  for (std::size_t k = 1; k < tr.shifts.size(); ++k)
    if (tr.shifts[k] < tr.shifts[k - 1]) ++c.monotone;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    const double inc = up[v] - phi[v];
    if (inc < -slack || inc > plan.tau(v) + slack) ++c.increment;
  }
  for (const Edge& e : g.edges()) {
    const double before = phi[e.a] - phi[e.b];
    const double after_up = up[e.a] - up[e.b];
    const double after_down = down[e.a] - down[e.b];
    if (std::abs(before) >= 1.0) {
      if (std::abs(after_up - before) > slack || std::abs(after_down - before) > slack) ++c.lipschitz;
    } else if (std::abs(after_up) >= 1.0 || std::abs(after_down) >= 1.0) {
      ++c.lipschitz;
    }
  }
  const auto mirrored = t_plus(plan, phi.negated());
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (std::abs(down[v] + mirrored[v]) > slack) ++c.mirror;

  const TauPrimeTable table(plan);
  const auto sb = shift_bounds_check(plan, phi, tr, table, slack);
  c.applicable = sb.applicable;
  c.shift_bounds = sb.violations();
  c.jacobian_bound = !jacobian_bound_check(plan, phi, tr, table, slack).holds;
  return c;
}

struct CampaignReport {
  int instances = 0;
  int applicable = 0;
  int failing_instances = 0;
  InstanceCheck totals;
  double max_round_trip_error = 0.0;
  std::vector<std::string> failures;  // labels of the first few failing instances
};

/// Runs `count` random instances drawn from stream (seed, 0). With a fixed
/// graph every instance uses it.
inline CampaignReport verify_addition_campaign(int count, std::uint64_t seed, const std::optional<Graph>& fixed = {}) {
  RandomStream rng(seed, 0);
  CampaignReport rep;
  for (int i = 0; i < count; ++i) {
    const auto inst = random_campaign_instance(rng, fixed);
    const auto c = check_addition_instance(inst.plan, inst.phi);
    ++rep.instances;
    rep.applicable += c.applicable;
    rep.max_round_trip_error = std::max(rep.max_round_trip_error, c.round_trip_error);
    rep.totals.round_trip += c.round_trip;
    rep.totals.surjectivity += c.surjectivity;
    rep.totals.increment += c.increment;
    rep.totals.lipschitz += c.lipschitz;
    rep.totals.monotone += c.monotone;
    rep.totals.mirror += c.mirror;
    rep.totals.shift_bounds += c.shift_bounds;
    rep.totals.jacobian_bound += c.jacobian_bound;
    if (c.total() > 0) {
      ++rep.failing_instances;
      if (rep.failures.size() < 10) rep.failures.push_back(std::to_string(i) + ": " + inst.label);
    }
  }
  return rep;
}

}  // namespace surfshift

#endif

#ifndef SURFSHIFT_ADDITION_HPP
#define SURFSHIFT_ADDITION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "pwl.hpp"

namespace surfshift {

struct Pin {
  Vertex v = 0;
  double value = 0.0;
  friend bool operator==(const Pin&, const Pin&) = default;
};

/// Vertex heights plus the set of vertices held at fixed values.
struct Configuration {
  std::vector<double> heights;
  std::vector<Pin> pins;

  double operator[](Vertex v) const { return heights[v]; }
  std::size_t size() const { return heights.size(); }

  bool pins_respected() const {
    return std::all_of(pins.begin(), pins.end(), [&](const Pin& p) { return heights[p.v] == p.value; });
  }

  Configuration negated() const {
    Configuration out{heights, pins};
    for (double& h : out.heights) h = -h;
    for (Pin& p : out.pins) p.value = -p.value;
    return out;
  }
};

/// Graph, requested shifts tau >= 0, eps in (0, 1/2] and a total order on the
/// vertices used for breaking ties (default: ascending id).
class AdditionPlan {
 public:
  AdditionPlan(Graph graph, std::vector<double> tau, double eps, std::vector<Vertex> order = {})
      : graph_(std::move(graph)), tau_(std::move(tau)), eps_(eps) {
    check_eps(eps_);
    const int n = graph_.vertex_count();
    if (static_cast<int>(tau_.size()) != n)
      throw std::invalid_argument("AdditionPlan: tau has " + std::to_string(tau_.size()) + " entries, graph has " +
                                  std::to_string(n) + " vertices");
    for (double t : tau_)
      if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("AdditionPlan: tau must be finite and >= 0");
    rank_.resize(n);
    if (order.empty()) {
      std::iota(rank_.begin(), rank_.end(), 0);
    } else {
      if (static_cast<int>(order.size()) != n) throw std::invalid_argument("AdditionPlan: order is not a permutation");
      std::vector<int> seen(n, 0);
      for (int i = 0; i < n; ++i) {
        const Vertex v = order[i];
        if (v < 0 || v >= n || seen[v]++) throw std::invalid_argument("AdditionPlan: order is not a permutation");
        rank_[v] = i;
      }
    }
  }

  const Graph& graph() const { return graph_; }
  const std::vector<double>& tau() const { return tau_; }
  double tau(Vertex v) const { return tau_[v]; }
  double eps() const { return eps_; }
  int rank(Vertex v) const { return rank_[v]; }

  /// Delocalization experiments need tau to vanish at the pinned vertex.
  void require_zero_at_origin() const {
    if (tau_[graph_.origin()] != 0.0) throw std::invalid_argument("AdditionPlan: tau(origin) must be 0");
  }

 private:
  Graph graph_;
  std::vector<double> tau_;
  double eps_;
  std::vector<int> rank_;
};

/// Full record of one forward run.
struct AdditionTranscript {
  std::vector<Vertex> p_order;
  std::vector<double> shifts;
  std::vector<double> step_right_derivs;
  double j_plus = 1.0;
  double j_minus = 1.0;
  double log_j_plus = 0.0;
  double log_j_minus = 0.0;

  /// Shift received by each vertex, indexed by vertex id.
  std::vector<double> shift_by_vertex() const {
    std::vector<double> out(p_order.size(), 0.0);
    for (std::size_t k = 0; k < p_order.size(); ++k) out[p_order[k]] = shifts[k];
    return out;
  }
};

namespace detail {

struct QueueEntry {
  double key;
  int rank;
  Vertex v;
  bool operator>(const QueueEntry& o) const { return key != o.key ? key > o.key : rank > o.rank; }
};

using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

inline void check_sizes(const AdditionPlan& plan, const Configuration& phi) {
  if (static_cast<int>(phi.size()) != plan.graph().vertex_count())
    throw std::invalid_argument("configuration size does not match the plan's graph");
}

}  // namespace detail

/// Runs the addition loop: repeatedly process the unprocessed vertex with the
/// smallest current requested shift tau_k(v, phi_v) (ties by plan order), give it
/// that shift, and cap the requested shifts of its unprocessed neighbours by the
/// bump m centred at its height with floor equal to its shift.
inline AdditionTranscript run_addition(const AdditionPlan& plan, const Configuration& phi) {
  detail::check_sizes(plan, phi);
  const Graph& g = plan.graph();
  const int n = g.vertex_count();
  const double eps = plan.eps();

  std::vector<PwlFunction> req;
  req.reserve(n);
  std::vector<double> cur(n);
  std::vector<char> done(n, 0);
  detail::MinQueue queue;
  for (Vertex v = 0; v < n; ++v) {
    req.push_back(PwlFunction::constant(plan.tau(v)));
    cur[v] = plan.tau(v);
    queue.push({cur[v], plan.rank(v), v});
  }

  AdditionTranscript tr;
  tr.p_order.reserve(n);
  tr.shifts.reserve(n);
  tr.step_right_derivs.reserve(n);
  for (int k = 0; k < n; ++k) {
    detail::QueueEntry top = queue.top();
    queue.pop();
    while (done[top.v] || top.key != cur[top.v]) {
      top = queue.top();
      queue.pop();
    }
    const Vertex p = top.v;
    const double s = cur[p];
    const double h = phi[p];
    const double d = req[p].right_deriv(h);
    done[p] = 1;
    tr.p_order.push_back(p);
    tr.shifts.push_back(s);
    tr.step_right_derivs.push_back(d);
    tr.log_j_plus += std::log1p(d);
    tr.log_j_minus += std::log1p(-d);

    for (Vertex w : g.neighbors(p)) {
      if (done[w]) continue;
      // m is the constant s whenever tau(w) <= s, which never lowers req[w] <= tau(w).
      if (!(plan.tau(w) > s)) continue;
      req[w] = min_with(req[w], make_m({plan.tau(w), h, s, eps}));
      const double val = req[w].eval(phi[w]);
      if (val != cur[w]) {
        cur[w] = val;
        queue.push({val, plan.rank(w), w});
      }
    }
  }
  tr.j_plus = std::exp(tr.log_j_plus);
  tr.j_minus = std::exp(tr.log_j_minus);
  return tr;
}

/// phi with each vertex raised by its shift.
inline Configuration apply_shifts(const Configuration& phi, const AdditionTranscript& tr, double sign) {
  Configuration out = phi;
  for (std::size_t k = 0; k < tr.p_order.size(); ++k) out.heights[tr.p_order[k]] += sign * tr.shifts[k];
  return out;
}

inline Configuration t_plus(const AdditionPlan& plan, const Configuration& phi) {
  return apply_shifts(phi, run_addition(plan, phi), +1.0);
}

/// 2 phi - T+(phi), i.e. each vertex lowered by its forward shift.
inline Configuration t_minus(const AdditionPlan& plan, const Configuration& phi) {
  return apply_shifts(phi, run_addition(plan, phi), -1.0);
}

struct InverseTranscript {
  std::vector<Vertex> p_order;
  std::vector<double> shifts;
};

/// Inverse loop: the key of v is tau~_k(v, D_k(v, phi~_v)) where D_k inverts
/// h -> h + tau~_k(v, h); the selected vertex is lowered by its key.
inline Configuration run_inverse(const AdditionPlan& plan, const Configuration& phi_tilde,
                                 InverseTranscript* trace = nullptr) {
  detail::check_sizes(plan, phi_tilde);
  const Graph& g = plan.graph();
  const int n = g.vertex_count();
  const double eps = plan.eps();

  std::vector<PwlFunction> req;
  req.reserve(n);
  std::vector<double> cur(n);
  std::vector<char> done(n, 0);
  detail::MinQueue queue;
  auto key_of = [&](Vertex v) { return req[v].eval(invert_shifted(req[v], phi_tilde[v])); };
  for (Vertex v = 0; v < n; ++v) {
    req.push_back(PwlFunction::constant(plan.tau(v)));
    cur[v] = key_of(v);
    queue.push({cur[v], plan.rank(v), v});
  }

  Configuration out = phi_tilde;
  if (trace) {
    trace->p_order.clear();
    trace->shifts.clear();
  }
  for (int k = 0; k < n; ++k) {
    detail::QueueEntry top = queue.top();
    queue.pop();
    while (done[top.v] || top.key != cur[top.v]) {
      top = queue.top();
      queue.pop();
    }
    const Vertex p = top.v;
    const double s = cur[p];
    const double h = phi_tilde[p] - s;
    out.heights[p] = h;
    done[p] = 1;
    if (trace) {
      trace->p_order.push_back(p);
      trace->shifts.push_back(s);
    }
    for (Vertex w : g.neighbors(p)) {
      if (done[w]) continue;
      if (!(plan.tau(w) > s)) continue;
      req[w] = min_with(req[w], make_m({plan.tau(w), h, s, eps}));
      const double val = key_of(w);
      if (val != cur[w]) {
        cur[w] = val;
        queue.push({val, plan.rank(w), w});
      }
    }
  }
  return out;
}

/// (J+, J-) = (prod (1 + d_k), prod (1 - d_k)) over the recorded right-derivatives.
inline std::pair<double, double> jacobians(const AdditionTranscript& tr) {
  double lp = 0.0;
  double lm = 0.0;
  for (double d : tr.step_right_derivs) {
    lp += std::log1p(d);
    lm += std::log1p(-d);
  }
  return {std::exp(lp), std::exp(lm)};
}

/// Smallest tau over every ball B(v, k), k = 0..diam, giving
/// tau'(v, k) = tau(v) - min_{d(v,w) <= k} tau(w) in O(1).
class TauPrimeTable {
 public:
  TauPrimeTable(const Graph& g, std::span<const double> tau) : tau_(tau.begin(), tau.end()), diam_(g.diameter()) {
    const int n = g.vertex_count();
    ball_min_.assign(static_cast<std::size_t>(n) * (diam_ + 1), std::numeric_limits<double>::infinity());
    for (Vertex v = 0; v < n; ++v) {
      double* row = ball_min_.data() + static_cast<std::size_t>(v) * (diam_ + 1);
      for (Vertex w = 0; w < n; ++w) {
        const int d = g.distance(v, w);
        row[d] = std::min(row[d], tau_[w]);
      }
      for (int k = 1; k <= diam_; ++k) row[k] = std::min(row[k], row[k - 1]);
    }
  }
  TauPrimeTable(const AdditionPlan& plan) : TauPrimeTable(plan.graph(), plan.tau()) {}

  /// tau'(v, k); constant for k >= diam.
  double operator()(Vertex v, int k) const {
    if (k < 0) throw std::invalid_argument("tau_prime: k must be >= 0");
    const int kk = std::min(k, diam_);
    return tau_[v] - ball_min_[static_cast<std::size_t>(v) * (diam_ + 1) + kk];
  }

  int diameter() const { return diam_; }

  /// max{k <= diam : tau'(v, k) <= eps/2 for all v} - 1. At least -1 since k = 0 always qualifies.
  int capital_l(double eps) const {
    const int n = static_cast<int>(tau_.size());
    int best = 0;
    for (int k = 1; k <= diam_; ++k) {
      bool ok = true;
      for (Vertex v = 0; v < n && ok; ++v) ok = (*this)(v, k) <= eps / 2.0;
      if (!ok) break;
      best = k;
    }
    return best - 1;
  }

 private:
  std::vector<double> tau_;
  int diam_;
  std::vector<double> ball_min_;
};

inline double tau_prime(const AdditionPlan& plan, Vertex v, int k) { return TauPrimeTable(plan)(v, k); }

inline int capital_l(const AdditionPlan& plan) { return TauPrimeTable(plan).capital_l(plan.eps()); }

/// Edges with |phi_v - phi_w| >= threshold (closed comparison).
inline std::vector<Edge> extremal_edges(const Graph& g, std::span<const double> heights, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("extremal_edges: threshold must be > 0");
  std::vector<Edge> out;
  for (const Edge& e : g.edges())
    if (std::abs(heights[e.a] - heights[e.b]) >= threshold) out.push_back(e);
  return out;
}

/// Component structure of the edges steeper than 1 - eps.
inline ComponentMetrics extremal_metrics(const AdditionPlan& plan, const Configuration& phi) {
  const auto edges = extremal_edges(plan.graph(), phi.heights, 1.0 - plan.eps());
  return component_metrics(plan.graph(), edges);
}

struct ShiftBoundsReport {
  bool applicable = false;  // M(phi) <= L(tau, eps)
  int big_m = 0;
  int capital_l = 0;
  int upper_violations = 0;
  int lower_violations = 0;     // tau(v) - tau'(v, r(phi, v)) <= shift
  int corollary_violations = 0;  // tau(v) - eps/2 <= shift
  std::vector<Vertex> violating;

  int violations() const { return upper_violations + lower_violations + corollary_violations; }
};

/// Checks shift_v <= tau(v) always and, when M(phi) <= L(tau, eps), the lower
/// bounds tau(v) - tau'(v, r(phi, v)) <= shift_v and tau(v) - eps/2 <= shift_v.
inline ShiftBoundsReport shift_bounds_check(const AdditionPlan& plan, const Configuration& phi,
                                            const AdditionTranscript& tr, const TauPrimeTable& table,
                                            double slack = 1e-12) {
  ShiftBoundsReport rep;
  const ComponentMetrics cm = extremal_metrics(plan, phi);
  rep.big_m = cm.big_m;
  rep.capital_l = table.capital_l(plan.eps());
  rep.applicable = rep.big_m <= rep.capital_l;
  const auto sigma = tr.shift_by_vertex();
  for (Vertex v = 0; v < plan.graph().vertex_count(); ++v) {
    bool bad = false;
    if (sigma[v] > plan.tau(v) + slack || sigma[v] < -slack) {
      ++rep.upper_violations;
      bad = true;
    }
    if (rep.applicable) {
      if (sigma[v] < plan.tau(v) - table(v, cm.r[v]) - slack) {
        ++rep.lower_violations;
        bad = true;
      }
      if (sigma[v] < plan.tau(v) - plan.eps() / 2.0 - slack) {
        ++rep.corollary_violations;
        bad = true;
      }
    }
    if (bad) rep.violating.push_back(v);
  }
  return rep;
}

inline ShiftBoundsReport shift_bounds_check(const AdditionPlan& plan, const Configuration& phi,
                                            const AdditionTranscript& tr) {
  return shift_bounds_check(plan, phi, tr, TauPrimeTable(plan));
}

struct JacobianBoundReport {
  bool applicable = false;
  double log_lhs = 0.0;  // log sqrt(J+ J-)
  double log_rhs = 0.0;  // -(1/eps^2) sum_v tau'(v, 1 + max_{w~v} r(phi, w))^2
  bool holds = true;
};

/// Geometric-mean Jacobian lower bound, compared in log space.
inline JacobianBoundReport jacobian_bound_check(const AdditionPlan& plan, const Configuration& phi,
                                                const AdditionTranscript& tr, const TauPrimeTable& table,
                                                double slack = 1e-12) {
  JacobianBoundReport rep;
  const Graph& g = plan.graph();
  const ComponentMetrics cm = extremal_metrics(plan, phi);
  rep.applicable = cm.big_m <= table.capital_l(plan.eps());
  rep.log_lhs = 0.5 * (tr.log_j_plus + tr.log_j_minus);
  double sum = 0.0;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    int rmax = 0;
    for (Vertex w : g.neighbors(v)) rmax = std::max(rmax, cm.r[w]);
    const double tp = table(v, 1 + rmax);
    sum += tp * tp;
  }
  rep.log_rhs = -sum / (plan.eps() * plan.eps());
  rep.holds = !rep.applicable || rep.log_lhs >= rep.log_rhs - slack;
  return rep;
}

inline JacobianBoundReport jacobian_bound_check(const AdditionPlan& plan, const Configuration& phi,
                                                const AdditionTranscript& tr) {
  return jacobian_bound_check(plan, phi, tr, TauPrimeTable(plan));
}

}  // namespace surfshift

#endif

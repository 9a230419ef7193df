// Requested-shift profiles on the torus: the logarithmic warm-up profile and
// the plateau/log/cap profile eta used for the fluctuation bounds.
#ifndef SURFSHIFT_TAU_HPP
#define SURFSHIFT_TAU_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "addition.hpp"
#include "graph.hpp"

namespace surfshift {

namespace detail {
inline void require_torus(const Graph& g, const char* what) {
  if (!g.is_torus()) throw std::invalid_argument(std::string(what) + ": requires a torus graph");
}
}  // namespace detail

/// log(1 + |v|_1) / sqrt(log(2n + 1)).
inline double tau_log(const Graph& g, Vertex v) {
  detail::require_torus(g, "tau_log");
  const double n = g.side();
  return std::log1p(static_cast<double>(g.l1_norm(v))) / std::sqrt(std::log(2.0 * n + 1.0));
}

inline std::vector<double> tau_log_field(const Graph& g) {
  std::vector<double> out(g.vertex_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v) out[v] = tau_log(g, v);
  return out;
}

/// Sum over edges of |tau(v) - tau(w)|^2.
inline double gradient_square_sum(const Graph& g, std::span<const double> tau) {
  double s = 0.0;
  for (const Edge& e : g.edges()) {
    const double d = tau[e.a] - tau[e.b];
    s += d * d;
  }
  return s;
}

inline double tau_log_gradient_square_sum(const Graph& g) { return gradient_square_sum(g, tau_log_field(g)); }

/// eta for a fixed target vertex. Depends on w only through |w|_1.
class EtaProfile {
 public:
  EtaProfile(const Graph& g, Vertex target) : g_(&g) {
    detail::require_torus(g, "eta");
    norm_ = g.l1_norm(target);
    root_ = std::sqrt(static_cast<double>(norm_));
    scale_ = norm_ > 0 ? std::sqrt(std::log1p(static_cast<double>(norm_))) : 0.0;
  }

  /// h(x) = log(1 + x) / sqrt(log(1 + |v|_1)).
  double h(double x) const { return std::log1p(x) / scale_; }

  double of_norm(int m) const {
    if (norm_ == 0) return 0.0;  // degenerate target: eta vanishes
    const double x = m;
    if (x <= root_) return 0.0;
    if (m <= norm_) return h(x) - h(root_);
    return h(norm_) - h(root_);
  }

  double operator()(Vertex w) const { return of_norm(g_->l1_norm(w)); }

  std::vector<double> field() const {
    std::vector<double> out(g_->vertex_count());
    for (Vertex w = 0; w < g_->vertex_count(); ++w) out[w] = (*this)(w);
    return out;
  }

  int target_norm() const { return norm_; }

 private:
  const Graph* g_;
  int norm_ = 0;
  double root_ = 0.0;
  double scale_ = 0.0;
};

inline double eta(const Graph& g, Vertex target, Vertex w) { return EtaProfile(g, target)(w); }

/// Coordinate-wise difference a - b reduced into {-n+1, ..., n}.
inline Vertex torus_difference(const Graph& g, Vertex a, Vertex b) {
  detail::require_torus(g, "torus_difference");
  const Coord p = g.coord(a), q = g.coord(b);
  return g.at({p.x - q.x, p.y - q.y});
}

/// eta(v0) - eta(w - u), the profile re-centred so it vanishes far from u.
inline double eta_shifted(const Graph& g, Vertex v0, Vertex u, Vertex w) {
  const EtaProfile e(g, v0);
  return e(v0) - e(torus_difference(g, w, u));
}

inline std::vector<double> eta_shifted_field(const Graph& g, Vertex v0, Vertex u) {
  const EtaProfile e(g, v0);
  std::vector<double> out(g.vertex_count());
  const double top = e(v0);
  for (Vertex w = 0; w < g.vertex_count(); ++w) out[w] = top - e(torus_difference(g, w, u));
  return out;
}

/// sum_w sum_{k>=0} 2^-k eta'(w, k+1)^2. eta'(w, j) is constant for j >= diam,
/// so terms with k + 1 >= diam are summed as a geometric series.
inline double eta_sum_bound(const Graph& g, Vertex target) {
  const auto field = EtaProfile(g, target).field();
  const TauPrimeTable table(g, field);
  const int diam = g.diameter();
  double total = 0.0;
  for (Vertex w = 0; w < g.vertex_count(); ++w) {
    double s = 0.0;
    for (int k = 0; k + 1 < diam; ++k) {
      const double d = table(w, k + 1);
      s += std::ldexp(d * d, -k);
    }
    const double tail = table(w, diam);
    // sum_{k >= diam-1} 2^-k = 2^(2 - diam)
    s += std::ldexp(tail * tail, 2 - diam);
    total += s;
  }
  return total;
}

/// floor((1 + sqrt|v|_1)(exp(eps sqrt(log(1 + |v|_1)) / (2 alpha)) - 1)) - 1.
inline double eta_capital_l_lower_bound(const Graph& g, Vertex target, double alpha, double eps) {
  const double x = g.l1_norm(target);
  return std::floor((1.0 + std::sqrt(x)) * std::expm1(eps * std::sqrt(std::log1p(x)) / (2.0 * alpha))) - 1.0;
}

/// 1/4 (sqrt(log(1 + |v|_1)) + 1).
inline double eta_target_lower_bound(double norm) { return 0.25 * (std::sqrt(std::log1p(norm)) + 1.0); }

}  // namespace surfshift

#endif

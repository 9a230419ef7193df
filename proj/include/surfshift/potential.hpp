#ifndef SURFSHIFT_POTENTIAL_HPP
#define SURFSHIFT_POTENTIAL_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace surfshift {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class PotentialKind { hammock, quadratic, double_well, smooth_interval, smooth_line, custom };

inline const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::hammock: return "hammock";
    case PotentialKind::quadratic: return "quadratic";
    case PotentialKind::double_well: return "double_well";
    case PotentialKind::smooth_interval: return "smooth_interval";
    case PotentialKind::smooth_line: return "smooth_line";
    case PotentialKind::custom: return "custom";
  }
  return "?";
}

/// Symmetric pair potential U. Finite on |x| < K (also at |x| = K when
/// closed_endpoints), +inf beyond; K = inf for potentials finite everywhere.
///
///   hammock(K)              0 on [-K, K]
///   quadratic(a)            a x^2
///   double_well(depth, w)   depth ((x/w)^2 - 1)^2
///   smooth_interval(K, a)   a x^2 on the interval
///   smooth_line(a, b)       a x^2 + b x^4
///
/// Every kind also carries bounds used by the single-site samplers: inf U, and
/// for unbounded supports a curvature c > 0 and offset C >= 0 with
/// U(x) >= c x^2 - C for all x.
class Potential {
 public:
  static Potential hammock(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("hammock: K must be finite and > 0");
    Potential p(PotentialKind::hammock);
    p.k_ = k;
    p.inf_u_ = 0.0;
    return p;
  }

  static Potential quadratic(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("quadratic: a must be finite and > 0");
    Potential p(PotentialKind::quadratic);
    p.a_ = a;
    p.inf_u_ = 0.0;
    p.curv_ = a;
    return p;
  }

  static Potential double_well(double depth, double width) {
    if (!(depth > 0.0) || !(width > 0.0) || !std::isfinite(depth) || !std::isfinite(width))
      throw std::invalid_argument("double_well: depth and width must be finite and > 0");
    Potential p(PotentialKind::double_well);
    p.a_ = depth;
    p.b_ = width;
    p.inf_u_ = 0.0;
    // depth((y/w)^2 - 1)^2 - (depth/w^2) y^2 has minimum -5/4 depth at y^2 = 3/2 w^2.
    p.curv_ = depth / (width * width);
    p.offset_ = 1.25 * depth;
    return p;
  }

  static Potential smooth_interval(double k, double a, bool closed_endpoints = true) {
    if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("smooth_interval: K must be finite and > 0");
    if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("smooth_interval: a must be finite and >= 0");
    Potential p(PotentialKind::smooth_interval);
    p.k_ = k;
    p.a_ = a;
    p.closed_ = closed_endpoints;
    p.inf_u_ = 0.0;
    return p;
  }

  static Potential smooth_line(double a, double b) {
    if (!(a > 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw std::invalid_argument("smooth_line: need a > 0 and b >= 0");
    Potential p(PotentialKind::smooth_line);
    p.a_ = a;
    p.b_ = b;
    p.inf_u_ = 0.0;
    p.curv_ = a;
    return p;
  }

  /// User-supplied even function on a bounded support. inf_u must be a lower
  /// bound of fn on its finite region.
  static Potential custom(std::string name, double k, std::function<double(double)> fn, double inf_u,
                          bool closed_endpoints = true) {
    if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("custom potential: K must be finite and > 0");
    Potential p(PotentialKind::custom);
    p.k_ = k;
    p.fn_ = std::make_shared<std::function<double(double)>>(std::move(fn));
    p.inf_u_ = inf_u;
    p.closed_ = closed_endpoints;
    p.name_ = std::move(name);
    return p;
  }

  PotentialKind kind() const { return kind_; }
  std::string name() const { return kind_ == PotentialKind::custom ? name_ : to_string(kind_); }

  /// Finiteness radius K (inf when finite everywhere).
  double radius() const { return k_; }
  bool bounded_support() const { return std::isfinite(k_); }
  bool closed_endpoints() const { return closed_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double inf_u() const { return inf_u_; }
  double envelope_curvature() const { return curv_; }
  double envelope_offset() const { return offset_; }

  bool finite_at(double x) const {
    const double ax = std::abs(x);
    if (ax < k_) return kind_ != PotentialKind::custom || std::isfinite((*fn_)(x));
    if (ax == k_ && closed_) return kind_ != PotentialKind::custom || std::isfinite((*fn_)(x));
    return false;
  }

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    const double ax = std::abs(x);
    if (ax > k_ || (ax == k_ && !closed_)) return kInf;
    switch (kind_) {
      case PotentialKind::hammock: return 0.0;
      case PotentialKind::quadratic:
      case PotentialKind::smooth_interval: return a_ * x * x;
      case PotentialKind::double_well: {
        const double r = x / b_;
        const double s = r * r - 1.0;
        return a_ * s * s;
      }
      case PotentialKind::smooth_line: {
        const double x2 = x * x;
        return a_ * x2 + b_ * x2 * x2;
      }
      case PotentialKind::custom: return (*fn_)(x);
    }
    return kInf;
  }

  /// U~(x) = U(k' x).
  Potential rescaled(double k_prime) const {
    if (!(k_prime > 0.0) || !std::isfinite(k_prime)) throw std::invalid_argument("rescale: K' must be finite and > 0");
    switch (kind_) {
      case PotentialKind::hammock: return hammock(k_ / k_prime);
      case PotentialKind::quadratic: return quadratic(a_ * k_prime * k_prime);
      case PotentialKind::double_well: return double_well(a_, b_ / k_prime);
      case PotentialKind::smooth_interval: return smooth_interval(k_ / k_prime, a_ * k_prime * k_prime, closed_);
      case PotentialKind::smooth_line: return smooth_line(a_ * k_prime * k_prime, b_ * std::pow(k_prime, 4));
      case PotentialKind::custom: {
        auto fn = fn_;
        return custom(name_, k_ / k_prime, [fn, k_prime](double x) { return (*fn)(k_prime * x); }, inf_u_, closed_);
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  explicit Potential(PotentialKind kind) : kind_(kind) {}

  PotentialKind kind_;
  double k_ = kInf;
  double a_ = 0.0;
  double b_ = 0.0;
  bool closed_ = true;
  double inf_u_ = 0.0;
  double curv_ = 0.0;
  double offset_ = 0.0;
  std::shared_ptr<std::function<double(double)>> fn_;
  std::string name_;
};

inline double potential_eval(const Potential& u, double x) { return u.eval(x); }

inline Potential rescale_potential(const Potential& u, double k_prime) { return u.rescaled(k_prime); }

}  // namespace surfshift

#endif

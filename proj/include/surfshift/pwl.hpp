#ifndef SURFSHIFT_PWL_HPP
#define SURFSHIFT_PWL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace surfshift {

/// Validates 0 < eps <= 1/2.
inline void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 0.5))
    throw std::invalid_argument("eps must lie in (0, 1/2], got " + std::to_string(eps));
}

/// The trapezoidal bump: 0 outside [-1,1], 1 on [-1+eps, 1-eps], linear in between.
inline double bump_f(double x, double eps) {
  check_eps(eps);
  if (x <= -1.0 || x >= 1.0) return 0.0;
  if (x < -1.0 + eps) return (1.0 + x) / eps;
  if (x > 1.0 - eps) return (1.0 - x) / eps;
  return 1.0;
}

/// Continuous piecewise-linear function on the real line.
///
/// Breakpoints x_0 < ... < x_{n-1} carry values y_i. slope(0) is the slope of
/// the left tail, slope(i) for 0 < i < n the slope on [x_{i-1}, x_i), and
/// slope(n) the slope of the right tail. Slopes are stored rather than
/// recomputed from differences so right-derivatives are exact.
class PwlFunction {
 public:
  PwlFunction() : PwlFunction(constant(0.0)) {}

  static PwlFunction constant(double c) {
    PwlFunction f(0);
    f.xs_ = {0.0};
    f.ys_ = {c};
    f.slopes_ = {0.0, 0.0};
    return f;
  }

  /// Builds from explicit breakpoints and slopes (slopes.size() == xs.size() + 1).
  static PwlFunction from_parts(std::vector<double> xs, std::vector<double> ys, std::vector<double> slopes) {
    if (xs.empty() || xs.size() != ys.size() || slopes.size() != xs.size() + 1)
      throw std::invalid_argument("PwlFunction: inconsistent breakpoint/slope sizes");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i - 1] < xs[i])) throw std::invalid_argument("PwlFunction: breakpoints must be strictly increasing");
    PwlFunction f(0);
    f.xs_ = std::move(xs);
    f.ys_ = std::move(ys);
    f.slopes_ = std::move(slopes);
    return f;
  }

  std::size_t breakpoint_count() const { return xs_.size(); }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  const std::vector<double>& slopes() const { return slopes_; }
  double left_tail_slope() const { return slopes_.front(); }
  double right_tail_slope() const { return slopes_.back(); }

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    const std::size_t i = segment(x);
    if (i == 0) return ys_[0] + slopes_[0] * (x - xs_[0]);
    return ys_[i - 1] + slopes_[i] * (x - xs_[i - 1]);
  }

  /// Slope of the piece immediately to the right of x.
  double right_deriv(double x) const { return slopes_[segment(x)]; }

  double max_abs_slope() const {
    double m = 0.0;
    for (double s : slopes_) m = std::max(m, std::abs(s));
    return m;
  }

  double min_value() const {
    if (slopes_.front() > 0.0 || slopes_.back() < 0.0) return -INFINITY;
    return *std::min_element(ys_.begin(), ys_.end());
  }

 private:
  explicit PwlFunction(int) {}

  // Index of the piece containing x: the number of breakpoints <= x.
  std::size_t segment(double x) const {
    return static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
  }

  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> slopes_;
};

/// Parameters of the capped bump m_{v,h,t}.
struct BumpParams {
  double tau_v = 0.0;  // requested shift of the vertex being updated
  double h = 0.0;      // centre: height of the processed neighbour
  double t = 0.0;      // floor: shift given to the processed neighbour
  double eps = 0.5;
};

/// t + min(tau_v - t, eps/2) * f(. - h) when tau_v >= t, otherwise the constant t.
/// Slopes are bounded by 1/2 in absolute value.
inline PwlFunction make_m(const BumpParams& p) {
  check_eps(p.eps);
  if (p.tau_v < p.t) return PwlFunction::constant(p.t);
  const double amp = std::min(p.tau_v - p.t, p.eps / 2.0);
  if (amp == 0.0) return PwlFunction::constant(p.t);
  const double rise = amp / p.eps;
  return PwlFunction::from_parts({p.h - 1.0, p.h - 1.0 + p.eps, p.h + 1.0 - p.eps, p.h + 1.0},
                                 {p.t, p.t + amp, p.t + amp, p.t}, {0.0, rise, 0.0, -rise, 0.0});
}

/// Exact pointwise minimum. On each resulting piece the slope is that of the
/// function attaining the minimum there, so right_deriv of the result equals
/// the smallest right-derivative among the functions active at x.
inline PwlFunction min_with(const PwlFunction& f, const PwlFunction& g) {
  std::vector<double> cand;
  cand.reserve(f.breakpoint_count() + g.breakpoint_count() + 4);
  std::merge(f.xs().begin(), f.xs().end(), g.xs().begin(), g.xs().end(), std::back_inserter(cand));
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  // Crossings: within each interior interval both are linear; tails likewise.
  std::vector<double> crossings;
  auto diff = [&](double x) { return f.eval(x) - g.eval(x); };
  for (std::size_t i = 0; i + 1 < cand.size(); ++i) {
    const double a = cand[i];
    const double b = cand[i + 1];
    const double da = diff(a);
    const double db = diff(b);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double x = a + da / (da - db) * (b - a);
      if (x > a && x < b) crossings.push_back(x);
    }
  }
  {
    const double x0 = cand.front();
    const double d0 = diff(x0);
    const double ds = f.left_tail_slope() - g.left_tail_slope();
    if (d0 != 0.0 && ds != 0.0) {
      const double x = x0 - d0 / ds;
      if (x < x0) crossings.push_back(x);
    }
    const double x1 = cand.back();
    const double d1 = diff(x1);
    const double de = f.right_tail_slope() - g.right_tail_slope();
    if (d1 != 0.0 && de != 0.0) {
      const double x = x1 - d1 / de;
      if (x > x1) crossings.push_back(x);
    }
  }
  if (!crossings.empty()) {
    cand.insert(cand.end(), crossings.begin(), crossings.end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  }

  // Both are linear strictly between consecutive candidates, so comparing at an
  // interior point picks the lower piece without rounding trouble at crossings.
  // Each piece is anchored with the value of the function that owns it.
  const std::size_t n = cand.size();
  auto f_lower = [&](double probe, bool tie_to_f) {
    const double fx = f.eval(probe);
    const double gx = g.eval(probe);
    return fx < gx || (fx == gx && tie_to_f);
  };
  std::vector<double> ys(n);
  std::vector<double> slopes(n + 1);
  {
    const bool use_f = f_lower(cand.front() - 1.0, f.left_tail_slope() >= g.left_tail_slope());
    slopes[0] = use_f ? f.left_tail_slope() : g.left_tail_slope();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = cand[i];
    const double probe = i + 1 < n ? x + 0.5 * (cand[i + 1] - x) : x + 1.0;
    const bool use_f = f_lower(probe, f.right_deriv(x) <= g.right_deriv(x));
    const PwlFunction& owner = use_f ? f : g;
    ys[i] = owner.eval(x);
    slopes[i + 1] = owner.right_deriv(x);
  }

  // Drop breakpoints where nothing bends.
  std::vector<double> kx;
  std::vector<double> ky;
  std::vector<double> ks{slopes[0]};
  kx.reserve(n);
  ky.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (slopes[i + 1] == ks.back()) continue;
    kx.push_back(cand[i]);
    ky.push_back(ys[i]);
    ks.push_back(slopes[i + 1]);
  }
  if (kx.empty()) {
    kx.push_back(cand.front());
    ky.push_back(ys.front());
    ks.push_back(slopes[0]);
  }
  return PwlFunction::from_parts(std::move(kx), std::move(ky), std::move(ks));
}

/// The unique h with h + f(h) = y. Requires every slope of f in [-1/2, 1/2],
/// so that h + f(h) is strictly increasing with slopes in [1/2, 3/2].
inline double invert_shifted(const PwlFunction& f, double y) {
  if (f.max_abs_slope() > 0.5)
    throw std::invalid_argument("invert_shifted: slope bound 1/2 violated");
  const auto& xs = f.xs();
  const auto& ys = f.ys();
  const auto& s = f.slopes();
  // Values of h + f(h) at the breakpoints are increasing; locate y among them.
  std::size_t i = 0;
  while (i < xs.size() && xs[i] + ys[i] <= y) ++i;
  if (i == 0) return xs[0] + (y - (xs[0] + ys[0])) / (1.0 + s[0]);
  return xs[i - 1] + (y - (xs[i - 1] + ys[i - 1])) / (1.0 + s[i]);
}

}  // namespace surfshift

#endif

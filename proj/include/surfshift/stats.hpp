#ifndef SURFSHIFT_STATS_HPP
#define SURFSHIFT_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace surfshift {

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Mergeable count/mean/M2 accumulator (Chan et al. pairwise update).
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double tot = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / tot;
    m2 += o.m2 + d * d * n * o.n / tot;
    n = tot;
  }

  double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
  /// Second moment about zero.
  double raw_second() const { return n > 0.0 ? m2 / n + mean * mean : 0.0; }
};

/// Delete-one-group jackknife for a statistic of pooled group data.
/// stat(excluded) must return the statistic with group `excluded` left out,
/// or the full-sample statistic when excluded < 0.
template <class Stat>
EstimateWithError jackknife(int groups, Stat stat) {
  EstimateWithError out;
  out.value = stat(-1);
  if (groups < 2) return out;
  std::vector<double> loo(groups);
  for (int g = 0; g < groups; ++g) loo[g] = stat(g);
  const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / groups;
  double s = 0.0;
  for (double x : loo) s += (x - mean) * (x - mean);
  out.std_error = std::sqrt((groups - 1.0) / groups * s);
  return out;
}

/// Integrated autocorrelation time with Sokal's automatic window (c = 6).
inline double integrated_autocorrelation(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= n;
  if (c0 <= 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t t = 1; t < n / 2; ++t) {
    double c = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) c += (x[i] - mean) * (x[i + t] - mean);
    c /= n;
    tau += 2.0 * c / c0;
    if (static_cast<double>(t) >= 6.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

struct ProportionInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for k successes out of n at z standard deviations.
inline ProportionInterval wilson_interval(double k, double n, double z) {
  if (n <= 0.0) return {0.0, 1.0};
  const double p = k / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
template <class Cdf>
KsResult ks_test(std::vector<double> xs, Cdf cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_test: no samples");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

inline std::vector<double> histogram(std::span<const double> xs, int bins, double lo, double hi) {
  std::vector<double> h(bins, 0.0);
  for (double x : xs) {
    int b = static_cast<int>((x - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    h[b] += 1.0;
  }
  for (double& c : h) c /= static_cast<double>(xs.size());
  return h;
}

/// Total-variation distance between two binned empirical laws.
inline double histogram_tv(std::span<const double> a, std::span<const double> b, int bins, double lo, double hi) {
  const auto ha = histogram(a, bins, lo, hi);
  const auto hb = histogram(b, bins, lo, hi);
  double s = 0.0;
  for (int i = 0; i < bins; ++i) s += std::abs(ha[i] - hb[i]);
  return 0.5 * s;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_error = 0.0;
  double t_statistic = 0.0;
};

/// Ordinary least squares y ~ a + b x. The slope error combines the residual
/// scatter with the propagated per-point errors y_err (if given).
inline LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> y_err = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double var = 0.0;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    var += rss / (n - 2) / sxx;
  }
  if (y_err.size() == n) {
    double prop = 0.0;
    for (std::size_t i = 0; i < n; ++i) prop += (x[i] - mx) * (x[i] - mx) * y_err[i] * y_err[i];
    var += prop / (sxx * sxx);
  }
  f.slope_error = std::sqrt(var);
  f.t_statistic = f.slope_error > 0.0 ? f.slope / f.slope_error : (f.slope > 0.0 ? INFINITY : -INFINITY);
  return f;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of nothing");
  const std::size_t m = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + m, xs.end());
  const double hi = xs[m];
  if (xs.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(xs.begin(), xs.begin() + m));
}

}  // namespace surfshift

#endif

#pragma once
// Independent reference implementations used only by tests.  These are kept
// deliberately naive (dense scans, closed forms, series) so that agreement
// with the library is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

// Brute-force Legendre transform: dense scan of lambda*x - phi(lambda) over
// [0, hi] with `steps` points (no golden-section, no bracketing logic).
inline double grid_conjugate(const std::function<double(double)>& phi, double x, double hi,
                             int steps = 2'000'000) {
  double best = 0.0;
  for (int i = 0; i <= steps; ++i) {
    double l = hi * static_cast<double>(i) / steps;
    double v = l * x - phi(l);
    if (v > best) best = v;
  }
  return best;
}

// Standard normal CDF via the complementary error function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_tail_two_sided(double v) { return 2.0 * (1.0 - normal_cdf(v)); }

// Regularized lower incomplete gamma P(a, x), series + continued fraction
// (Numerical-Recipes style), enough accuracy for CDF oracles.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi2_cdf(double k, double x) { return gamma_p(k / 2.0, x / 2.0); }

// P(sqrt(n) |chi2_n / n - 1| > v) for the variance estimator of n standard
// normal observations.
inline double chi2_scaled_dev_tail(int n, double v) {
  double nn = static_cast<double>(n);
  double hi = nn + std::sqrt(nn) * v;
  double lo = nn - std::sqrt(nn) * v;
  double p = 1.0 - chi2_cdf(nn, hi);
  if (lo > 0.0) p += chi2_cdf(nn, lo);
  return p;
}

// P(|mean of n Exp(1)| deviates: sqrt(n)|theta_hat - 1| > v), theta_hat ~ Gamma(n, 1/n).
inline double gamma_scaled_dev_tail(int n, double v) {
  double nn = static_cast<double>(n);
  double hi = nn * (1.0 + v / std::sqrt(nn));
  double lo = nn * (1.0 - v / std::sqrt(nn));
  double p = 1.0 - gamma_p(nn, hi);
  if (lo > 0.0) p += gamma_p(nn, lo);
  return p;
}

// Exact minimum epsilon-cover cardinality with centers drawn from the point
// set itself: bitmask set-cover DP, usable up to ~20 points.
inline int set_cover_min(int n, const std::function<double(int, int)>& dist, double eps) {
  if (n <= 0) return 0;
  if (n > 20) throw std::invalid_argument("set_cover_min supports at most 20 points");
  std::vector<std::uint32_t> ball(static_cast<std::size_t>(n), 0);
  for (int c = 0; c < n; ++c)
    for (int p = 0; p < n; ++p)
      if (dist(c, p) <= eps) ball[static_cast<std::size_t>(c)] |= (1u << p);
  const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1u);
  std::vector<int> dp(full + 1u, std::numeric_limits<int>::max() / 2);
  dp[0] = 0;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    if (dp[mask] >= std::numeric_limits<int>::max() / 2) continue;
    // cover the lowest uncovered point with each candidate ball containing it
    int missing = 0;
    while (mask & (1u << missing)) ++missing;
    for (int c = 0; c < n; ++c) {
      if (!(ball[static_cast<std::size_t>(c)] & (1u << missing))) continue;
      std::uint32_t next = mask | ball[static_cast<std::size_t>(c)];
      dp[next] = std::min(dp[next], dp[mask] + 1);
    }
  }
  return dp[full];
}

// Wilson score interval at confidence z for k successes out of n.
struct Interval {
  double lo, hi;
};
inline Interval wilson(std::int64_t k, std::int64_t n, double z) {
  double p = static_cast<double>(k) / static_cast<double>(n);
  double nn = static_cast<double>(n);
  double z2 = z * z;
  double denom = 1.0 + z2 / nn;
  double center = (p + z2 / (2.0 * nn)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {center - half, center + half};
}

// Simple least squares slope of y on x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ls_slope needs >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

}  // namespace oracle

#include "mletail/family.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "mletail/csv.hpp"
#include "mletail/quadrature.hpp"

namespace mletail {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kLogPi = 1.1447298858494002;
constexpr double kPi = 3.141592653589793;
}  // namespace

double SlowVary::operator()(double x) const {
  if (constant) return c;
  double a = std::log(x + 3.0);
  double b = std::log(std::log(x + 16.0));
  return std::pow(a, r) * std::pow(b, s);
}

std::string SlowVary::describe() const {
  std::ostringstream os;
  if (constant)
    os << "const(" << format_double(c) << ")";
  else
    os << "logpow(" << format_double(r) << "," << format_double(s) << ")";
  return os.str();
}

SlowVary SlowVary::konst(double value) {
  SlowVary R;
  R.constant = true;
  R.c = value;
  return R;
}

SlowVary SlowVary::logpow(double r, double s) {
  SlowVary R;
  R.constant = false;
  R.r = r;
  R.s = s;
  return R;
}

double ParametricFamily::risk(double a, double b) const {
  return risk_fn ? risk_fn(a, b) : std::abs(a - b);
}

KramerDomain::KramerDomain(double failed, double ok)
    : std::runtime_error("contrast MGF outside Kramer domain at lambda = " + format_double(failed) +
                         " (largest finite lambda found: " + format_double(ok) + ")"),
      lambda_failed(failed),
      lambda_ok(ok) {}

std::pair<double, double> density_window(const ParametricFamily& fam, double theta, double drop) {
  auto lf = [&](double x) { return fam.log_density(x, theta); };
  std::vector<double> cs =
      fam.quad_centers ? fam.quad_centers(theta) : std::vector<double>{theta};
  double best = -kInf;
  for (double c : cs) best = std::max(best, lf(c));
  double lo = *std::min_element(cs.begin(), cs.end());
  double hi = *std::max_element(cs.begin(), cs.end());
  const double cut = best - drop;
  double step = 1.0;
  while (lo > fam.support_lo && lf(lo) > cut) {
    lo = std::max(fam.support_lo, lo - step);
    step *= 2.0;
  }
  step = 1.0;
  while (hi < fam.support_hi && lf(hi) > cut) {
    hi = std::min(fam.support_hi, hi + step);
    step *= 2.0;
  }
  return {lo, hi};
}

namespace {

// Adaptive integration over [lo, hi] split at the centers plus a geometric
// ladder around each, so panels stay within a bounded scale ratio even when
// the support spans many orders of magnitude.
double integrate_ladder(const std::function<double(double)>& f, double lo, double hi,
                        const std::vector<double>& centers, double rel, double abs_tol) {
  std::vector<double> bp{lo, hi};
  for (double c : centers)
    if (c > lo && c < hi) bp.push_back(c);
  for (double c : centers) {
    for (double step = 1.0; step < 1e18; step *= 4.0) {
      bool any = false;
      if (c + step < hi) {
        bp.push_back(c + step);
        any = true;
      }
      if (c - step > lo) {
        bp.push_back(c - step);
        any = true;
      }
      if (!any) break;
    }
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i)
    total += integrate(f, bp[i], bp[i + 1], rel, abs_tol / static_cast<double>(bp.size()));
  return total;
}

std::vector<double> merged_centers(const ParametricFamily& fam, double t1, double t2) {
  std::vector<double> cs = fam.quad_centers ? fam.quad_centers(t1) : std::vector<double>{t1};
  std::vector<double> c2 = fam.quad_centers ? fam.quad_centers(t2) : std::vector<double>{t2};
  cs.insert(cs.end(), c2.begin(), c2.end());
  return cs;
}

}  // namespace

double kl(const ParametricFamily& fam, double theta) {
  if (!fam.contains(theta)) throw std::invalid_argument("kl: theta outside the parameter box");
  if (theta == fam.theta0) return 0.0;
  auto w0 = density_window(fam, fam.theta0, 80.0);
  auto wt = density_window(fam, theta, 80.0);
  const double lo = std::min(w0.first, wt.first), hi = std::max(w0.second, wt.second);
  bool bad = false;
  double bad_x = 0.0;
  auto integrand = [&](double x) {
    double l0 = fam.log_density(x, fam.theta0);
    if (!(l0 > -kInf)) return 0.0;  // outside the reference support: weight 0
    double lt = fam.log_density(x, theta);
    double v = std::exp(l0) * (l0 - lt);
    if (!std::isfinite(v)) {
      if (!bad) {
        bad = true;
        bad_x = x;
      }
      return 0.0;
    }
    return v;
  };
  double h = integrate_ladder(integrand, lo, hi, merged_centers(fam, fam.theta0, theta), 1e-9, 1e-15);
  if (bad)
    throw std::runtime_error("kl quadrature overflow (density ratio) near x = " + format_double(bad_x));
  return std::max(0.0, h);
}

double logmgf_contrast(const ParametricFamily& fam, double theta, double lambda, double h_theta) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("logmgf_contrast needs lambda >= 0");
  if (!fam.contains(theta))
    throw std::invalid_argument("logmgf_contrast: theta outside the parameter box");
  if (lambda == 0.0) return 0.0;
  auto g_at = [&](double lam) {
    return [&fam, theta, lam](double x) {
      double lt = fam.log_density(x, theta);
      if (!(lt > -kInf)) return -kInf;  // f_theta = 0 kills the integrand (lam > 0)
      double l0 = fam.log_density(x, fam.theta0);
      if (!(l0 > -kInf)) return lam > 1.0 ? kInf : -kInf;  // negative power of zero
      double v = lam * lt + (1.0 - lam) * l0;
      return std::isfinite(v) ? v : -kInf;
    };
  };
  LogIntegralHints hints;
  hints.centers = merged_centers(fam, fam.theta0, theta);
  hints.hard_lo = fam.support_lo;
  hints.hard_hi = fam.support_hi;
  hints.drop = 60.0;
  hints.expand_cap = 1e12;
  double I = log_integral_exp(g_at(lambda), hints);
  if (std::isinf(I) && I > 0.0) {
    double ok = 0.0;
    for (double probe = 0.5 * lambda; probe > 1e-6 * lambda; probe *= 0.5) {
      if (std::isfinite(log_integral_exp(g_at(probe), hints))) {
        ok = probe;
        break;
      }
    }
    throw KramerDomain(lambda, ok);
  }
  return I + lambda * h_theta;
}

double logmgf_contrast(const ParametricFamily& fam, double theta, double lambda) {
  if (theta == fam.theta0) return 0.0;
  return logmgf_contrast(fam, theta, lambda, kl(fam, theta));
}

ParametricFamily gaussian_shift() {
  ParametricFamily f;
  f.name = "gaussian_shift";
  f.theta_lo = -30.0;
  f.theta_hi = 30.0;
  f.theta0 = 0.0;
  f.log_density = [](double x, double t) {
    double d = x - t;
    return -0.5 * kLog2Pi - 0.5 * d * d;
  };
  f.sampler = [](double t, RngStream& r) { return t + r.normal(); };
  f.quad_centers = [](double t) { return std::vector<double>{t}; };
  f.config = {{"family", "gaussian_shift"}, {"theta0", "0"}};
  return f;
}

namespace {

struct RadialTable {
  double q = 2.0;
  SlowVary R;
  double smax = 0.0;
  double log_norm = 0.0;  // log of the density normalizing constant
  std::vector<double> s, cdf;

  double g(double sv) const { return std::pow(sv, q) * R(sv); }

  double inv_cdf(double u) const {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.begin()) return s.front();
    if (it == cdf.end()) return s.back();
    std::size_t j = static_cast<std::size_t>(it - cdf.begin());
    double t = (u - cdf[j - 1]) / (cdf[j] - cdf[j - 1]);
    return s[j - 1] + t * (s[j] - s[j - 1]);
  }
};

}  // namespace

ParametricFamily spherical_unimodal(double q, SlowVary R, int m) {
  if (m != 1) throw std::invalid_argument("spherical_unimodal: only dim_param = 1 is supported");
  if (!(q > 0.0)) throw std::invalid_argument("spherical_unimodal needs q > 0");
  auto tab = std::make_shared<RadialTable>();
  tab->q = q;
  tab->R = R;
  // radial domain end: g(smax) = 46 (density mass beyond is < 1e-20)
  double hi = 1.0;
  while (tab->g(hi) < 46.0 && hi < 1e9) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 80; ++i) {
    double mid = 0.5 * (lo + hi);
    (tab->g(mid) < 46.0 ? lo : hi) = mid;
  }
  tab->smax = hi;
  double half = integrate_ladder([&](double x) { return std::exp(-tab->g(x)); }, 0.0, tab->smax,
                                 {0.0}, 1e-11, 1e-15);
  tab->log_norm = -std::log(2.0 * half);
  const int kNodes = 8193;
  tab->s.resize(kNodes);
  tab->cdf.resize(kNodes);
  double acc = 0.0, prev = std::exp(-tab->g(0.0));
  tab->s[0] = 0.0;
  tab->cdf[0] = 0.0;
  for (int i = 1; i < kNodes; ++i) {
    double sv = tab->smax * static_cast<double>(i) / (kNodes - 1);
    double fv = std::exp(-tab->g(sv));
    acc += 0.5 * (prev + fv) * (tab->smax / (kNodes - 1));
    prev = fv;
    tab->s[i] = sv;
    tab->cdf[i] = acc;
  }
  for (auto& c : tab->cdf) c /= acc;  // exact [0, 1] span for inversion

  ParametricFamily f;
  f.name = "spherical_unimodal";
  f.theta_lo = -30.0;
  f.theta_hi = 30.0;
  f.theta0 = 0.0;
  f.log_density = [tab](double x, double t) { return tab->log_norm - tab->g(std::abs(x - t)); };
  f.sampler = [tab](double t, RngStream& r) {
    double sign = r.uniform() < 0.5 ? -1.0 : 1.0;
    return t + sign * tab->inv_cdf(r.uniform());
  };
  f.quad_centers = [](double t) { return std::vector<double>{t}; };
  f.config = {{"family", "spherical_unimodal"},
              {"q", format_double(q)},
              {"R", R.describe()},
              {"m", "1"}};
  return f;
}

ParametricFamily cauchy_shift() {
  ParametricFamily f;
  f.name = "cauchy_shift";
  f.theta_lo = -200.0;
  f.theta_hi = 200.0;
  f.theta0 = 0.0;
  f.mle_grid = 2048;  // n-sample likelihood is multimodal; scan densely first
  f.log_density = [](double x, double t) {
    double d = x - t;
    return -kLogPi - std::log1p(d * d);
  };
  f.sampler = [](double t, RngStream& r) { return t + std::tan(kPi * (r.uniform() - 0.5)); };
  f.quad_centers = [](double t) { return std::vector<double>{t}; };
  f.config = {{"family", "cauchy_shift"}, {"theta0", "0"}};
  return f;
}

ParametricFamily gaussian_scale() {
  ParametricFamily f;
  f.name = "gaussian_scale";
  f.theta_lo = 1e-2;
  f.theta_hi = 64.0;
  f.theta0 = 1.0;
  f.log_density = [](double x, double t) {
    return -0.5 * (kLog2Pi + std::log(t)) - x * x / (2.0 * t);
  };
  f.sampler = [](double t, RngStream& r) { return std::sqrt(t) * r.normal(); };
  f.quad_centers = [](double) { return std::vector<double>{0.0}; };
  f.config = {{"family", "gaussian_scale"}, {"theta0", "1"}};
  return f;
}

ParametricFamily exponential_scale() {
  ParametricFamily f;
  f.name = "exponential_scale";
  f.support_lo = 0.0;
  f.theta_lo = 1e-2;
  f.theta_hi = 64.0;
  f.theta0 = 1.0;
  f.log_density = [](double x, double t) { return x < 0.0 ? -kInf : -std::log(t) - x / t; };
  f.sampler = [](double t, RngStream& r) { return t * r.exponential(); };
  f.quad_centers = [](double t) { return std::vector<double>{0.0, t}; };
  f.config = {{"family", "exponential_scale"}, {"theta0", "1"}};
  return f;
}

}  // namespace mletail

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mletail/family.hpp"
#include "mletail/quadrature.hpp"
#include "mletail/region.hpp"
#include "support/oracles.hpp"

using mletail::ContrastField;
using mletail::KramerDomain;
using mletail::LayerSchedule;
using mletail::ParametricFamily;
using mletail::PhiFunction;
using mletail::RiskRegion;
using mletail::RngStream;
using mletail::SlowVary;
using mletail::kInf;

namespace {

// Closed-form contrast log-MGFs of the scale families: the tilted integral
// t^(-a*lambda) / rho with rho = 1 + lambda (1/t - 1) per density power a.
double scale_logmgf(double t, double lambda, bool gaussian) {
  double a = gaussian ? 0.5 : 1.0;
  double rho = 1.0 + lambda * (1.0 / t - 1.0);
  double h = a * (std::log(t) + 1.0 / t - 1.0);
  return -a * lambda * std::log(t) - a * std::log(rho) + lambda * h;
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

std::vector<double> draw(const ParametricFamily& fam, double theta, int n, RngStream& rng) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = fam.sampler(theta, rng);
  return xs;
}

}  // namespace

TEST_SUITE("family") {

TEST_CASE("kl matches closed forms") {
  auto g = mletail::gaussian_shift();
  CHECK(mletail::kl(g, 0.0) == 0.0);
  for (double t : {0.5, 1.0, 2.0, -3.0})
    CHECK(mletail::kl(g, t) == doctest::Approx(0.5 * t * t).epsilon(1e-7));

  auto c = mletail::cauchy_shift();
  for (double t : {1.0, 2.0, 5.0})
    CHECK(mletail::kl(c, t) == doctest::Approx(std::log1p(t * t / 4.0)).epsilon(1e-7));

  auto gs = mletail::gaussian_scale();
  auto es = mletail::exponential_scale();
  for (double t : {0.5, 2.0, 4.0}) {
    double base = std::log(t) + 1.0 / t - 1.0;
    CHECK(mletail::kl(gs, t) == doctest::Approx(0.5 * base).epsilon(1e-7));
    CHECK(mletail::kl(es, t) == doctest::Approx(base).epsilon(1e-7));
  }

  CHECK_THROWS_AS(mletail::kl(g, 31.0), std::invalid_argument);
}

TEST_CASE("spherical kernel at q = 2 is a gaussian with variance 1/2") {
  auto f = mletail::spherical_unimodal(2.0);
  CHECK(mletail::kl(f, 0.8) == doctest::Approx(0.64).epsilon(1e-6));
  CHECK(mletail::logmgf_contrast(f, 0.8, 1.5) == doctest::Approx(1.44).epsilon(1e-6));
  CHECK_THROWS_AS(mletail::spherical_unimodal(2.0, SlowVary::konst(), 2), std::invalid_argument);
}

TEST_CASE("contrast log-MGF closed forms") {
  auto g = mletail::gaussian_shift();
  CHECK(mletail::logmgf_contrast(g, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(mletail::logmgf_contrast(g, 2.0, 3.0) == doctest::Approx(18.0).epsilon(1e-6));
  CHECK(mletail::logmgf_contrast(g, -1.5, 2.0) == doctest::Approx(4.5).epsilon(1e-6));

  auto gs = mletail::gaussian_scale();
  CHECK(mletail::logmgf_contrast(gs, 2.0, 1.2) ==
        doctest::Approx(scale_logmgf(2.0, 1.2, true)).epsilon(1e-6));
  CHECK(mletail::logmgf_contrast(gs, 0.5, 5.0) ==
        doctest::Approx(scale_logmgf(0.5, 5.0, true)).epsilon(1e-6));

  auto es = mletail::exponential_scale();
  CHECK(mletail::logmgf_contrast(es, 2.0, 1.2) ==
        doctest::Approx(scale_logmgf(2.0, 1.2, false)).epsilon(1e-6));
  CHECK(mletail::logmgf_contrast(es, 0.5, 5.0) ==
        doctest::Approx(scale_logmgf(0.5, 5.0, false)).epsilon(1e-6));

  CHECK_THROWS_AS(mletail::logmgf_contrast(g, 2.0, -0.5), std::invalid_argument);
}

TEST_CASE("contrast log-MGF at lambda = 1 equals the KL functional") {
  // log E0 exp(L0) = log(integral of f_theta) + h = h for every family
  auto c = mletail::cauchy_shift();
  auto sp = mletail::spherical_unimodal(1.5, SlowVary::logpow(1.0));
  auto es = mletail::exponential_scale();
  for (auto* fp : {&c, &sp}) {
    for (double t : {0.7, 3.0})
      CHECK(mletail::logmgf_contrast(*fp, t, 1.0) ==
            doctest::Approx(mletail::kl(*fp, t)).epsilon(1e-5));
  }
  CHECK(mletail::logmgf_contrast(es, 2.5, 1.0) ==
        doctest::Approx(mletail::kl(es, 2.5)).epsilon(1e-5));
}

TEST_CASE("contrast log-MGF is convex and centered") {
  auto c = mletail::cauchy_shift();
  double h = mletail::kl(c, 4.0);
  double prev = 0.0, prev_slope = -kInf;
  for (double l : {0.25, 0.5, 0.75, 1.0, 1.25, 1.5}) {
    double cur = mletail::logmgf_contrast(c, 4.0, l, h);
    double slope = (cur - prev) / 0.25;
    CHECK(slope >= prev_slope - 1e-8);
    prev = cur;
    prev_slope = slope;
  }
  // centering: slope at 0 vanishes, so small-lambda values are quadratic
  CHECK(std::abs(mletail::logmgf_contrast(c, 4.0, 1e-4, h)) < 1e-6);
}

TEST_CASE("Kramer domain edges of the scale families") {
  auto gs = mletail::gaussian_scale();
  // t > 1 diverges at lambda0 = t/(t-1); t = 4 gives 4/3
  CHECK(std::isfinite(mletail::logmgf_contrast(gs, 4.0, 1.3)));
  CHECK(mletail::logmgf_contrast(gs, 4.0, 1.3) ==
        doctest::Approx(scale_logmgf(4.0, 1.3, true)).epsilon(1e-5));
  try {
    mletail::logmgf_contrast(gs, 4.0, 2.0);
    FAIL("expected KramerDomain");
  } catch (const KramerDomain& e) {
    CHECK(e.lambda_failed == 2.0);
    CHECK(e.lambda_ok == 1.0);  // first backoff probe, inside the domain
  }

  auto es = mletail::exponential_scale();
  CHECK(std::isfinite(mletail::logmgf_contrast(es, 3.0, 1.4)));
  CHECK_THROWS_AS(mletail::logmgf_contrast(es, 3.0, 1.6), KramerDomain);
}

TEST_CASE("densities normalize to one") {
  auto check_mass = [](const ParametricFamily& fam, double theta) {
    auto w = mletail::density_window(fam, theta, 60.0);
    double mass = mletail::integrate(
        [&](double x) { return std::exp(fam.log_density(x, theta)); }, w.first, w.second, 1e-10,
        1e-12);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  };
  check_mass(mletail::gaussian_shift(), 1.3);
  check_mass(mletail::gaussian_scale(), 2.5);
  check_mass(mletail::exponential_scale(), 0.8);
  check_mass(mletail::spherical_unimodal(4.0), 0.7);
  check_mass(mletail::spherical_unimodal(1.5, SlowVary::logpow(1.0, 1.0)), 0.0);
}

TEST_CASE("samplers match their densities (Kolmogorov-Smirnov)") {
  const int n = 20000;
  const double tol = 0.015;  // ~1.95/sqrt(n) is the 0.001-level critical value
  RngStream rng(20260825, 0);

  auto g = mletail::gaussian_shift();
  CHECK(ks_statistic(draw(g, 1.3, n, rng),
                     [](double x) { return oracle::normal_cdf(x - 1.3); }) < tol);

  auto gs = mletail::gaussian_scale();
  CHECK(ks_statistic(draw(gs, 2.5, n, rng), [](double x) {
          return oracle::normal_cdf(x / std::sqrt(2.5));
        }) < tol);

  auto es = mletail::exponential_scale();
  CHECK(ks_statistic(draw(es, 0.8, n, rng), [](double x) {
          return x < 0.0 ? 0.0 : 1.0 - std::exp(-x / 0.8);
        }) < tol);

  auto c = mletail::cauchy_shift();
  CHECK(ks_statistic(draw(c, -2.0, n, rng), [](double x) {
          return 0.5 + std::atan(x + 2.0) / 3.141592653589793;
        }) < tol);

  // numeric CDF for the quartic kernel (no closed form)
  auto sp = mletail::spherical_unimodal(4.0);
  const double smax = std::pow(46.0, 0.25);
  const int m = 32001;
  std::vector<double> xs(m), cdf(m);
  double acc = 0.0, prev = std::exp(sp.log_density(0.7 - smax, 0.7));
  for (int i = 0; i < m; ++i) {
    xs[i] = 0.7 - smax + 2.0 * smax * i / (m - 1);
    double f = std::exp(sp.log_density(xs[i], 0.7));
    if (i > 0) acc += 0.5 * (prev + f) * (2.0 * smax / (m - 1));
    prev = f;
    cdf[i] = acc;
  }
  for (auto& v : cdf) v /= acc;
  CHECK(ks_statistic(draw(sp, 0.7, n, rng), [&](double x) {
          auto it = std::lower_bound(xs.begin(), xs.end(), x);
          if (it == xs.begin()) return 0.0;
          if (it == xs.end()) return 1.0;
          std::size_t j = static_cast<std::size_t>(it - xs.begin());
          double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
          return cdf[j - 1] + t * (cdf[j] - cdf[j - 1]);
        }) < tol);
}

TEST_CASE("random streams are reproducible and decorrelated") {
  RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  bool same = true, diff_stream = false, diff_seed = false;
  for (int i = 0; i < 5; ++i) {
    double va = a.uniform();
    if (va != b.uniform()) same = false;
    if (va != c.uniform()) diff_stream = true;
    if (va != d.uniform()) diff_seed = true;
  }
  CHECK(same);
  CHECK(diff_stream);
  CHECK(diff_seed);

  RngStream e(123, 9);
  double mean = 0.0;
  for (int i = 0; i < 4000; ++i) mean += e.normal();
  CHECK(std::abs(mean / 4000.0) < 0.05);
}

TEST_CASE("risk regions: segments, grids, endpoints") {
  auto g = mletail::gaussian_shift();
  auto full = RiskRegion::full(g, 1.0);
  REQUIRE(full.segments.size() == 2);
  CHECK(full.segments[0].first == -30.0);
  CHECK(full.segments[0].second == -1.0);
  CHECK(full.segments[1].first == 1.0);
  CHECK(full.segments[1].second == 30.0);
  CHECK(full.grid.front() == -30.0);
  CHECK(full.grid.back() == 30.0);
  CHECK(std::binary_search(full.grid.begin(), full.grid.end(), 1.0));
  CHECK(full.grid.size() >= 500);
  for (double t : full.grid) CHECK(std::abs(t) >= 1.0);

  auto lay = RiskRegion::layer(g, 1.0, 1, LayerSchedule::identity());
  REQUIRE(lay.segments.size() == 2);
  CHECK(lay.segments[1].first == 1.0);
  CHECK(lay.segments[1].second == 2.0);
  CHECK(lay.layer_index == 1);
  CHECK(lay.r_lo == 1.0);
  CHECK(lay.r_hi == 2.0);

  auto clipped = RiskRegion::layer(g, 20.0, 1, LayerSchedule::identity());
  REQUIRE(clipped.segments.size() == 2);
  CHECK(clipped.segments[1].second == 30.0);

  CHECK(RiskRegion::full(g, 31.0).empty());
  CHECK(RiskRegion::layer(g, 40.0, 1, LayerSchedule::identity()).empty());

  auto sched = LayerSchedule::power(0.4);
  CHECK(sched(1) == 1.0);
  CHECK(sched(2) == doctest::Approx(std::pow(2.0, 0.4)));
  CHECK_THROWS_AS(LayerSchedule::power(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(sched(0), std::invalid_argument);

  // generic (non-interval) risk falls back to a dense scan
  auto q = mletail::gaussian_shift();
  q.euclid_risk = false;
  q.risk_fn = [](double a, double b) { return (a - b) * (a - b); };
  auto fq = RiskRegion::full(q, 4.0);
  REQUIRE(fq.segments.size() == 2);
  CHECK(fq.segments[1].first == doctest::Approx(2.0).epsilon(0.02));
  CHECK(fq.segments[1].second == 30.0);

  auto unbounded = mletail::gaussian_shift();
  unbounded.theta_hi = kInf;
  CHECK_THROWS_AS(RiskRegion::full(unbounded, 1.0), std::invalid_argument);
}

TEST_CASE("region exponent Y(v)") {
  auto g = mletail::gaussian_shift();
  CHECK(mletail::y_of_v(RiskRegion::full(g, 1.0)) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(mletail::y_of_v(RiskRegion::full(g, 2.0)) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(mletail::y_of_v(RiskRegion::layer(g, 1.0, 2, LayerSchedule::identity())) ==
        doctest::Approx(2.0).epsilon(1e-6));

  auto c = mletail::cauchy_shift();
  CHECK(mletail::y_of_v(RiskRegion::full(c, 2.0)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-6));

  // strictly increasing in v
  double y1 = mletail::y_of_v(RiskRegion::full(g, 0.8));
  double y2 = mletail::y_of_v(RiskRegion::full(g, 1.3));
  double y3 = mletail::y_of_v(RiskRegion::full(g, 2.1));
  CHECK(y1 < y2);
  CHECK(y2 < y3);

  // two-sided region: the shallow side wins
  auto es = mletail::exponential_scale();
  double lo_side = std::log(0.5) + 2.0 - 1.0;
  double hi_side = std::log(1.5) + 1.0 / 1.5 - 1.0;
  CHECK(mletail::y_of_v(RiskRegion::full(es, 0.5)) ==
        doctest::Approx(std::min(lo_side, hi_side)).epsilon(1e-5));

  auto empty = RiskRegion::full(g, 31.0);
  CHECK_THROWS_AS(mletail::y_of_v(empty), std::logic_error);
}

TEST_CASE("natural kernel over a layer") {
  auto g = mletail::gaussian_shift();
  auto lay = RiskRegion::layer(g, 1.0, 1, LayerSchedule::identity());
  ContrastField field(g, lay.grid);
  CHECK(field.lambda_cap() == 8.0);

  PhiFunction phi = mletail::natural_phi(field);
  CHECK(phi(0.0) == 0.0);
  CHECK(!phi.hard_end());
  CHECK(phi.eval_top() == doctest::Approx(8.0));
  // sup over |u| in [1,2] of lambda^2 u^2 / 2 = 2 lambda^2 (chords only
  // over-state, so the tabulated kernel sits within half a percent above)
  for (double l : {0.25, 1.0, 3.0}) {
    CHECK(phi(l) >= 2.0 * l * l * (1.0 - 1e-9));
    CHECK(phi(l) <= 2.0 * l * l * 1.01);
  }

  // dominance against the adaptive-quadrature log-MGF
  for (double t : {1.0, 1.37, 2.0})
    for (double l : {0.3, 1.7})
      CHECK(mletail::logmgf_contrast(g, t, l) <= phi(l) * 1.005 + 1e-9);

  // the field is its own unit ball: sup norm under its natural kernel is 1
  CHECK(mletail::tau_sup(field, phi) == doctest::Approx(1.0).epsilon(5e-3));

  // singleton grid: the kernel is that member's own log-MGF, 1.125 lambda^2
  ContrastField single(g, {1.5});
  PhiFunction sphi = mletail::natural_phi(single);
  CHECK(sphi(0.8) == doctest::Approx(1.125 * 0.64).epsilon(0.01));
}

TEST_CASE("natural kernel detects a hard Kramer edge") {
  auto gs = mletail::gaussian_scale();
  auto lay = RiskRegion::layer(gs, 1.0, 1, LayerSchedule::identity());  // t in [2, 3]
  ContrastField field(gs, lay.grid);
  PhiFunction phi = mletail::natural_phi(field);
  CHECK(phi.hard_end());
  // domain end is min over the grid of t/(t-1) = 1.5, detected within the
  // bisection margin and then pulled back by 5 percent
  CHECK(phi.eval_top() > 1.30);
  CHECK(phi.eval_top() < 1.45);
  CHECK(std::isinf(phi(2.0)));
}

TEST_CASE("field log-MGFs agree with adaptive quadrature") {
  auto g = mletail::gaussian_shift();
  ContrastField fg(g, {0.7, 2.0});
  CHECK(fg.logmgf(1, 5.0) == doctest::Approx(50.0).epsilon(1e-4));
  CHECK(fg.logmgf(0, 0.5) == doctest::Approx(0.25 * 0.49 / 2.0).epsilon(1e-4));
  CHECK(fg.h(1) == doctest::Approx(2.0).epsilon(1e-5));

  auto c = mletail::cauchy_shift();
  ContrastField fc(c, {5.0});
  for (double l : {0.5, 2.0})
    CHECK(fc.logmgf(0, l) == doctest::Approx(mletail::logmgf_contrast(c, 5.0, l))
                                 .epsilon(5e-4));
  CHECK(fc.h(0) == doctest::Approx(std::log1p(25.0 / 4.0)).epsilon(1e-4));

  auto es = mletail::exponential_scale();
  ContrastField fe(es, {0.5, 2.0});
  CHECK(fe.logmgf(0, 0.8) == doctest::Approx(scale_logmgf(0.5, 0.8, false)).epsilon(1e-4));
  CHECK(fe.logmgf(1, 1.2) == doctest::Approx(scale_logmgf(2.0, 1.2, false)).epsilon(1e-4));

  auto gs = mletail::gaussian_scale();
  ContrastField fs(gs, {2.0});
  CHECK(fs.logmgf(0, 1.2) == doctest::Approx(scale_logmgf(2.0, 1.2, true)).epsilon(1e-4));
  CHECK(std::isinf(fs.logmgf(0, 2.5)));  // lambda0 = 2 for t = 2

  // zero at lambda = 0 exactly, for every member
  CHECK(fg.logmgf(0, 0.0) == 0.0);
  CHECK(fe.logmgf_diff(0, 1, 0.0) == 0.0);
}

TEST_CASE("natural distances: gaussian golden, symmetry, triangle") {
  auto g = mletail::gaussian_shift();
  PhiFunction gauss = PhiFunction::gaussian();
  CHECK(mletail::natural_distance(g, 1.0, 2.4, gauss) == doctest::Approx(1.4).epsilon(1e-6));
  CHECK(mletail::natural_distance(g, 2.4, 1.0, gauss) == doctest::Approx(1.4).epsilon(1e-6));

  ContrastField field(g, {1.0, 1.6, 2.4});
  CHECK(mletail::field_distance(field, 0, 2, gauss) == doctest::Approx(1.4).epsilon(0.01));
  CHECK(mletail::field_distance(field, 0, 2, gauss) ==
        mletail::field_distance(field, 2, 0, gauss));
  double d01 = mletail::field_distance(field, 0, 1, gauss);
  double d12 = mletail::field_distance(field, 1, 2, gauss);
  double d02 = mletail::field_distance(field, 0, 2, gauss);
  CHECK(d02 <= (d01 + d12) * (1.0 + 1e-9));

  auto c = mletail::cauchy_shift();
  ContrastField fc(c, {2.0, 5.0, 9.0});
  double c02 = mletail::field_distance(fc, 0, 2, gauss);
  double c01 = mletail::field_distance(fc, 0, 1, gauss);
  double c12 = mletail::field_distance(fc, 1, 2, gauss);
  CHECK(c02 <= (c01 + c12) * (1.0 + 1e-9));
  CHECK(c02 == doctest::Approx(mletail::natural_distance(c, 2.0, 9.0, gauss)).epsilon(5e-3));
}

TEST_CASE("tau_sup against a fixed kernel reaches the layer edge") {
  auto g = mletail::gaussian_shift();
  auto lay = RiskRegion::layer(g, 2.0, 1, LayerSchedule::identity());  // |u| in [2, 4]
  ContrastField field(g, lay.grid);
  // per-member norm under the standard gaussian kernel is |u|
  CHECK(mletail::tau_sup(field, PhiFunction::gaussian()) == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("grid resolution does not move the answers") {
  auto g = mletail::gaussian_shift();
  double ya = mletail::y_of_v(RiskRegion::full(g, 1.3, 512));
  double yb = mletail::y_of_v(RiskRegion::full(g, 1.3, 1024));
  CHECK(ya == doctest::Approx(yb).epsilon(1e-8));

  auto la = RiskRegion::layer(g, 1.0, 1, LayerSchedule::identity(), 512);
  auto lb = RiskRegion::layer(g, 1.0, 1, LayerSchedule::identity(), 1024);
  double pa = mletail::natural_phi(ContrastField(g, la.grid))(0.9);
  double pb = mletail::natural_phi(ContrastField(g, lb.grid))(0.9);
  CHECK(pa == doctest::Approx(pb).epsilon(5e-3));
}

TEST_CASE("density windows bracket the mass") {
  auto g = mletail::gaussian_shift();
  auto w = mletail::density_window(g, 0.0, 65.0);
  CHECK(w.first < -11.0);
  CHECK(w.first > -26.0);
  CHECK(w.second > 11.0);
  CHECK(w.second < 26.0);

  auto es = mletail::exponential_scale();
  auto we = mletail::density_window(es, 1.0, 65.0);
  CHECK(we.first == 0.0);  // clipped at the support end
  CHECK(we.second >= 65.0);
  CHECK(we.second < 140.0);
}

TEST_CASE("slow variation factors") {
  auto k = SlowVary::konst(2.5);
  CHECK(k(17.0) == 2.5);
  auto lp = SlowVary::logpow(2.0, 1.0);
  CHECK(lp(0.0) ==
        doctest::Approx(std::pow(std::log(3.0), 2.0) * std::log(std::log(16.0))));
  CHECK(lp.describe() == "logpow(2,1)");
  CHECK(k.describe() == "const(2.5)");
}

}  // TEST_SUITE

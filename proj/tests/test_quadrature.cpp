#include <doctest.h>

#include <cmath>

#include "mletail/quadrature.hpp"
#include "support/oracles.hpp"

TEST_SUITE("quadrature") {

TEST_CASE("signed adaptive integral on closed forms") {
  // [oracle] integral of x^2 on [0,3] = 9
  CHECK(mletail::integrate([](double x) { return x * x; }, 0.0, 3.0) ==
        doctest::Approx(9.0).epsilon(1e-10));
  // [oracle] integral of sin on [0, pi] = 2
  CHECK(mletail::integrate([](double x) { return std::sin(x); }, 0.0, M_PI) ==
        doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("log_integral_exp: gaussian mass") {
  // integral of exp(-x^2/2) over R is sqrt(2 pi)
  mletail::LogIntegralHints h;
  h.centers = {0.0};
  double v = mletail::log_integral_exp([](double x) { return -0.5 * x * x; }, h);
  CHECK(v == doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-9));
}

TEST_CASE("log_integral_exp: widely separated bumps") {
  // two unit gaussians 200 apart: integral = 2 sqrt(2 pi)
  auto g = [](double x) {
    double a = -0.5 * x * x;
    double b = -0.5 * (x - 200.0) * (x - 200.0);
    return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
  };
  mletail::LogIntegralHints h;
  h.centers = {0.0, 200.0};
  double v = mletail::log_integral_exp(g, h);
  CHECK(v == doctest::Approx(std::log(2.0) + 0.5 * std::log(2.0 * M_PI)).epsilon(1e-8));
}

TEST_CASE("log_integral_exp: heavy polynomial tail") {
  // cauchy density integrates to 1 even though the support expansion must
  // run out to ~1e9 before the tail drops 55 nats
  auto g = [](double x) { return -std::log(M_PI) - std::log1p(x * x); };
  mletail::LogIntegralHints h;
  h.centers = {0.0};
  double v = mletail::log_integral_exp(g, h);
  CHECK(v == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("log_integral_exp: hard support end and tiny scale") {
  // exp(-x) on [0, inf): integral 1
  mletail::LogIntegralHints h;
  h.centers = {0.0};
  h.hard_lo = 0.0;
  double v = mletail::log_integral_exp([](double x) { return -x; }, h);
  CHECK(v == doctest::Approx(0.0).epsilon(1e-8));
  // narrow gaussian at 7: width 1e-3
  mletail::LogIntegralHints h2;
  h2.centers = {7.0};
  double v2 = mletail::log_integral_exp(
      [](double x) { return -0.5 * (x - 7.0) * (x - 7.0) * 1e6; }, h2);
  CHECK(v2 == doctest::Approx(0.5 * std::log(2.0 * M_PI) - std::log(1e3)).epsilon(1e-7));
}

TEST_CASE("log_integral_exp: divergence signal") {
  // exp(+x) over R diverges
  mletail::LogIntegralHints h;
  h.centers = {0.0};
  h.expand_cap = 1e6;
  double v = mletail::log_integral_exp([](double x) { return x; }, h);
  CHECK(std::isinf(v));
  CHECK(v > 0);
}

}  // TEST_SUITE

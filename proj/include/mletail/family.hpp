#pragma once
// Parametric observation families: log-densities, samplers, risk, the
// Kullback-Leibler functional h, and log-MGFs of the centered contrast field
//
//   L0(xi, theta) = log[f(xi,theta)/f(xi,theta0)] + h(theta),
//
// where h(theta) = KL(theta0 || theta) >= 0, so that E L0 = 0 under theta0.
// All built-ins are one-parameter families on a 1-d observation space.

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mletail/phi.hpp"
#include "mletail/rng.hpp"

namespace mletail {

// Slowly varying factor in spherical kernels: [log(x+3)]^r [loglog(x+16)]^s,
// or a constant.
struct SlowVary {
  bool constant = true;
  double c = 1.0;
  double r = 0.0, s = 0.0;
  double operator()(double x) const;
  std::string describe() const;
  static SlowVary konst(double value = 1.0);
  static SlowVary logpow(double r, double s = 0.0);
};

struct ParametricFamily {
  std::string name;
  int dim_param = 1;
  double theta_lo = -kInf, theta_hi = kInf;  // parameter box
  double theta0 = 0.0;
  double support_lo = -kInf, support_hi = kInf;  // observation support
  bool euclid_risk = true;  // risk is |a - b|, enabling exact annulus grids
  int mle_grid = 512;       // global-search grid size (denser for multimodal fits)

  std::function<double(double, double)> log_density;  // (x, theta)
  std::function<double(double, RngStream&)> sampler;  // theta -> observation
  std::function<double(double, double)> risk_fn;      // empty => |a - b|
  std::function<std::vector<double>(double)> quad_centers;  // density peaks

  // resolved key = value descriptors echoed into run artifacts
  std::vector<std::pair<std::string, std::string>> config;

  double risk(double a, double b) const;
  bool contains(double theta) const { return theta >= theta_lo && theta <= theta_hi; }
};

ParametricFamily gaussian_shift();
// f(x,theta) ~ exp(-|x-theta|^q * R(|x-theta|)), normalized by quadrature
ParametricFamily spherical_unimodal(double q, SlowVary R = SlowVary::konst(), int m = 1);
ParametricFamily cauchy_shift();
ParametricFamily gaussian_scale();     // N(0, theta), theta = variance, theta0 = 1
ParametricFamily exponential_scale();  // mean-theta exponential, theta0 = 1

// "outside Kramer domain": the contrast MGF integral diverges at the
// requested lambda.  lambda_ok is the largest lambda verified finite
// (0 when none was found).
class KramerDomain : public std::runtime_error {
 public:
  KramerDomain(double lambda_failed, double lambda_ok);
  double lambda_failed;
  double lambda_ok;
};

// Observation window outside which exp(log_density) is negligible: expand
// from the density peaks until log f drops `drop` nats below the best peak,
// clipped to the support.
std::pair<double, double> density_window(const ParametricFamily& fam, double theta, double drop);

// h(theta) = KL(theta0 || theta) by adaptive quadrature (relative 1e-9).
double kl(const ParametricFamily& fam, double theta);

// log E exp(lambda * L0(xi, theta)) under theta0, by adaptive quadrature of
// the Hellinger-type integral plus the lambda * h(theta) centering term.
// Convex in lambda, zero at lambda = 0.  Throws KramerDomain on divergence.
double logmgf_contrast(const ParametricFamily& fam, double theta, double lambda);
double logmgf_contrast(const ParametricFamily& fam, double theta, double lambda, double h_theta);

}  // namespace mletail

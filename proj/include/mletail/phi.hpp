#pragma once
// Young-type rate kernels and their Legendre transforms.
//
// A kernel phi is convex, nondecreasing on [0, lambda0) with phi(0) = 0.
// Everything downstream (Chernoff tails, Orlicz-style norms, chained
// supremum bounds) is driven by four operations implemented here:
//
//   conjugate(phi, x)      sup_{lambda} [lambda*x - phi(lambda)]
//   rescale_n(phi, n)      lambda -> n * phi(lambda / sqrt(n))
//   phi_bar(phi, n_max)    pointwise sup of rescale_n over n <= n_max
//   bphi_norm(l, phi)      least tau with l(lambda) <= phi(lambda*tau) for all lambda
//
// Kernels with a finite domain end lambda0 are treated as +infinity at and
// beyond lambda0 (the usual closure of a Young function).  Tabulated kernels
// are convex piecewise-linear interpolants; evaluation beyond the table is an
// error unless the table end is a genuine domain end.

#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mletail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Raised when phi_bar is requested for a kernel whose rescale family is
// unbounded above (e.g. phi(lambda) = lambda).
class PhiBarDivergent : public std::runtime_error {
 public:
  explicit PhiBarDivergent(const std::string& what) : std::runtime_error(what) {}
};

class PhiFunction {
 public:
  enum class Kind { Gaussian, Power, TruncatedGaussian, Tabulated };

  // lambda^2 / 2 on [0, inf)
  static PhiFunction gaussian();
  // coeff * lambda^q on [0, inf), q >= 1; power(q) gives lambda^q / q
  static PhiFunction power(double q);
  static PhiFunction power(double q, double coeff);
  // lambda^2 / 2 on [0, lambda0), +inf beyond
  static PhiFunction truncated_gaussian(double lambda0);
  // Convex piecewise-linear table.  Grid must start at 0 with value 0 and be
  // strictly increasing; values must be nondecreasing and convex (small
  // quadrature noise is repaired, genuine violations are rejected).
  // hard_end marks the last grid point as a true domain end (+inf beyond);
  // otherwise the table is merely truncated and evaluation past it throws.
  static PhiFunction tabulated(std::vector<double> lambdas, std::vector<double> values,
                               bool hard_end = false);

  Kind kind() const { return kind_; }
  // Domain end lambda0 (+inf if the kernel is finite everywhere).
  double lambda0() const { return lambda0_; }
  // Last argument at which the kernel is evaluable (table end for soft
  // tabulated kernels, +inf for closed forms).
  double eval_top() const;
  // sup of phi over its domain (+inf unless the kernel is bounded).
  double sup_value() const;
  bool hard_end() const { return hard_end_; }
  // Parameters of a Power kernel (logic_error for other kinds).
  double power_exponent() const;
  double power_coeff() const;

  double operator()(double lambda) const;

  // Least lambda with phi(lambda) >= y.  Beyond the kernel's range the
  // policy decides: HardClosure returns the domain end (matching the +inf
  // closure), LinearExtend continues with the final slope (a conservative
  // under-estimate of phi, hence an over-estimate of the inverse), Throw
  // raises out_of_range.
  enum class Beyond { HardClosure, LinearExtend, Throw };
  double inverse_lower(double y, Beyond policy = Beyond::HardClosure) const;

  const std::vector<double>& table_lambdas() const;
  const std::vector<double>& table_values() const;

  // Two-column CSV (lambda,phi).  Closed-form kernels need an explicit grid.
  void save_csv(const std::string& path) const;
  void save_csv(const std::string& path, const std::vector<double>& lambdas) const;
  static PhiFunction load_csv(const std::string& path);

 private:
  PhiFunction() = default;
  Kind kind_ = Kind::Gaussian;
  double q_ = 2.0;
  double coeff_ = 0.5;
  double lambda0_ = kInf;
  bool hard_end_ = false;
  std::vector<double> tab_lambda_, tab_value_;
};

// Young-Fenchel transform phi*(x) = sup_{lambda in dom} [lambda*x - phi(lambda)],
// x >= 0.  Concave inner objective; solved by a 64-point coarse grid plus
// golden-section refinement.  Returns +inf when the objective is unbounded
// (kernel with asymptotic slope <= x).  For tabulated kernels the sup runs
// over the tabulated domain only, which can only under-state phi* and hence
// keeps every exp(-phi*) tail bound valid.
double conjugate(const PhiFunction& phi, double x);

// lambda -> n * phi(lambda / sqrt(n)); exact structural transform for every
// kernel kind (n >= 1).
PhiFunction rescale_n(const PhiFunction& phi, int n);

// Pointwise sup of rescale_n(phi, n) over 1 <= n <= n_max.  The domain never
// grows: the n = 1 term already ends where phi ends.  Closed forms are
// resolved analytically; tabulated kernels take an honest max over n on their
// own grid.  Throws PhiBarDivergent when the sup grows without bound
// (sub-quadratic behaviour near lambda = 0).
PhiFunction phi_bar(const PhiFunction& phi, int n_max = 4096);

// Least tau >= 0 with logmgf(lambda) <= phi(lambda * tau) for every probe
// lambda, probed on a 256-point log-spaced grid over (0, 0.99*lambda_probe].
// Feasibility in tau is monotone (phi nondecreasing), so the least tau is
// max over probes of inverse_lower(logmgf(lambda)) / lambda.  Returns +inf
// when no finite tau works (the "norm infinite" signal).
double bphi_norm(const std::function<double(double)>& logmgf, const PhiFunction& phi,
                 double lambda_probe);

// Chernoff tail exp(-phi*(x / tau)) for a variable of norm tau.
double tail_from_norm(const PhiFunction& phi, double tau, double x);

// Tail of a normalised n-term sum: exp(-(rescale_n(phi, n))*(x)).
double chernoff_sum_tail(const PhiFunction& phi, int n, double x);

// Two-branch envelope min(exp(-c_weibull * x^q * R(x)), exp(-c_gauss * x^2)).
struct TailEnvelope {
  double q = 1.0;
  double c_weibull = 1.0;
  double c_gauss = 1.0;
  std::function<double(double)> slowvary;  // R; identity 1 when empty

  double log_value(double x) const;  // log of the envelope (<= 0)
  double operator()(double x) const;
};

double lemma31_envelope(double q, const std::function<double(double)>& slowvary,
                        double c_weibull, double c_gauss, double x);

// Moment growth bound p / phi_bar^{-1}(p).  Throws out_of_range when p lies
// beyond the tabulated range of a soft-ended kernel.
double moment_bound(const PhiFunction& phi_bar, double p);

}  // namespace mletail

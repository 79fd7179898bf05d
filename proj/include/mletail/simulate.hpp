#pragma once
// Monte Carlo ground truth: maximum-likelihood fitting, empirical deviation
// tails with Wilson intervals, dominance comparison against bound curves,
// and normalized-sum tail experiments with two-branch envelope fits.

#include <cstdint>
#include <string>
#include <vector>

#include "mletail/bounds.hpp"
#include "mletail/family.hpp"

namespace mletail {

// Two-sided 99% normal quantile used for every Wilson interval.
inline constexpr double kZ99 = 2.5758293035489004;

struct WilsonInterval {
  double lo = 0.0, hi = 1.0;
};
// Wilson score interval for k successes in n trials at confidence z.
WilsonInterval wilson_interval(std::int64_t k, std::int64_t n, double z = kZ99);

// One Monte Carlo run description.  `scaled` multiplies each replication's
// risk by sqrt(n) so tails at different n live on a common axis.
struct SimulationPlan {
  const ParametricFamily* family = nullptr;
  int n = 1;                    // observations per replication
  std::int64_t replications = 0;  // >= 100
  std::vector<double> v_grid;     // increasing, positive
  std::uint64_t master_seed = 0;
  bool scaled = false;
};

// Exceedance counts and interval estimates per v.  Estimates use the valid
// replication count (aborted replications are excluded from the denominator
// and reported); the run fails outright when aborts exceed 0.1%.
struct EmpiricalTail {
  std::vector<double> v_grid;
  std::vector<std::int64_t> exceed_counts;
  std::vector<double> estimates;   // nonincreasing in v
  std::vector<double> wilson_lo, wilson_hi;  // 99% score intervals
  std::int64_t replications = 0;   // planned
  std::int64_t aborted = 0;        // invalid-sample replications
  double boundary_fraction = 0.0;  // fits within 1% of the box width of an edge

  void save_csv(const std::string& path) const;  // v,estimate,wilson_lo,wilson_hi,count
  void save_json(const std::string& path) const;
};

// Fit the maximum-likelihood parameter for one sample: global grid search
// over the (bounded) parameter box, then golden-section refinement of the
// bracketing cell to width 1e-8 x box width.  Likelihood ties break toward
// the smallest risk to theta0.  Throws invalid_argument on an empty sample
// or an observation outside the support, runtime_error when the whole grid
// has log-likelihood -inf.
double mle_fit(const ParametricFamily& fam, const std::vector<double>& sample);

// Run the plan: replication r draws its own child stream from
// (master_seed, r), so results are bit-identical for any worker count.
EmpiricalTail empirical_tail(const SimulationPlan& plan, int workers = 1);

// Least-squares line of -log(tail) against one declared covariate.
struct SlopeFit {
  std::string covariate;  // "v", "v2", or "logv"
  double slope = 0.0, intercept = 0.0;
  int points = 0;
  bool fitted = false;  // >= 2 usable points with covariate spread
};

// Per-v dominance verdicts plus decay-slope fits for both curves.
struct ComparisonReport {
  struct Row {
    double v = 0.0;
    double bound = 0.0;    // meaningless when gap
    double estimate = 0.0;
    double wilson_lo = 0.0, wilson_hi = 1.0;
    std::int64_t count = 0;
    bool gap = false;        // bound unavailable at this v
    bool violation = false;  // bound < wilson_lo
  };
  std::vector<Row> rows;
  int violations = 0;
  int gaps = 0;
  std::vector<SlopeFit> bound_fits, empirical_fits;
  std::string verdict;  // "PASS" iff zero violations

  void save_csv(const std::string& path) const;
  // v,bound,estimate,wilson_lo,wilson_hi,count,violation
  void save_json(const std::string& path) const;
};

// Dominance check of a bound curve against an empirical tail on the same
// v grid (exact match required).
ComparisonReport compare(const TailCurve& curve, const EmpiricalTail& tail);

// Normalized-sum experiment: eta(i) symmetric with exact two-sided tail
// P(|eta| > x) = exp(-x^q R(x)) by inverse-CDF construction, partial sums
// zeta(n) = n^{-1/2} sum_{i<=n} eta(i) recorded at the marks in n_set.
struct SumTailPlan {
  double q = 1.0;  // in (0, 2]
  SlowVary slowvary = SlowVary::konst();
  std::vector<int> n_set;        // strictly increasing, >= 1
  std::vector<double> x_grid;    // increasing, positive
  std::int64_t replications = 0;  // >= 100
  std::uint64_t master_seed = 0;
};

struct SumTailBranch {
  std::string covariate;  // "x^q R(x)" or "x^2"
  double c = 0.0;         // fitted exponent constant
  double c_ls = 0.0;      // unconstrained least-squares value
  double c_cap = 0.0;     // largest constant dominating every Wilson lower limit
  int points = 0;         // fit points used
  bool fitted = false;
};

// Per-n and max-over-n empirical tails of |zeta(n)|, the fitted two-branch
// envelope min(exp(-c1 x^q R(x)), exp(-c2 x^2)), and its verification:
// the upper envelope must clear every Wilson lower limit; the lower
// envelope (constants x4) must fall below every Wilson upper limit.
struct SumTailReport {
  double q = 0.0;
  std::string slowvary;
  std::vector<int> n_set;
  std::vector<double> x_grid;
  std::int64_t replications = 0;
  std::uint64_t master_seed = 0;

  std::vector<std::vector<std::int64_t>> counts;  // [n index][x index]
  std::vector<std::vector<double>> estimates, wilson_lo, wilson_hi;
  std::vector<double> max_estimate, max_wilson_lo, max_wilson_hi;  // per x

  SumTailBranch weibull, gauss;
  int upper_violations = 0;
  int lower_violations = 0;
  std::string verdict;  // "PASS" iff both envelope checks are clean

  void save_json(const std::string& path) const;
};

SumTailReport sum_tail_experiment(const SumTailPlan& plan, int workers = 1);

}  // namespace mletail

#pragma once
// Tail-bound pipelines: compact-region chaining, risk-layer partition sums,
// the smooth-case series with computed constants, n-sample rescaling, and
// bound curves over a deviation grid.

#include <string>
#include <utility>
#include <vector>

#include "mletail/chaining.hpp"
#include "mletail/family.hpp"
#include "mletail/phi.hpp"
#include "mletail/region.hpp"

namespace mletail {

// One evaluated bound with the diagnostics carried into run artifacts.
struct BoundResult {
  double value = 1.0;        // in [0, 1] once clamped by the pipeline
  bool available = false;
  bool exact_empty = false;  // region empty: the tail is exactly zero
  std::string reason;        // failure reason when not available
  double y = kInf;           // smallest region exponent (min KL) seen
  double tau = 0.0;          // largest contrast-norm sup seen
  double delta_star = 0.0;   // optimizing delta of the dominant piece
  int layers = 0;            // non-empty pieces evaluated
  int truncation_m = 0;      // chaining series terms of the dominant piece
  std::vector<std::string> flags;
  std::vector<std::pair<std::string, std::string>> extras;  // named diagnostics
};

// Chained bound on the full region U(v): natural kernel, tau normalization,
// entropy of the chain metric, optimized delta.  Parameter box must be
// bounded.
BoundResult bound_compact(const ParametricFamily& fam, double v, int points = 512);

// Sum of per-layer chained bounds over risk layers [A(k) v, A(k+1) v], each
// with its own natural kernel and normalization.  Also evaluates the trivial
// one-block partition (when the box is bounded) and reports the smaller
// value.  A partition cut short at k_max is only accepted when the layer
// terms are decaying, and a geometric tail estimate is added.
BoundResult bound_partition(const ParametricFamily& fam, double v,
                            LayerSchedule schedule = LayerSchedule::identity(), int k_max = 64,
                            int points = 512);

// Smooth-case series: per-layer tau_k, Y_k condense into the computed
// constants C2 = max tau_k / ((k+1) v) and C3 = min Y_k / (k v)^2, and the
// bound is the series sum_k exp(-phi*((C3/C2) v k^2/(k+1))) under the
// innermost layer's natural kernel.  Requires v >= 1; condition checks that
// fail are flagged, not fatal.
BoundResult bound_smooth(const ParametricFamily& fam, double v, int k_max = 64, int points = 512);

// n-sample bound: the partition pipeline on the shrunk region U(v/sqrt(n))
// with the kernel rescaled (or replaced by its uniform-in-n sup when
// `uniform`) and the level sqrt(n) Y/tau.  n = 1 reproduces bound_partition.
BoundResult bound_sample(const ParametricFamily& fam, int n, double v, bool uniform = false,
                         LayerSchedule schedule = LayerSchedule::identity(), int k_max = 64,
                         int points = 512);

enum class BoundMethod { Compact, Partition, Smooth, SampleN, SampleUniform };
std::string method_name(BoundMethod method);

struct BoundParams {
  LayerSchedule schedule = LayerSchedule::identity();
  int k_max = 64;
  int points = 512;
  int n = 1;  // sample size for the sample methods
};

// Bound values over an increasing v grid: clamped at 1, then monotonized by
// a running minimum (the tail is nonincreasing in v); per-point failures
// stay in the curve as gaps.  Diagnostics are captured before clamping.
struct TailCurve {
  std::vector<double> v_grid;
  std::vector<BoundResult> points;  // parallel to v_grid
  std::string method;

  void save_csv(const std::string& path) const;   // v,bound,method,delta_star,layers,flags
  void save_json(const std::string& path) const;  // full diagnostics
};

TailCurve tail_curve(BoundMethod method, const ParametricFamily& fam, const BoundParams& params,
                     const std::vector<double>& v_grid);

}  // namespace mletail

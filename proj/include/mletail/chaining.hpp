#pragma once
// Covering numbers and metric entropy on discretized regions, the geometric
// chaining series G, the optimized exp(G - nu*) tail factor, and risk-layer
// partitions.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mletail/phi.hpp"
#include "mletail/region.hpp"

namespace mletail {

// Pairwise semi-distance between point indices: symmetric, zero on the
// diagonal, triangle inequality.  Calls must be re-entrant.
using DistanceOracle = std::function<double(std::size_t, std::size_t)>;

// Greedy farthest-point cover at radius epsilon: every point ends up within
// epsilon of a center.  The center count upper-bounds the minimal covering
// number; ties break toward the lowest point index, and the center sequence
// is independent of epsilon (epsilon only decides when to stop), so covers
// at nested radii are prefix-nested.
struct Cover {
  std::vector<std::size_t> centers;
  double entropy() const;  // log of the center count
};
Cover covering_number(std::size_t n_points, const DistanceOracle& rho, double epsilon);

// H(eps) = log N(eps) on a decreasing radius grid, with a least-squares fit
// H ~ h0 + kappa * log(1/eps) used to extrapolate below the grid.
struct EntropyProfile {
  std::vector<double> epsilons;   // decreasing
  std::vector<double> entropies;  // nondecreasing along the grid
  double kappa_fit = 0.0;         // fitted metric dimension, >= 0
  double h0_fit = 0.0;
  double resolution_floor = 0.0;  // sampling resolution: largest nearest-
                                  // neighbour gap, or the caller's floor_hint
  double diameter = 0.0;
  bool extrapolatable = false;
  // An exact set is finitely many atoms (not a discretized continuum): its
  // entropy saturates at log(#distinct points), so values below the probed
  // radii stay finite and the resolution floor carries no meaning.
  bool exact_set = false;
  double h_saturation = 0.0;  // log(#distinct points)

  // Upper estimate of H(eps): 0 at or beyond the diameter, the measured
  // value at the largest grid radius <= eps, the fit (floored by the last
  // measurement) below the grid.  Below the grid, exact sets return the
  // saturation value; otherwise +inf when the profile is not extrapolatable.
  double entropy_at(double eps) const;
  void save_csv(const std::string& path) const;  // epsilon,H
};

// floor_hint >= 0 overrides the nearest-neighbour resolution floor; use it
// when the point set mixes continuum samples with exactly-located atoms,
// whose large gaps say nothing about the sampling resolution.
EntropyProfile entropy_profile(std::size_t n_points, const DistanceOracle& rho,
                               const std::vector<double>& eps_grid, bool exact_set = false,
                               double floor_hint = -1.0);
// Auto grid: geometric ladder from half the diameter down to the resolution
// floor.
EntropyProfile entropy_profile(std::size_t n_points, const DistanceOracle& rho, int levels = 24,
                               bool exact_set = false, double floor_hint = -1.0);

// Chaining series G(delta) = sum_m delta^{m-1} H(delta^m) (1 - delta).  The
// sum stops once the running term is negligible AND the fitted tail majorant
// is below 1e-9; the majorant is then added to the sum, never dropped.
struct GEval {
  double value = kInf;
  int terms = 0;              // series terms actually summed
  double tail = 0.0;          // fitted tail majorant included in value
  bool grid_limited = false;  // radius fell below the grid of a profile that
                              // cannot extrapolate; value is +inf
};
GEval entropy_G(const EntropyProfile& profile, double delta);

// inf over delta in (0,1) of exp(G(delta) - nu*((1-delta) y)): a 64-point
// log-spaced delta grid on [0.001, 0.999] plus golden-section refinement
// around the best cell.  Any probed delta yields a valid upper bound, so
// grid suboptimality is safe.  Throws runtime_error when no probed delta is
// finite.
struct ChainingEvaluation {
  double delta_star = 0.0;
  double g_value = 0.0;
  double conj_value = 0.0;
  double bound = 1.0;   // exp(g_value - conj_value)
  int truncation_m = 0; // series terms behind g_value
};
ChainingEvaluation psi_bound(const EntropyProfile& profile, const PhiFunction& nu, double y);

// Coordinates s with |s_i - s_j| = sum of neighbour natural distances along
// the sorted grid.  Dominates the true pairwise distance by the triangle
// inequality, so entropies computed from it stay upper bounds, at the cost
// of size-1 instead of size^2/2 norm evaluations.
std::vector<double> chain_coordinates(const ContrastField& field, const PhiFunction& phi);

// Risk layers U_k(v) for k = 1..k_max intersected with the parameter box;
// empty layers are omitted.
std::vector<RiskRegion> partition_layers(const ParametricFamily& fam, double v,
                                         LayerSchedule schedule, int k_max = 64,
                                         int points = 512);

}  // namespace mletail

#include "mletail/chaining.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mletail/csv.hpp"

namespace mletail {

double Cover::entropy() const { return std::log(static_cast<double>(centers.size())); }

Cover covering_number(std::size_t n_points, const DistanceOracle& rho, double epsilon) {
  if (n_points == 0) throw std::invalid_argument("covering_number: empty point set");
  if (!(epsilon > 0.0)) throw std::invalid_argument("covering_number: epsilon must be positive");
  std::vector<double> nearest(n_points, kInf);
  Cover cover;
  std::size_t next = 0;
  while (true) {
    cover.centers.push_back(next);
    double worst = -1.0;
    std::size_t far = 0;
    for (std::size_t p = 0; p < n_points; ++p) {
      nearest[p] = std::min(nearest[p], rho(next, p));
      if (nearest[p] > worst) {  // strict: ties keep the lowest index
        worst = nearest[p];
        far = p;
      }
    }
    if (worst <= epsilon) break;
    next = far;
  }
  return cover;
}

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0;
  bool ok = false;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  LineFit fit;
  if (xs.size() < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(den > 0.0)) return fit;
  fit.slope = num / den;
  fit.intercept = my - fit.slope * mx;
  fit.ok = std::isfinite(fit.slope) && std::isfinite(fit.intercept);
  return fit;
}

}  // namespace

EntropyProfile entropy_profile(std::size_t n_points, const DistanceOracle& rho,
                               const std::vector<double>& eps_grid, bool exact_set,
                               double floor_hint) {
  if (n_points == 0) throw std::invalid_argument("entropy_profile: empty point set");
  EntropyProfile prof;
  prof.exact_set = exact_set;
  double separation = kInf;  // smallest positive pairwise distance
  for (std::size_t i = 0; i < n_points; ++i) {
    double nn = kInf;
    for (std::size_t j = 0; j < n_points; ++j) {
      if (j == i) continue;
      double d = rho(i, j);
      nn = std::min(nn, d);
      if (i < j) {
        prof.diameter = std::max(prof.diameter, d);
        if (d > 0.0) separation = std::min(separation, d);
      }
    }
    if (n_points > 1) prof.resolution_floor = std::max(prof.resolution_floor, nn);
  }
  if (floor_hint >= 0.0) prof.resolution_floor = floor_hint;
  if (exact_set && std::isfinite(separation))
    prof.h_saturation = covering_number(n_points, rho, 0.49 * separation).entropy();

  std::vector<double> eps(eps_grid);
  std::sort(eps.begin(), eps.end(), std::greater<double>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  for (double e : eps) {
    if (!(e > 0.0)) continue;
    if (!exact_set && e < prof.resolution_floor) continue;  // below the grid: artifacts only
    prof.epsilons.push_back(e);
    prof.entropies.push_back(covering_number(n_points, rho, e).entropy());
  }
  if (prof.epsilons.empty()) throw std::invalid_argument("entropy_profile: no usable radii in grid");

  // Dimension fit over the radii that actually resolve structure (H > 0);
  // the H = 0 plateau beyond the diameter carries no slope information.
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < prof.epsilons.size(); ++k)
    if (prof.entropies[k] > 0.0) {
      xs.push_back(std::log(1.0 / prof.epsilons[k]));
      ys.push_back(prof.entropies[k]);
    }
  std::size_t distinct = prof.entropies.empty() ? 0 : 1;
  for (std::size_t k = 1; k < prof.entropies.size(); ++k)
    if (prof.entropies[k] != prof.entropies[k - 1]) ++distinct;
  LineFit fit = least_squares(xs, ys);
  if (fit.ok) {
    prof.kappa_fit = std::max(0.0, fit.slope);
    prof.h0_fit = fit.intercept;
  }
  prof.extrapolatable = fit.ok && distinct >= 3;
  return prof;
}

EntropyProfile entropy_profile(std::size_t n_points, const DistanceOracle& rho, int levels,
                               bool exact_set, double floor_hint) {
  if (levels < 1) throw std::invalid_argument("entropy_profile: levels must be >= 1");
  // Probe the diameter cheaply to lay the ladder; the main overload then
  // recomputes it exactly.
  double diam = 0.0;
  for (std::size_t i = 0; i < n_points; ++i)
    for (std::size_t j = i + 1; j < n_points; ++j) diam = std::max(diam, rho(i, j));
  if (!(diam > 0.0)) {
    // all points coincide: a bare profile whose entropy is identically zero
    EntropyProfile prof;
    prof.exact_set = exact_set;
    prof.epsilons = {1.0};
    prof.entropies = {0.0};
    return prof;
  }
  double floor_ = 0.0;
  if (floor_hint >= 0.0) {
    floor_ = floor_hint;
  } else {
    for (std::size_t i = 0; i < n_points; ++i) {
      double nn = kInf;
      for (std::size_t j = 0; j < n_points; ++j)
        if (j != i) nn = std::min(nn, rho(i, j));
      floor_ = std::max(floor_, nn);
    }
  }
  if (exact_set) floor_ = 0.0;  // atoms, not samples of a continuum
  const double top = 0.5 * diam;
  const double bottom = std::min(top, std::max(floor_, top * 1e-3));
  std::vector<double> grid;
  if (levels == 1 || bottom >= top) {
    grid.push_back(top);
  } else {
    const double ratio = std::pow(bottom / top, 1.0 / static_cast<double>(levels - 1));
    double e = top;
    for (int k = 0; k < levels; ++k, e *= ratio) grid.push_back(e);
  }
  return entropy_profile(n_points, rho, grid, exact_set, floor_hint);
}

double EntropyProfile::entropy_at(double eps) const {
  if (eps >= diameter) return 0.0;  // one ball suffices
  // H is antitone in eps, so the measurement at the largest grid radius
  // below eps is an upper estimate.
  for (std::size_t k = 0; k < epsilons.size(); ++k)
    if (epsilons[k] <= eps) return entropies[k];
  if (exact_set) return std::max(entropies.empty() ? 0.0 : entropies.back(), h_saturation);
  if (!extrapolatable) return kInf;
  double fitted = h0_fit + kappa_fit * std::log(1.0 / eps);
  double floor_h = entropies.empty() ? 0.0 : entropies.back();
  return std::max({fitted, floor_h, 0.0});
}

void EntropyProfile::save_csv(const std::string& path) const {
  CsvWriter w(path, "epsilon,H");
  for (std::size_t k = 0; k < epsilons.size(); ++k)
    w.row({format_double(epsilons[k]), format_double(entropies[k])});
}

GEval entropy_G(const EntropyProfile& profile, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("entropy_G: delta must lie in (0,1)");
  GEval ev;
  const double lg = std::log(1.0 / delta);
  // for exact sets the saturation value majorizes H below the grid even
  // when the fit carries nothing
  const double h0p = std::max({profile.h0_fit, 0.0,
                               profile.exact_set ? profile.h_saturation : 0.0});
  double sum = 0.0;
  double weight = 1.0;   // delta^{m-1}
  double radius = delta; // delta^m
  const int m_cap = 200000;
  for (int m = 1; m <= m_cap; ++m) {
    double h = profile.entropy_at(radius);
    if (std::isinf(h)) {
      ev.grid_limited = true;
      ev.terms = m - 1;
      ev.value = kInf;
      return ev;
    }
    double term = weight * h * (1.0 - delta);
    sum += term;
    // closed-form tail of the fitted majorant H(delta^m) <= h0p + kappa m lg:
    // sum_{m>M} delta^{m-1} (h0p + kappa m lg)(1-delta)
    double tail =
        radius * (h0p + profile.kappa_fit * lg * (m + 1 - m * delta) / (1.0 - delta));
    if (term < 1e-12 * std::max(sum, 1e-300) && tail < 1e-9) {
      ev.tail = tail;
      ev.terms = m;
      ev.value = sum + tail;
      return ev;
    }
    weight *= delta;
    radius *= delta;
  }
  ev.terms = m_cap;
  ev.value = kInf;  // no convergence certificate within the cap
  return ev;
}

ChainingEvaluation psi_bound(const EntropyProfile& profile, const PhiFunction& nu, double y) {
  if (!(y > 0.0)) throw std::invalid_argument("psi_bound: y must be positive");
  auto objective = [&](double delta) -> double {  // log of the bound factor
    GEval g = entropy_G(profile, delta);
    if (!std::isfinite(g.value)) return kInf;
    return g.value - conjugate(nu, (1.0 - delta) * y);
  };

  const int n_grid = 64;
  const double llo = std::log(0.001), lhi = std::log(0.999);
  double best_delta = 0.0, best_val = kInf;
  std::vector<double> probes(n_grid);
  for (int i = 0; i < n_grid; ++i) {
    probes[i] = std::exp(llo + (lhi - llo) * i / (n_grid - 1));
    double val = objective(probes[i]);
    if (val < best_val) {
      best_val = val;
      best_delta = probes[i];
    }
  }
  if (!(best_val < kInf))
    throw std::runtime_error("psi_bound: entropy series unavailable at every probed delta");

  // golden refinement in log-delta around the best grid cell
  int bi = 0;
  for (int i = 0; i < n_grid; ++i)
    if (probes[i] == best_delta) bi = i;
  double a = std::log(probes[std::max(0, bi - 1)]);
  double b = std::log(probes[std::min(n_grid - 1, bi + 1)]);
  const double kG = 0.6180339887498949;
  double x1 = b - kG * (b - a), x2 = a + kG * (b - a);
  double f1 = objective(std::exp(x1)), f2 = objective(std::exp(x2));
  for (int it = 0; it < 48; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kG * (b - a);
      f1 = objective(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kG * (b - a);
      f2 = objective(std::exp(x2));
    }
    double fx = std::min(f1, f2);
    double dx = f1 < f2 ? std::exp(x1) : std::exp(x2);
    if (fx < best_val) {
      best_val = fx;
      best_delta = dx;
    }
  }

  ChainingEvaluation ev;
  ev.delta_star = best_delta;
  GEval g = entropy_G(profile, best_delta);
  ev.g_value = g.value;
  ev.truncation_m = g.terms;
  ev.conj_value = conjugate(nu, (1.0 - best_delta) * y);
  ev.bound = std::exp(ev.g_value - ev.conj_value);
  return ev;
}

std::vector<double> chain_coordinates(const ContrastField& field, const PhiFunction& phi) {
  std::vector<double> s(field.size(), 0.0);
  for (std::size_t i = 0; i + 1 < field.size(); ++i) {
    double d = field_distance(field, i, i + 1, phi);
    if (!std::isfinite(d))
      throw std::runtime_error("chain_coordinates: distance diverged between adjacent grid points");
    s[i + 1] = s[i] + d;
  }
  return s;
}

std::vector<RiskRegion> partition_layers(const ParametricFamily& fam, double v,
                                         LayerSchedule schedule, int k_max, int points) {
  if (!(v > 0.0)) throw std::invalid_argument("partition_layers: v must be positive");
  if (k_max < 1) throw std::invalid_argument("partition_layers: k_max must be >= 1");
  std::vector<RiskRegion> layers;
  for (int k = 1; k <= k_max; ++k) {
    RiskRegion r = RiskRegion::layer(fam, v, k, schedule, points);
    if (!r.empty()) layers.push_back(std::move(r));
  }
  return layers;
}

}  // namespace mletail

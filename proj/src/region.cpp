#include "mletail/region.hpp"

#include <algorithm>
#include <cmath>

#include "mletail/csv.hpp"
#include "mletail/quadrature.hpp"

namespace mletail {

LayerSchedule LayerSchedule::power(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("layer schedule needs delta > 0");
  return LayerSchedule(delta);
}

double LayerSchedule::operator()(int k) const {
  if (k < 1) throw std::invalid_argument("layer index starts at 1");
  return std::pow(static_cast<double>(k), delta_);
}

std::string LayerSchedule::describe() const { return "k^" + format_double(delta_); }

RiskRegion RiskRegion::full(const ParametricFamily& fam, double v, int points) {
  return build(fam, v, 0, v, kInf, points);
}

RiskRegion RiskRegion::layer(const ParametricFamily& fam, double v, int k, LayerSchedule schedule,
                             int points) {
  if (k < 1) throw std::invalid_argument("layer index starts at 1");
  return build(fam, v, k, schedule(k) * v, schedule(k + 1) * v, points);
}

RiskRegion RiskRegion::build(const ParametricFamily& fam, double v, int k, double r_lo,
                             double r_hi, int points) {
  if (!(v > 0.0)) throw std::invalid_argument("region needs v > 0");
  RiskRegion reg;
  reg.family = &fam;
  reg.v = v;
  reg.r_lo = r_lo;
  reg.r_hi = r_hi;
  reg.layer_index = k;
  const bool bounded = std::isfinite(fam.theta_lo) && std::isfinite(fam.theta_hi);
  if (!bounded && !std::isfinite(r_hi))
    throw std::invalid_argument("outermost layer of an unbounded parameter box is unbounded");

  std::vector<std::pair<double, double>> segs;
  if (fam.euclid_risk) {
    double cand[2][2] = {{fam.theta0 - r_hi, fam.theta0 - r_lo},
                         {fam.theta0 + r_lo, fam.theta0 + r_hi}};
    for (auto& c : cand) {
      double lo = std::max(c[0], fam.theta_lo);
      double hi = std::min(c[1], fam.theta_hi);
      if (lo <= hi) segs.push_back({lo, hi});
    }
  } else {
    // generic risk: keep grid points of a dense box scan, merge contiguous runs
    const int kDense = 4096;
    std::vector<double> kept;
    for (int i = 0; i <= kDense; ++i) {
      double t = fam.theta_lo + (fam.theta_hi - fam.theta_lo) * i / kDense;
      double r = fam.risk(t, fam.theta0);
      if (r >= r_lo && r <= r_hi) kept.push_back(t);
    }
    double step = (fam.theta_hi - fam.theta_lo) / kDense;
    for (std::size_t i = 0; i < kept.size();) {
      std::size_t j = i;
      while (j + 1 < kept.size() && kept[j + 1] - kept[j] < 1.5 * step) ++j;
      segs.push_back({kept[i], kept[j]});
      i = j + 1;
    }
  }

  double total_len = 0.0;
  for (auto& s : segs) total_len += s.second - s.first;
  for (auto& s : segs) {
    double len = s.second - s.first;
    int n = len == 0.0 ? 1
                       : std::max(2, static_cast<int>(std::lround(
                                      points * (total_len > 0.0 ? len / total_len : 1.0))));
    for (int i = 0; i < n; ++i)
      reg.grid.push_back(n == 1 ? s.first : s.first + len * i / (n - 1));
  }
  std::sort(reg.grid.begin(), reg.grid.end());
  reg.grid.erase(std::unique(reg.grid.begin(), reg.grid.end()), reg.grid.end());
  reg.segments = std::move(segs);
  return reg;
}

// ---------------------------------------------------------------------------

namespace {

// Exponential scouting grid used to locate integrand bulk before committing to
// quadrature nodes.  Covers [lo, hi] at ~4% relative spacing down to 1e-4.
std::vector<double> scout_grid(double lo, double hi) {
  std::vector<double> xs;
  xs.push_back(0.0);
  for (double t = 1e-4; t < 1e13; t *= 1.04) {
    xs.push_back(t);
    xs.push_back(-t);
  }
  std::vector<double> out;
  for (double x : xs)
    if (x >= lo && x <= hi) out.push_back(x);
  if (std::isfinite(lo)) out.push_back(lo);
  if (std::isfinite(hi)) out.push_back(hi);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

ContrastField::ContrastField(const ParametricFamily& fam, std::vector<double> thetas)
    : family_(&fam), thetas_(std::move(thetas)) {
  if (thetas_.empty()) throw std::invalid_argument("contrast field needs a non-empty grid");
  cap_ = 8.0;

  // The tilted log integrand log f0 + lambda (log f_i - log f0) is linear in
  // lambda, so as lambda sweeps [0, cap] each integrand's bulk moves
  // monotonically between the lambda = 0 and lambda = cap bulks.  Scouting
  // the endpoint integrands and taking the hull of their individual drop-65
  // windows therefore covers the bulk of every tilt at once.
  const std::vector<double> scout = scout_grid(fam.support_lo, fam.support_hi);
  const std::size_t ns = scout.size();
  std::vector<double> l0s(ns);
  for (std::size_t j = 0; j < ns; ++j) l0s[j] = fam.log_density(scout[j], fam.theta0);

  std::size_t wl = ns - 1, wh = 0;         // window hull (scout indices)
  double peak_lo = kInf, peak_hi = -kInf;  // hull of integrand argmaxes
  auto widen = [&](const std::vector<double>& g) {
    std::size_t bj = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
    if (!(g[bj] > -kInf)) return;
    const double cut = g[bj] - 65.0;
    std::size_t a = 0, b = ns - 1;
    while (a < bj && g[a] < cut) ++a;
    while (b > bj && g[b] < cut) --b;
    wl = std::min(wl, a);
    wh = std::max(wh, b);
    // an argmax on an artificial scout edge (not a support end) means the
    // integrand diverges there; it has no bulk to resolve, so it must not
    // stretch the finely-spaced core
    const bool cap_lo = bj == 0 && !std::isfinite(fam.support_lo);
    const bool cap_hi = bj + 1 == ns && !std::isfinite(fam.support_hi);
    if (!cap_lo && !cap_hi) {
      peak_lo = std::min(peak_lo, scout[bj]);
      peak_hi = std::max(peak_hi, scout[bj]);
    }
  };
  widen(l0s);
  std::vector<double> li(ns), g(ns);
  for (double t : thetas_) {
    for (std::size_t j = 0; j < ns; ++j) {
      li[j] = fam.log_density(scout[j], t);
      g[j] = l0s[j] + cap_ * (li[j] - l0s[j]);
    }
    widen(li);
    widen(g);
  }
  double wlo = scout[wl], whi = scout[wh];
  check_lo_ = wlo > fam.support_lo;
  check_hi_ = whi < fam.support_hi;

  // peaks of the plain densities (family-declared) extend the fine-core hull
  auto widen_peaks = [&](double t) {
    auto cs = fam.quad_centers ? fam.quad_centers(t) : std::vector<double>{t};
    for (double c : cs) {
      peak_lo = std::min(peak_lo, c);
      peak_hi = std::max(peak_hi, c);
    }
  };
  widen_peaks(fam.theta0);
  for (double t : thetas_) widen_peaks(t);

  // core spacing follows the narrowest density structure on the grid
  double s_min = kInf;
  auto scale_of = [&](double t) {
    auto w = density_window(fam, t, 2.0);
    return std::max(1e-6, 0.5 * (w.second - w.first));
  };
  s_min = std::min(s_min, scale_of(fam.theta0));
  for (double t : thetas_) s_min = std::min(s_min, scale_of(t));

  const double core_lo = std::max(wlo, peak_lo - 16.0 * s_min);
  const double core_hi = std::min(whi, peak_hi + 16.0 * s_min);
  const double h = std::min(0.1, 0.05 * s_min);
  const double span = core_hi - core_lo;
  int n_core = span > 0.0 ? static_cast<int>(span / h) + 2 : 2;
  n_core = std::min(6001, std::max(257, n_core));
  for (int i = 0; i < n_core; ++i) nodes_.push_back(core_lo + span * i / (n_core - 1));
  // geometric ladders from the core edges to the window edges
  if (wlo < core_lo) {
    double off = std::max(peak_lo - core_lo, s_min);
    for (double t = off * 1.04; peak_lo - t > wlo; t *= 1.04) nodes_.push_back(peak_lo - t);
    nodes_.push_back(wlo);
  }
  if (whi > core_hi) {
    double off = std::max(core_hi - peak_hi, s_min);
    for (double t = off * 1.04; peak_hi + t < whi; t *= 1.04) nodes_.push_back(peak_hi + t);
    nodes_.push_back(whi);
  }
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());

  const std::size_t n = nodes_.size();
  base_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double wj = j == 0 ? nodes_[1] - nodes_[0]
                       : (j + 1 == n ? nodes_[n - 1] - nodes_[n - 2]
                                     : nodes_[j + 1] - nodes_[j - 1]);
    base_[j] = std::log(0.5 * wj) + fam.log_density(nodes_[j], fam.theta0);
  }
  double bm = *std::max_element(base_.begin(), base_.end());
  double acc = 0.0;
  for (double b : base_) acc += std::exp(b - bm);
  lse0_ = bm + std::log(acc);

  ratio_.resize(thetas_.size());
  h_.resize(thetas_.size());
  for (std::size_t i = 0; i < thetas_.size(); ++i) {
    ratio_[i].resize(n);
    double hv = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double r = fam.log_density(nodes_[j], thetas_[i]) -
                 fam.log_density(nodes_[j], fam.theta0);
      ratio_[i][j] = r;
      hv -= std::exp(base_[j] - lse0_) * r;
    }
    h_[i] = hv;
  }
}

double ContrastField::logmgf(std::size_t i, double lambda) const {
  if (lambda == 0.0) return 0.0;
  const auto& r = ratio_[i];
  const std::size_t n = nodes_.size();
  double best = -kInf;
  std::size_t bj = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = base_[j] + lambda * r[j];
    if (s > best) {
      best = s;
      bj = j;
    }
  }
  if ((check_lo_ && bj < 3) || (check_hi_ && bj + 3 >= n)) return kInf;
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += std::exp(base_[j] + lambda * r[j] - best);
  return best + std::log(acc) - lse0_ + lambda * h_[i];
}

double ContrastField::logmgf_diff(std::size_t i, std::size_t j, double lambda) const {
  if (lambda == 0.0 || i == j) return 0.0;
  const auto& ri = ratio_[i];
  const auto& rj = ratio_[j];
  const std::size_t n = nodes_.size();
  double best = -kInf;
  std::size_t bidx = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double s = base_[k] + lambda * (ri[k] - rj[k]);
    if (s > best) {
      best = s;
      bidx = k;
    }
  }
  if ((check_lo_ && bidx < 3) || (check_hi_ && bidx + 3 >= n)) return kInf;
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    acc += std::exp(base_[k] + lambda * (ri[k] - rj[k]) - best);
  return best + std::log(acc) - lse0_ + lambda * (h_[i] - h_[j]);
}

namespace {

// Read of a tabulated logmgf: piecewise linear between nodes (the chord of a
// convex function over-states it, erring on the safe side), but quadratic on
// the first segment -- a centered logmgf has zero slope at 0, and a chord
// through the origin there would make inverse(l)/lambda blow up at small
// probe lambdas.
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.size() > 1 && x <= xs[1]) {
    double t = x / xs[1];
    return ys[1] * t * t;
  }
  auto it = std::lower_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  std::size_t j = static_cast<std::size_t>(it - xs.begin());
  if (j == 0) return ys.front();
  double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

// Probe lambdas for norm evaluation against a kernel: the kernel's own table
// when it has one, otherwise a log-spaced ladder inside the field's certified
// range.
std::vector<double> probe_grid(const ContrastField& field, const PhiFunction& phi) {
  if (phi.kind() == PhiFunction::Kind::Tabulated) return phi.table_lambdas();
  double top = 0.95 * field.lambda_cap();
  if (std::isfinite(phi.lambda0())) top = std::min(top, 0.95 * phi.lambda0());
  std::vector<double> g{0.0};
  for (int i = 0; i < 48; ++i)
    g.push_back(top * std::pow(2.0, -10.0 * (1.0 - i / 47.0)));
  return g;
}

}  // namespace

PhiFunction natural_phi(const ContrastField& field, int lambda_points) {
  const std::size_t n = field.size();
  auto all_finite = [&](double lam) {
    for (std::size_t i = 0; i < n; ++i)
      if (std::isinf(field.logmgf(i, lam))) return false;
    return true;
  };
  const double cap = field.lambda_cap();
  double top;
  bool hard;
  if (all_finite(cap)) {
    top = cap;
    hard = false;
  } else {
    double lo = cap;
    while (lo > cap * std::pow(2.0, -26.0) && !all_finite(lo * 0.5)) lo *= 0.5;
    lo *= 0.5;
    if (!all_finite(lo)) throw std::runtime_error("empty Kramer domain on the grid");
    double hi = 2.0 * lo;
    for (int it = 0; it < 12; ++it) {
      double mid = 0.5 * (lo + hi);
      (all_finite(mid) ? lo : hi) = mid;
    }
    top = 0.95 * lo;
    hard = true;
  }

  // geometric ladder spanning 2^24: wide-variance kernels put the conjugate
  // maximizer far below the top, and an unresolved bottom collapses phi* to 0
  std::vector<double> grid{0.0};
  for (int i = 0; i + 2 <= lambda_points; ++i)
    grid.push_back(top *
                   std::pow(2.0, -24.0 * (1.0 - static_cast<double>(i) / (lambda_points - 2))));
  std::vector<double> vals{0.0};
  for (std::size_t k = 1; k < grid.size(); ++k) {
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, field.logmgf(i, grid[k]));
    if (std::isinf(mx)) {  // defensive: keep the verified-finite prefix
      grid.resize(k);
      vals.resize(k);
      break;
    }
    vals.push_back(mx);
  }
  if (grid.size() < 8) throw std::runtime_error("natural kernel grid collapsed");
  return PhiFunction::tabulated(std::move(grid), std::move(vals), hard);
}

double tau_sup(const ContrastField& field, const PhiFunction& phi) {
  const std::vector<double> lg = probe_grid(field, phi);
  double worst = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    std::vector<double> ys(lg.size());
    for (std::size_t k = 0; k < lg.size(); ++k) {
      ys[k] = field.logmgf(i, lg[k]);
      if (std::isinf(ys[k])) return kInf;
    }
    double t = bphi_norm([&](double l) { return interp(lg, ys, l); }, phi, lg.back());
    worst = std::max(worst, t);
    if (std::isinf(worst)) return kInf;
  }
  return worst;
}

double field_distance(const ContrastField& field, std::size_t i, std::size_t j,
                      const PhiFunction& phi) {
  if (i == j) return 0.0;
  const std::vector<double> lg = probe_grid(field, phi);
  double worst = 0.0;
  for (int orient = 0; orient < 2; ++orient) {
    std::size_t a = orient == 0 ? i : j;
    std::size_t b = orient == 0 ? j : i;
    std::vector<double> xs, ys;
    xs.reserve(lg.size());
    ys.reserve(lg.size());
    for (std::size_t k = 0; k < lg.size(); ++k) {
      double v = field.logmgf_diff(a, b, lg[k]);
      if (std::isinf(v)) break;  // certify the norm from the finite prefix
      xs.push_back(lg[k]);
      ys.push_back(v);
    }
    if (xs.size() < 4) return kInf;
    double t = bphi_norm([&](double l) { return interp(xs, ys, l); }, phi, xs.back());
    if (xs.size() < lg.size()) {
      // the difference mgf left the certified range inside the kernel table;
      // under a hard-ended kernel that forces tau >= lambda0 / lambda there
      // (for a soft kernel the refusal is a window limit, not a divergence:
      // two-sided member mgfs rule out genuine blowup, so the prefix stands)
      if (std::isfinite(phi.lambda0())) t = std::max(t, phi.lambda0() / xs.back());
    } else if (std::isfinite(phi.lambda0())) {
      // the table certifies nothing beyond its end, yet the norm constraint
      // lives on all lambda: walk outward until the difference mgf diverges
      // (tau >= lambda0 / lambda there) or no remaining lambda can help
      double l = xs.back();
      for (int step = 0; step < 64 && phi.lambda0() / l > t; ++step) {
        double lp = l;
        l *= 2.0;
        double v = field.logmgf_diff(a, b, l);
        if (std::isinf(v)) {
          for (int half = 0; half < 5; ++half) {  // tighten the bracket
            double mid = 0.5 * (lp + l);
            (std::isinf(field.logmgf_diff(a, b, mid)) ? l : lp) = mid;
          }
          t = std::max(t, phi.lambda0() / lp);
          break;
        }
        if (v <= 0.0) break;  // degenerate difference: nothing to dominate
        t = std::max(t, phi.inverse_lower(v, PhiFunction::Beyond::HardClosure) / l);
      }
    }
    worst = std::max(worst, t);
  }
  return worst;
}

double y_of_v(const RiskRegion& region, const ContrastField& field) {
  if (region.empty()) throw std::logic_error("empty region has no exponent");
  const ParametricFamily& fam = *region.family;
  std::size_t best = 0;
  for (std::size_t i = 1; i < field.size(); ++i)
    if (field.h(i) < field.h(best)) best = i;
  double tb = field.theta(best);
  double y = kl(fam, tb);

  // refine inside the containing segment around the grid minimiser
  double span = 0.0;
  for (std::size_t i = 0; i + 1 < region.grid.size(); ++i)
    if (region.grid[i] <= tb && tb <= region.grid[i + 1])
      span = std::max(span, region.grid[i + 1] - region.grid[i]);
  double lo = tb - span, hi = tb + span;
  for (const auto& s : region.segments) {
    if (tb >= s.first && tb <= s.second) {
      lo = std::max(lo, s.first);
      hi = std::min(hi, s.second);
      break;
    }
  }
  if (hi > lo) {
    const double kG = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kG * (b - a), x2 = a + kG * (b - a);
    double f1 = kl(fam, x1), f2 = kl(fam, x2);
    for (int it = 0; it < 48 && (b - a) > 1e-12 * std::max(1.0, std::abs(b)); ++it) {
      if (f1 > f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kG * (b - a);
        f2 = kl(fam, x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kG * (b - a);
        f1 = kl(fam, x1);
      }
    }
    y = std::min({y, f1, f2});
  }
  return y;
}

PhiFunction natural_phi(const RiskRegion& region) {
  return natural_phi(ContrastField(*region.family, region.grid));
}

double tau_sup(const RiskRegion& region, const PhiFunction& phi) {
  return tau_sup(ContrastField(*region.family, region.grid), phi);
}

double y_of_v(const RiskRegion& region) {
  return y_of_v(region, ContrastField(*region.family, region.grid));
}

double natural_distance(const ParametricFamily& fam, double theta1, double theta2,
                        const PhiFunction& phi) {
  if (theta1 == theta2) return 0.0;
  double h1 = kl(fam, theta1), h2 = kl(fam, theta2);
  auto logmgf_d = [&fam](double t1, double t2, double dh) {
    return [&fam, t1, t2, dh](double lam) {
      LogIntegralHints hints;
      hints.centers =
          fam.quad_centers ? fam.quad_centers(fam.theta0) : std::vector<double>{fam.theta0};
      auto c1 = fam.quad_centers ? fam.quad_centers(t1) : std::vector<double>{t1};
      auto c2 = fam.quad_centers ? fam.quad_centers(t2) : std::vector<double>{t2};
      hints.centers.insert(hints.centers.end(), c1.begin(), c1.end());
      hints.centers.insert(hints.centers.end(), c2.begin(), c2.end());
      hints.hard_lo = fam.support_lo;
      hints.hard_hi = fam.support_hi;
      hints.expand_cap = 1e12;
      double I = log_integral_exp(
          [&fam, t1, t2, lam](double x) {
            double l0 = fam.log_density(x, fam.theta0);
            if (!(l0 > -kInf)) return -kInf;
            double d = fam.log_density(x, t1) - fam.log_density(x, t2);
            double vv = l0 + lam * d;
            return std::isfinite(vv) ? vv : -kInf;
          },
          hints);
      return I + lam * dh;
    };
  };
  double lp = std::isfinite(phi.eval_top()) ? 0.99 * phi.eval_top() : 16.0;
  double d12 = bphi_norm(logmgf_d(theta1, theta2, h1 - h2), phi, lp);
  double d21 = bphi_norm(logmgf_d(theta2, theta1, h2 - h1), phi, lp);
  return std::max(d12, d21);
}

}  // namespace mletail

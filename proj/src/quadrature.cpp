#include "mletail/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mletail {

namespace {

struct SimpsonState {
  const std::function<double(double)>* f;
  double rel_tol;
  double abs_tol;
  int max_depth;
};

double simpson_rec(const SimpsonState& st, double a, double b, double fa, double fm, double fb,
                   double whole, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = (*st.f)(lm), frm = (*st.f)(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth >= st.max_depth ||
      std::abs(delta) <= 15.0 * std::max(st.abs_tol, st.rel_tol * std::abs(left + right))) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(st, a, m, fa, flm, fm, left, depth + 1) +
         simpson_rec(st, m, b, fm, frm, fb, right, depth + 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 double abs_tol) {
  if (!(a <= b)) throw std::invalid_argument("integrate needs a <= b");
  if (a == b) return 0.0;
  SimpsonState st{&f, rel_tol, abs_tol, 48};
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(st, a, b, fa, fm, fb, whole, 0);
}

double log_integral_exp(const std::function<double(double)>& g, const LogIntegralHints& hints) {
  if (hints.centers.empty()) throw std::invalid_argument("log_integral_exp needs a center hint");

  // The searchable window: hard support intersected with the expansion cap.
  const double win_lo = std::max(hints.hard_lo, -hints.expand_cap);
  const double win_hi = std::min(hints.hard_hi, hints.expand_cap);
  auto clamp = [&](double x) { return std::min(win_hi, std::max(win_lo, x)); };

  // --- locate the peak ---------------------------------------------------
  double gmax = -kInf;
  double xmax = clamp(hints.centers.front());
  auto consider = [&](double x) {
    if (x < win_lo || x > win_hi) return;
    double v = g(x);
    if (v > gmax) {
      gmax = v;
      xmax = x;
    }
  };
  for (double c : hints.centers) {
    double cc = clamp(c);
    consider(cc);
    for (double h : {0.03125, 0.25, 1.0, 4.0, 16.0}) {
      consider(cc + h);
      consider(cc - h);
    }
  }
  if (!std::isfinite(gmax)) return -kInf;  // integrand vanishes everywhere probed

  // local golden ascent around the best point
  {
    double step = 0.5;
    double a = clamp(xmax - step), b = clamp(xmax + step);
    while (a > win_lo && g(a) > gmax) {
      xmax = a;
      gmax = g(a);
      step *= 2.0;
      a = clamp(xmax - step);
    }
    while (b < win_hi && g(b) > gmax) {
      xmax = b;
      gmax = g(b);
      step *= 2.0;
      b = clamp(xmax + step);
    }
    consider(a);
    consider(b);
    a = clamp(xmax - step);
    b = clamp(xmax + step);
    for (int it = 0; it < 80; ++it) {
      double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
      if (g(m1) < g(m2))
        a = m1;
      else
        b = m2;
    }
    consider(0.5 * (a + b));
  }

  if (std::isinf(gmax)) return kInf;  // integrand infinite at a probed point

  // A maximum sitting on the cap (not a genuine support end) means the
  // integrand never turned over inside the window: treat as divergent.
  if (win_hi < hints.hard_hi && xmax >= win_hi) return kInf;
  if (win_lo > hints.hard_lo && xmax <= win_lo) return kInf;

  // --- expand to the effective support ------------------------------------
  const double cut = gmax - hints.drop;
  auto expand = [&](double from, double direction) {
    // returns the boundary in the given direction or +/-inf on divergence
    double step = 1.0;
    double x = from;
    const double limit = direction > 0 ? win_hi : win_lo;
    const bool capped = std::abs(limit) >= hints.expand_cap;
    while (true) {
      double nx = x + direction * step;
      bool past = direction > 0 ? nx >= limit : nx <= limit;
      if (past || !std::isfinite(nx)) {
        // reached the window edge; if that edge is the cap (not a genuine
        // support end) and the integrand is still fat and growing there, the
        // integral does not exist.  Compare differences: subtracting drop
        // from a huge gmax can be absorbed outright.
        if (capped && g(limit) - gmax > -hints.drop && g(limit) >= g(x))
          return direction * kInf;
        return limit;
      }
      if (g(nx) <= cut) return nx;
      x = nx;
      step *= 2.0;
    }
  };
  double lo = expand(std::min(xmax, clamp(*std::min_element(hints.centers.begin(), hints.centers.end()))), -1.0);
  double hi = expand(std::max(xmax, clamp(*std::max_element(hints.centers.begin(), hints.centers.end()))), +1.0);
  if (std::isinf(lo) || std::isinf(hi)) return kInf;  // divergence signal

  // --- integrate exp(g - gmax) over [lo, hi] ------------------------------
  auto h = [&](double x) {
    double v = g(x) - gmax;
    return v < -745.0 ? 0.0 : std::exp(v);
  };
  // Break at the centers and the peak so each panel is single-bump-ish.
  std::vector<double> brk{lo, hi, xmax};
  for (double c : hints.centers) {
    double cc = clamp(c);
    if (cc > lo && cc < hi) brk.push_back(cc);
  }
  // A geometric ladder around the peak keeps every panel within a bounded
  // scale ratio, so the adaptive rule can still resolve a narrow peak when
  // the support spans many orders of magnitude (heavy tails).
  const double h0 = std::max(1.0, std::abs(xmax) * 1e-3);
  for (double step = h0; step < 1e300; step *= 4.0) {
    bool any = false;
    if (xmax + step < hi) {
      brk.push_back(xmax + step);
      any = true;
    }
    if (xmax - step > lo) {
      brk.push_back(xmax - step);
      any = true;
    }
    if (!any) break;
  }
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
    if (brk[i + 1] > brk[i]) total += integrate(h, brk[i], brk[i + 1], 1e-10, 1e-14);
  }
  if (total <= 0.0) return -kInf;
  return gmax + std::log(total);
}

}  // namespace mletail

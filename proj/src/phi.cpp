#include "mletail/phi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mletail/csv.hpp"

namespace mletail {

namespace {

constexpr double kGolden = 0.6180339887498949;  // 1/phi, bracket shrink factor

// Golden-section maximisation of a unimodal g on [lo, hi]; iterates until the
// bracket is tight in relative terms, then returns the best value seen
// (endpoints included, so boundary suprema are handled exactly).
template <typename F>
double golden_max(F&& g, double lo, double hi) {
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = g(x1), f2 = g(x2);
  const double span = std::max(1.0, std::abs(hi));
  for (int it = 0; it < 200 && (b - a) > 1e-14 * span; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = g(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = g(x1);
    }
  }
  return std::max({f1, f2, g(lo), g(hi)});
}

}  // namespace

PhiFunction PhiFunction::gaussian() {
  PhiFunction p;
  p.kind_ = Kind::Gaussian;
  return p;
}

PhiFunction PhiFunction::power(double q) { return power(q, 1.0 / q); }

PhiFunction PhiFunction::power(double q, double coeff) {
  if (!(q >= 1.0)) throw std::invalid_argument("power kernel needs exponent q >= 1");
  if (!(coeff > 0.0)) throw std::invalid_argument("power kernel needs positive coefficient");
  PhiFunction p;
  p.kind_ = Kind::Power;
  p.q_ = q;
  p.coeff_ = coeff;
  return p;
}

PhiFunction PhiFunction::truncated_gaussian(double lambda0) {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
    throw std::invalid_argument("truncated_gaussian needs finite lambda0 > 0");
  PhiFunction p;
  p.kind_ = Kind::TruncatedGaussian;
  p.lambda0_ = lambda0;
  p.hard_end_ = true;
  return p;
}

PhiFunction PhiFunction::tabulated(std::vector<double> lambdas, std::vector<double> values,
                                   bool hard_end) {
  if (lambdas.size() != values.size() || lambdas.size() < 2)
    throw std::invalid_argument("tabulated kernel needs matching grids of size >= 2");
  if (lambdas.front() != 0.0 || values.front() != 0.0)
    throw std::invalid_argument("tabulated kernel must start at phi(0) = 0");
  for (std::size_t i = 1; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > lambdas[i - 1]))
      throw std::invalid_argument("tabulated kernel grid must be strictly increasing");
    if (!std::isfinite(values[i])) throw std::invalid_argument("tabulated kernel value not finite");
  }
  // Validate monotonicity / convexity up to relative noise, then snap the
  // table to its lower convex nondecreasing envelope so downstream code can
  // rely on exact piecewise-linear convexity.
  const double scale = std::max(1.0, std::abs(values.back()));
  const double tol = 1e-6 * scale;
  double prev_slope = -kInf;
  for (std::size_t i = 1; i < lambdas.size(); ++i) {
    double slope = (values[i] - values[i - 1]) / (lambdas[i] - lambdas[i - 1]);
    if (values[i] < values[i - 1] - tol)
      throw std::invalid_argument("tabulated kernel values must be nondecreasing");
    if (slope < prev_slope - tol / (lambdas[i] - lambdas[i - 1]) - 1e-12)
      throw std::invalid_argument("tabulated kernel must be convex");
    prev_slope = std::max(prev_slope, slope);
  }
  // Lower convex envelope (monotone chain over the sample points).
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    while (hull.size() >= 2) {
      std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
      double s1 = (values[b] - values[a]) / (lambdas[b] - lambdas[a]);
      double s2 = (values[i] - values[b]) / (lambdas[i] - lambdas[b]);
      if (s2 < s1) {
        hull.pop_back();  // b lies above the chord a--i
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  std::vector<double> hl, hv;
  hl.reserve(hull.size());
  hv.reserve(hull.size());
  for (std::size_t idx : hull) {
    hl.push_back(lambdas[idx]);
    hv.push_back(std::max(values[idx], hv.empty() ? 0.0 : hv.back()));
  }
  PhiFunction p;
  p.kind_ = Kind::Tabulated;
  p.tab_lambda_ = std::move(hl);
  p.tab_value_ = std::move(hv);
  p.hard_end_ = hard_end;
  p.lambda0_ = hard_end ? p.tab_lambda_.back() : kInf;
  return p;
}

double PhiFunction::eval_top() const {
  switch (kind_) {
    case Kind::Tabulated:
      return tab_lambda_.back();
    case Kind::TruncatedGaussian:
      return lambda0_;
    default:
      return kInf;
  }
}

double PhiFunction::sup_value() const {
  switch (kind_) {
    case Kind::Tabulated:
      return hard_end_ ? kInf : tab_value_.back();
    case Kind::TruncatedGaussian:
      return kInf;  // +inf closure at lambda0
    default:
      return kInf;
  }
}

double PhiFunction::operator()(double lambda) const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("phi evaluated at negative lambda");
  switch (kind_) {
    case Kind::Gaussian:
      return 0.5 * lambda * lambda;
    case Kind::Power:
      return coeff_ * std::pow(lambda, q_);
    case Kind::TruncatedGaussian:
      return lambda < lambda0_ ? 0.5 * lambda * lambda : kInf;
    case Kind::Tabulated: {
      if (lambda > tab_lambda_.back() * (1.0 + 1e-12)) {
        if (hard_end_) return kInf;
        throw std::domain_error("tabulated kernel evaluated beyond its table");
      }
      if (lambda >= tab_lambda_.back()) return tab_value_.back();
      auto it = std::upper_bound(tab_lambda_.begin(), tab_lambda_.end(), lambda);
      std::size_t i = static_cast<std::size_t>(it - tab_lambda_.begin());
      double t = (lambda - tab_lambda_[i - 1]) / (tab_lambda_[i] - tab_lambda_[i - 1]);
      return tab_value_[i - 1] + t * (tab_value_[i] - tab_value_[i - 1]);
    }
  }
  return 0.0;
}

double PhiFunction::inverse_lower(double y, Beyond policy) const {
  if (!(y >= 0.0)) throw std::invalid_argument("inverse_lower needs y >= 0");
  if (y == 0.0) return 0.0;
  switch (kind_) {
    case Kind::Gaussian:
      return std::sqrt(2.0 * y);
    case Kind::Power:
      return std::pow(y / coeff_, 1.0 / q_);
    case Kind::TruncatedGaussian: {
      double l = std::sqrt(2.0 * y);
      return l < lambda0_ ? l : lambda0_;
    }
    case Kind::Tabulated: {
      if (y > tab_value_.back()) {
        if (hard_end_) return tab_lambda_.back();
        switch (policy) {
          case Beyond::HardClosure:
            return tab_lambda_.back();
          case Beyond::LinearExtend: {
            std::size_t n = tab_value_.size();
            double slope = (tab_value_[n - 1] - tab_value_[n - 2]) /
                           (tab_lambda_[n - 1] - tab_lambda_[n - 2]);
            if (slope <= 0.0) return kInf;
            return tab_lambda_.back() + (y - tab_value_.back()) / slope;
          }
          case Beyond::Throw:
            throw std::out_of_range("inverse level beyond tabulated kernel range");
        }
      }
      auto it = std::lower_bound(tab_value_.begin(), tab_value_.end(), y);
      std::size_t i = static_cast<std::size_t>(it - tab_value_.begin());
      if (i == 0) return 0.0;
      double dv = tab_value_[i] - tab_value_[i - 1];
      if (dv <= 0.0) return tab_lambda_[i - 1];
      double t = (y - tab_value_[i - 1]) / dv;
      return tab_lambda_[i - 1] + t * (tab_lambda_[i] - tab_lambda_[i - 1]);
    }
  }
  return 0.0;
}

double PhiFunction::power_exponent() const {
  if (kind_ != Kind::Power) throw std::logic_error("kernel is not a power kernel");
  return q_;
}

double PhiFunction::power_coeff() const {
  if (kind_ != Kind::Power) throw std::logic_error("kernel is not a power kernel");
  return coeff_;
}

const std::vector<double>& PhiFunction::table_lambdas() const {
  if (kind_ != Kind::Tabulated) throw std::logic_error("kernel has no table");
  return tab_lambda_;
}

const std::vector<double>& PhiFunction::table_values() const {
  if (kind_ != Kind::Tabulated) throw std::logic_error("kernel has no table");
  return tab_value_;
}

double conjugate(const PhiFunction& phi, double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("conjugate needs x >= 0");
  if (x == 0.0) return 0.0;

  // Upper search limit: either the (approached) domain end or an expanding
  // bracket that stops once the objective turns downward.
  double top = phi.eval_top();
  double hi;
  if (std::isfinite(top)) {
    hi = phi.kind() == PhiFunction::Kind::TruncatedGaussian ? top * (1.0 - 1e-12) : top;
  } else {
    auto g = [&](double l) { return l * x - phi(l); };
    hi = std::max(1.0, x);
    double cap = 1e15;
    while (hi < cap && g(2.0 * hi) > g(hi)) hi *= 2.0;
    if (hi >= cap) return kInf;  // asymptotic slope <= x: sup is unbounded
    hi *= 2.0;
  }

  auto g = [&](double l) { return l * x - phi(l); };

  // 64-point coarse grid, then golden-section refinement around the best cell.
  int best = 0;
  double best_val = g(0.0);
  const int kGrid = 64;
  for (int i = 1; i <= kGrid; ++i) {
    double l = hi * static_cast<double>(i) / kGrid;
    double v = g(l);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo_b = hi * static_cast<double>(std::max(0, best - 1)) / kGrid;
  double hi_b = hi * static_cast<double>(std::min(kGrid, best + 1)) / kGrid;
  return std::max(0.0, golden_max(g, lo_b, hi_b));
}

PhiFunction rescale_n(const PhiFunction& phi, int n) {
  if (n < 1) throw std::invalid_argument("rescale_n needs n >= 1");
  if (n == 1) return phi;
  const double rt = std::sqrt(static_cast<double>(n));
  switch (phi.kind()) {
    case PhiFunction::Kind::Gaussian:
      return PhiFunction::gaussian();  // exact fixed point
    case PhiFunction::Kind::Power: {
      // n * c * (lambda/sqrt(n))^q = c * n^{1-q/2} * lambda^q
      double q = phi.power_exponent(), c = phi.power_coeff();
      return PhiFunction::power(q, c * std::pow(static_cast<double>(n), 1.0 - q / 2.0));
    }
    case PhiFunction::Kind::TruncatedGaussian:
      return PhiFunction::truncated_gaussian(rt * phi.lambda0());
    case PhiFunction::Kind::Tabulated: {
      std::vector<double> l = phi.table_lambdas(), v = phi.table_values();
      for (auto& x : l) x *= rt;
      for (auto& y : v) y *= static_cast<double>(n);
      return PhiFunction::tabulated(std::move(l), std::move(v), phi.hard_end());
    }
  }
  throw std::logic_error("unreachable");
}

PhiFunction phi_bar(const PhiFunction& phi, int n_max) {
  if (n_max < 1) throw std::invalid_argument("phi_bar needs n_max >= 1");
  switch (phi.kind()) {
    case PhiFunction::Kind::Gaussian:
      return phi;  // every rescale is the same kernel
    case PhiFunction::Kind::Power: {
      double q = phi.power_exponent();
      if (q < 2.0 - 1e-12)
        throw PhiBarDivergent("phi_bar diverges: rescale family of a sub-quadratic power kernel is unbounded");
      // q >= 2: n^{1-q/2} is maximised at n = 1
      return phi;
    }
    case PhiFunction::Kind::TruncatedGaussian:
      // The n = 1 term is already +inf beyond lambda0 and every rescale agrees
      // with lambda^2/2 inside it, so the kernel is a fixed point.
      return phi;
    case PhiFunction::Kind::Tabulated:
      break;  // handled below
  }

  // The domain cannot grow: the n = 1 term ends where the table ends (hard
  // end: +inf beyond; soft end: unknown beyond, and extrapolation is
  // forbidden).  Inside the table every n is evaluable since lambda/sqrt(n)
  // <= lambda, so the sup is an honest max over n at each grid point.
  //
  // Boundedness of the n-family is decided from the resolved node ratios
  // phi(x)/x^2: n * phi(l/sqrt(n)) = l^2 * ratio(l/sqrt(n)), so the sup runs
  // away with n exactly when the ratio keeps climbing toward x = 0.  The
  // test starts at the finest node whose value is clearly above the
  // log-sum-exp cancellation floor (~1e-15 absolute): kernels tabulated from
  // quadrature carry values down to ~1e-12 at the ladder bottom, where the
  // relative noise would otherwise fake a climbing ratio.  A genuinely
  // sub-quadratic ratio moves by >= the grid step exponent (several percent
  // per node), so the wider margin keeps the detection.
  const auto& xs = phi.table_lambdas();
  const auto& vs = phi.table_values();
  std::size_t j0 = 1;
  while (j0 + 2 < xs.size() && vs[j0] < 1e-8) ++j0;
  double ratio_first = vs[j0] / (xs[j0] * xs[j0]);
  double ratio_rest = 0.0;
  for (std::size_t j = j0 + 1; j < xs.size(); ++j)
    ratio_rest = std::max(ratio_rest, vs[j] / (xs[j] * xs[j]));
  if (ratio_first > ratio_rest * (1.0 + 1e-3))
    throw PhiBarDivergent("phi_bar diverges: n * phi(lambda/sqrt(n)) still grows at the resolution limit");

  // Dense n up to 4096 (exact per-point max), geometric doubling beyond.
  std::vector<int> ns;
  for (int n = 1; n <= n_max && n <= 4096; ++n) ns.push_back(n);
  for (long long n = 8192; n <= n_max; n *= 2) ns.push_back(static_cast<int>(n));
  if (ns.back() != n_max) ns.push_back(n_max);

  // Reuse the source grid (subsampled if large) so the n = 1 term is exact.
  std::vector<std::size_t> idx;
  const std::size_t kMaxNodes = 257;
  if (xs.size() <= kMaxNodes) {
    for (std::size_t j = 0; j < xs.size(); ++j) idx.push_back(j);
  } else {
    for (std::size_t k = 0; k < kMaxNodes; ++k)
      idx.push_back(k * (xs.size() - 1) / (kMaxNodes - 1));
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  }
  std::vector<double> grid, vals;
  grid.reserve(idx.size());
  vals.reserve(idx.size());
  for (std::size_t j : idx) {
    double l = xs[j];
    double best = 0.0;
    for (int n : ns) {
      double v = static_cast<double>(n) * phi(l / std::sqrt(static_cast<double>(n)));
      best = std::max(best, v);
    }
    grid.push_back(l);
    vals.push_back(best);
  }
  return PhiFunction::tabulated(std::move(grid), std::move(vals), phi.hard_end());
}

double bphi_norm(const std::function<double(double)>& logmgf, const PhiFunction& phi,
                 double lambda_probe) {
  if (!(lambda_probe > 0.0)) throw std::invalid_argument("bphi_norm needs lambda_probe > 0");
  const int kProbes = 256;
  const double top = 0.99 * lambda_probe;
  const double lo = top * std::pow(2.0, -16.0);
  double tau = 0.0;
  const double cap = 1e12;
  for (int i = 0; i < kProbes; ++i) {
    double l = lo * std::pow(top / lo, static_cast<double>(i) / (kProbes - 1));
    double y = logmgf(l);
    if (std::isnan(y)) throw std::invalid_argument("bphi_norm: logmgf returned NaN");
    if (y < -1e-9) throw std::invalid_argument("bphi_norm: logmgf of a centered variable must be >= 0");
    if (y <= 0.0) continue;
    double need;
    if (std::isinf(y)) {
      // divergent mgf at this probe: only an eventual +inf closure of phi can
      // dominate it
      need = std::isfinite(phi.lambda0()) ? phi.lambda0() : kInf;
    } else {
      need = phi.inverse_lower(y, PhiFunction::Beyond::LinearExtend);
    }
    double t = need / l;
    if (t > tau) tau = t;
    if (tau > cap) return kInf;
  }
  return tau;
}

double tail_from_norm(const PhiFunction& phi, double tau, double x) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("tail_from_norm needs finite tau > 0");
  return std::exp(-conjugate(phi, x / tau));
}

double chernoff_sum_tail(const PhiFunction& phi, int n, double x) {
  return std::exp(-conjugate(rescale_n(phi, n), x));
}

double TailEnvelope::log_value(double x) const {
  if (!(x >= 0.0)) throw std::invalid_argument("envelope evaluated at negative x");
  double r = slowvary ? slowvary(x) : 1.0;
  double weib = c_weibull * std::pow(x, q) * r;
  double gauss = c_gauss * x * x;
  return -std::max(weib, gauss);
}

double TailEnvelope::operator()(double x) const { return std::exp(log_value(x)); }

double lemma31_envelope(double q, const std::function<double(double)>& slowvary,
                        double c_weibull, double c_gauss, double x) {
  TailEnvelope env{q, c_weibull, c_gauss, slowvary};
  return env(x);
}

double moment_bound(const PhiFunction& phi_bar, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("moment_bound needs p > 0");
  double l = phi_bar.inverse_lower(p, PhiFunction::Beyond::Throw);
  if (!(l > 0.0)) throw std::out_of_range("moment level below kernel resolution");
  return p / l;
}

void PhiFunction::save_csv(const std::string& path) const {
  if (kind_ != Kind::Tabulated)
    throw std::logic_error("closed-form kernel export needs an explicit grid");
  save_csv(path, tab_lambda_);
}

void PhiFunction::save_csv(const std::string& path, const std::vector<double>& lambdas) const {
  CsvWriter w(path, "lambda,phi");
  for (double l : lambdas) w.row({format_double(l), format_double((*this)(l))});
}

PhiFunction PhiFunction::load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open kernel table: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty kernel table: " + path);
  auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "lambda" || header[1] != "phi")
    throw std::runtime_error("kernel table must have header lambda,phi: " + path);
  std::vector<double> l, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 2) throw std::runtime_error("bad kernel table row: " + line);
    l.push_back(parse_double(f[0]));
    v.push_back(parse_double(f[1]));
  }
  return tabulated(std::move(l), std::move(v), false);
}

}  // namespace mletail

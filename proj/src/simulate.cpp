#include "mletail/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

#include "mletail/csv.hpp"
#include "mletail/rng.hpp"

namespace mletail {

namespace {

using nlohmann::ordered_json;

// Contiguous replication ranges per worker; stream identity comes from the
// replication index alone, so the split never shows in the results.
std::vector<std::pair<std::int64_t, std::int64_t>> split_range(std::int64_t total, int workers) {
  workers = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(workers, total)));
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (int w = 0; w < workers; ++w)
    out.emplace_back(total * w / workers, total * (w + 1) / workers);
  return out;
}

void check_grid(const std::vector<double>& grid, const std::string& field) {
  if (grid.empty()) throw std::invalid_argument(field + ": must be non-empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw std::invalid_argument(field + ": must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument(field + ": must be strictly increasing");
  }
}

SlopeFit line_fit(const std::string& covariate, const std::vector<double>& xs,
                  const std::vector<double>& ys) {
  SlopeFit fit;
  fit.covariate = covariate;
  fit.points = static_cast<int>(xs.size());
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
  fit.fitted = true;
  return fit;
}

ordered_json fit_json(const SlopeFit& f) {
  ordered_json j;
  j["covariate"] = f.covariate;
  j["fitted"] = f.fitted;
  if (f.fitted) {
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
  }
  j["points"] = f.points;
  return j;
}

// Magnitude with exact tail P(X > x) = exp(-x^q R(x)): solve the increasing
// exponent x^q R(x) = t.
double weibull_type_quantile(double q, const SlowVary& R, double t) {
  if (!(t > 0.0)) return 0.0;
  if (R.constant) return std::pow(t / R.c, 1.0 / q);
  auto psi = [q, &R](double x) { return std::pow(x, q) * R(x); };
  double hi = 1.0;
  for (int i = 0; i < 1100 && psi(hi) < t; ++i) hi *= 2.0;
  double lo = 0.0;
  while (hi - lo > 1e-13 * hi) {
    double mid = 0.5 * (lo + hi);
    (psi(mid) < t ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

WilsonInterval wilson_interval(std::int64_t k, std::int64_t n, double z) {
  if (n <= 0 || k < 0 || k > n) throw std::invalid_argument("wilson_interval: need 0 <= k <= n");
  const double p = static_cast<double>(k) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  WilsonInterval w;
  w.lo = std::max(0.0, center - half);
  w.hi = std::min(1.0, center + half);
  return w;
}

double mle_fit(const ParametricFamily& fam, const std::vector<double>& sample) {
  if (sample.empty()) throw std::invalid_argument("mle_fit: empty sample");
  for (double x : sample)
    if (!std::isfinite(x) || x < fam.support_lo || x > fam.support_hi)
      throw std::invalid_argument("mle_fit: observation outside the family support");
  if (!std::isfinite(fam.theta_lo) || !std::isfinite(fam.theta_hi))
    throw std::invalid_argument("mle_fit: parameter box must be bounded");
  auto loglik = [&fam, &sample](double t) {
    double s = 0.0;
    for (double x : sample) s += fam.log_density(x, t);
    return s;
  };

  const int grid_n = std::max(16, fam.mle_grid);
  const double lo = fam.theta_lo, hi = fam.theta_hi, width = hi - lo;
  double best_t = lo, best_ll = -kInf, best_risk = kInf;
  int best_i = 0;
  for (int i = 0; i < grid_n; ++i) {
    const double t = lo + width * i / (grid_n - 1);
    const double ll = loglik(t);
    if (ll == -kInf || std::isnan(ll)) continue;
    const double r = fam.risk(t, fam.theta0);
    if (ll > best_ll || (ll == best_ll && r < best_risk)) {
      best_ll = ll;
      best_t = t;
      best_risk = r;
      best_i = i;
    }
  }
  if (best_ll == -kInf)
    throw std::runtime_error("mle_fit: log-likelihood is -inf across the whole grid");

  // golden-section inside the cells bracketing the grid winner
  double a = lo + width * std::max(0, best_i - 1) / (grid_n - 1);
  double b = lo + width * std::min(grid_n - 1, best_i + 1) / (grid_n - 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  const double tol = 1e-8 * std::max(1.0, width);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = loglik(c), fd = loglik(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = loglik(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = loglik(d);
    }
  }
  const double t_ref = 0.5 * (a + b);
  const double ll_ref = loglik(t_ref);
  if (ll_ref > best_ll ||
      (ll_ref == best_ll && fam.risk(t_ref, fam.theta0) < best_risk))
    return t_ref;
  return best_t;
}

EmpiricalTail empirical_tail(const SimulationPlan& plan, int workers) {
  if (!plan.family) throw std::invalid_argument("simulation.family: missing");
  if (plan.n < 1) throw std::invalid_argument("simulation.n: must be >= 1");
  if (plan.replications < 100)
    throw std::invalid_argument("simulation.replications: must be >= 100");
  check_grid(plan.v_grid, "grid.v");
  const ParametricFamily& fam = *plan.family;
  const std::size_t m = plan.v_grid.size();
  const double boundary_margin = 0.01 * (fam.theta_hi - fam.theta_lo);
  const double scale = plan.scaled ? std::sqrt(static_cast<double>(plan.n)) : 1.0;

  struct Shard {
    std::vector<std::int64_t> exceed;
    std::int64_t aborted = 0, boundary = 0;
  };
  auto run_range = [&](std::int64_t r0, std::int64_t r1, Shard& out) {
    out.exceed.assign(m, 0);
    std::vector<double> xs(static_cast<std::size_t>(plan.n));
    for (std::int64_t r = r0; r < r1; ++r) {
      RngStream rng(plan.master_seed, static_cast<std::uint64_t>(r));
      for (double& x : xs) x = fam.sampler(fam.theta0, rng);
      double theta;
      try {
        theta = mle_fit(fam, xs);
      } catch (const std::exception&) {
        ++out.aborted;
        continue;
      }
      const double risk = scale * fam.risk(theta, fam.theta0);
      for (std::size_t i = 0; i < m && risk > plan.v_grid[i]; ++i) ++out.exceed[i];
      if (theta - fam.theta_lo < boundary_margin || fam.theta_hi - theta < boundary_margin)
        ++out.boundary;
    }
  };

  auto ranges = split_range(plan.replications, workers);
  std::vector<Shard> shards(ranges.size());
  if (ranges.size() == 1) {
    run_range(ranges[0].first, ranges[0].second, shards[0]);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < ranges.size(); ++w)
      pool.emplace_back(run_range, ranges[w].first, ranges[w].second, std::ref(shards[w]));
    for (std::thread& t : pool) t.join();
  }

  EmpiricalTail tail;
  tail.v_grid = plan.v_grid;
  tail.replications = plan.replications;
  tail.exceed_counts.assign(m, 0);
  std::int64_t boundary = 0;
  for (const Shard& s : shards) {
    tail.aborted += s.aborted;
    boundary += s.boundary;
    for (std::size_t i = 0; i < m; ++i) tail.exceed_counts[i] += s.exceed[i];
  }
  if (tail.aborted * 1000 > plan.replications)
    throw std::runtime_error("empirical_tail: aborted replications exceed 0.1% of the plan");
  const std::int64_t valid = plan.replications - tail.aborted;
  tail.boundary_fraction = static_cast<double>(boundary) / static_cast<double>(valid);
  tail.estimates.resize(m);
  tail.wilson_lo.resize(m);
  tail.wilson_hi.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    tail.estimates[i] =
        static_cast<double>(tail.exceed_counts[i]) / static_cast<double>(valid);
    WilsonInterval w = wilson_interval(tail.exceed_counts[i], valid);
    tail.wilson_lo[i] = w.lo;
    tail.wilson_hi[i] = w.hi;
  }
  return tail;
}

void EmpiricalTail::save_csv(const std::string& path) const {
  CsvWriter w(path, "v,estimate,wilson_lo,wilson_hi,count");
  for (std::size_t i = 0; i < v_grid.size(); ++i)
    w.row({format_double(v_grid[i]), format_double(estimates[i]), format_double(wilson_lo[i]),
           format_double(wilson_hi[i]), format_int(exceed_counts[i])});
}

void EmpiricalTail::save_json(const std::string& path) const {
  ordered_json doc;
  doc["replications"] = replications;
  doc["aborted"] = aborted;
  doc["boundary_fraction"] = boundary_fraction;
  auto pts = ordered_json::array();
  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    ordered_json p;
    p["v"] = v_grid[i];
    p["count"] = exceed_counts[i];
    p["estimate"] = estimates[i];
    p["wilson_lo"] = wilson_lo[i];
    p["wilson_hi"] = wilson_hi[i];
    pts.push_back(std::move(p));
  }
  doc["points"] = std::move(pts);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

ComparisonReport compare(const TailCurve& curve, const EmpiricalTail& tail) {
  if (curve.v_grid.size() != tail.v_grid.size())
    throw std::invalid_argument("compare: curve and tail v grids differ in length");
  for (std::size_t i = 0; i < curve.v_grid.size(); ++i)
    if (curve.v_grid[i] != tail.v_grid[i])
      throw std::invalid_argument("compare: curve and tail v grids differ");

  ComparisonReport rep;
  for (std::size_t i = 0; i < curve.v_grid.size(); ++i) {
    ComparisonReport::Row row;
    row.v = curve.v_grid[i];
    row.estimate = tail.estimates[i];
    row.wilson_lo = tail.wilson_lo[i];
    row.wilson_hi = tail.wilson_hi[i];
    row.count = tail.exceed_counts[i];
    const BoundResult& b = curve.points[i];
    if (!b.available) {
      row.gap = true;
      ++rep.gaps;
    } else {
      row.bound = b.value;
      row.violation = b.value < row.wilson_lo;
      if (row.violation) ++rep.violations;
    }
    rep.rows.push_back(row);
  }

  // -log curves against each declared covariate
  struct Covariate {
    std::string name;
    double (*map)(double);
  };
  const Covariate covs[] = {{"v", [](double v) { return v; }},
                            {"v2", [](double v) { return v * v; }},
                            {"logv", [](double v) { return std::log(v); }}};
  for (const Covariate& cov : covs) {
    std::vector<double> xb, yb, xe, ye;
    for (const ComparisonReport::Row& row : rep.rows) {
      if (cov.name == "logv" && !(row.v > 0.0)) continue;
      const double x = cov.map(row.v);
      if (!row.gap && row.bound > 0.0) {
        xb.push_back(x);
        yb.push_back(-std::log(row.bound));
      }
      if (row.estimate > 0.0) {
        xe.push_back(x);
        ye.push_back(-std::log(row.estimate));
      }
    }
    rep.bound_fits.push_back(line_fit(cov.name, xb, yb));
    rep.empirical_fits.push_back(line_fit(cov.name, xe, ye));
  }
  rep.verdict = rep.violations == 0 ? "PASS" : "FAIL";
  return rep;
}

void ComparisonReport::save_csv(const std::string& path) const {
  CsvWriter w(path, "v,bound,estimate,wilson_lo,wilson_hi,count,violation");
  for (const Row& row : rows)
    w.row({format_double(row.v), row.gap ? std::string() : format_double(row.bound),
           format_double(row.estimate), format_double(row.wilson_lo),
           format_double(row.wilson_hi), format_int(row.count), row.violation ? "1" : "0"});
}

void ComparisonReport::save_json(const std::string& path) const {
  ordered_json doc;
  doc["verdict"] = verdict;
  doc["violations"] = violations;
  doc["gaps"] = gaps;
  auto rws = ordered_json::array();
  for (const Row& row : rows) {
    ordered_json r;
    r["v"] = row.v;
    if (row.gap)
      r["gap"] = true;
    else
      r["bound"] = row.bound;
    r["estimate"] = row.estimate;
    r["wilson_lo"] = row.wilson_lo;
    r["wilson_hi"] = row.wilson_hi;
    r["count"] = row.count;
    r["violation"] = row.violation;
    rws.push_back(std::move(r));
  }
  doc["rows"] = std::move(rws);
  auto bf = ordered_json::array(), ef = ordered_json::array();
  for (const SlopeFit& f : bound_fits) bf.push_back(fit_json(f));
  for (const SlopeFit& f : empirical_fits) ef.push_back(fit_json(f));
  doc["bound_fits"] = std::move(bf);
  doc["empirical_fits"] = std::move(ef);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

SumTailReport sum_tail_experiment(const SumTailPlan& plan, int workers) {
  if (!(plan.q > 0.0) || plan.q > 2.0)
    throw std::invalid_argument("sum_tail.q: must lie in (0, 2]");
  if (plan.n_set.empty()) throw std::invalid_argument("sum_tail.n_set: must be non-empty");
  for (std::size_t i = 0; i < plan.n_set.size(); ++i) {
    if (plan.n_set[i] < 1) throw std::invalid_argument("sum_tail.n_set: entries must be >= 1");
    if (i > 0 && plan.n_set[i] <= plan.n_set[i - 1])
      throw std::invalid_argument("sum_tail.n_set: must be strictly increasing");
  }
  check_grid(plan.x_grid, "sum_tail.x_grid");
  if (!(plan.x_grid.front() > 0.0))
    throw std::invalid_argument("sum_tail.x_grid: must be positive");
  if (plan.replications < 100)
    throw std::invalid_argument("sum_tail.replications: must be >= 100");

  const std::size_t kn = plan.n_set.size();
  const std::size_t kx = plan.x_grid.size();
  const int n_max = plan.n_set.back();

  // one uniform per eta: the sign and the (0,1)-uniform magnitude level come
  // from the same draw, and the inverse exponent makes the tail exact
  auto run_range = [&](std::int64_t r0, std::int64_t r1, std::vector<std::int64_t>& out) {
    out.assign(kn * kx, 0);
    for (std::int64_t r = r0; r < r1; ++r) {
      RngStream rng(plan.master_seed, static_cast<std::uint64_t>(r));
      double sum = 0.0;
      std::size_t mark = 0;
      for (int k = 1; k <= n_max && mark < kn; ++k) {
        double w;
        do {
          w = 2.0 * rng.uniform() - 1.0;
        } while (w == 0.0);
        const double mag = weibull_type_quantile(plan.q, plan.slowvary, -std::log(std::abs(w)));
        sum += w < 0.0 ? -mag : mag;
        if (k == plan.n_set[mark]) {
          const double z = std::abs(sum) / std::sqrt(static_cast<double>(k));
          for (std::size_t i = 0; i < kx && z > plan.x_grid[i]; ++i) ++out[mark * kx + i];
          ++mark;
        }
      }
    }
  };

  auto ranges = split_range(plan.replications, workers);
  std::vector<std::vector<std::int64_t>> shards(ranges.size());
  if (ranges.size() == 1) {
    run_range(ranges[0].first, ranges[0].second, shards[0]);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < ranges.size(); ++w)
      pool.emplace_back(run_range, ranges[w].first, ranges[w].second, std::ref(shards[w]));
    for (std::thread& t : pool) t.join();
  }

  SumTailReport rep;
  rep.q = plan.q;
  rep.slowvary = plan.slowvary.describe();
  rep.n_set = plan.n_set;
  rep.x_grid = plan.x_grid;
  rep.replications = plan.replications;
  rep.master_seed = plan.master_seed;
  rep.counts.assign(kn, std::vector<std::int64_t>(kx, 0));
  for (const auto& s : shards)
    for (std::size_t j = 0; j < kn; ++j)
      for (std::size_t i = 0; i < kx; ++i) rep.counts[j][i] += s[j * kx + i];

  rep.estimates.assign(kn, std::vector<double>(kx, 0.0));
  rep.wilson_lo = rep.estimates;
  rep.wilson_hi = rep.estimates;
  for (std::size_t j = 0; j < kn; ++j)
    for (std::size_t i = 0; i < kx; ++i) {
      rep.estimates[j][i] = static_cast<double>(rep.counts[j][i]) /
                            static_cast<double>(plan.replications);
      WilsonInterval w = wilson_interval(rep.counts[j][i], plan.replications);
      rep.wilson_lo[j][i] = w.lo;
      rep.wilson_hi[j][i] = w.hi;
    }

  rep.max_estimate.assign(kx, 0.0);
  rep.max_wilson_lo.assign(kx, 0.0);
  rep.max_wilson_hi.assign(kx, 0.0);
  std::vector<std::int64_t> max_count(kx, 0);
  for (std::size_t i = 0; i < kx; ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < kn; ++j)
      if (rep.counts[j][i] > rep.counts[arg][i]) arg = j;
    max_count[i] = rep.counts[arg][i];
    rep.max_estimate[i] = rep.estimates[arg][i];
    rep.max_wilson_lo[i] = rep.wilson_lo[arg][i];
    rep.max_wilson_hi[i] = rep.wilson_hi[arg][i];
  }

  // branch fits on -log of the tails, constrained so the upper envelope
  // clears every Wilson lower limit by construction
  auto g_weibull = [&plan](double x) { return std::pow(x, plan.q) * plan.slowvary(x); };
  auto g_gauss = [](double x) { return x * x; };
  auto fit_branch = [&](const char* covariate, auto g, const std::vector<double>& est,
                        const std::vector<std::int64_t>& fit_counts,
                        auto in_region) {
    SumTailBranch br;
    br.covariate = covariate;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < kx; ++i) {
      if (fit_counts[i] < 30 || !in_region(plan.x_grid[i])) continue;
      const double gx = g(plan.x_grid[i]);
      num += gx * -std::log(est[i]);
      den += gx * gx;
      ++br.points;
    }
    if (br.points == 0 || !(den > 0.0) || !(num > 0.0)) return br;
    br.c_ls = num / den;
    br.c_cap = kInf;
    for (std::size_t i = 0; i < kx; ++i) {
      if (max_count[i] <= 0) continue;  // zero counts constrain nothing
      br.c_cap = std::min(br.c_cap, -std::log(rep.max_wilson_lo[i]) / g(plan.x_grid[i]));
    }
    // shave a relative epsilon so exp(-c g) clears the binding limit despite rounding
    if (std::isfinite(br.c_cap)) br.c_cap *= 1.0 - 1e-9;
    br.c = std::isfinite(br.c_cap) ? std::min(br.c_ls, br.c_cap) : br.c_ls;
    br.fitted = br.c > 0.0;
    return br;
  };
  // the heavy branch is read off where its exponent is the smaller one
  // (large x for q < 2), the gaussian branch off the largest-n tail
  rep.weibull = fit_branch(
      "x^q R(x)", g_weibull, rep.max_estimate, max_count,
      [&](double x) { return g_weibull(x) <= g_gauss(x); });
  rep.gauss = fit_branch("x^2", g_gauss, rep.estimates.back(), rep.counts.back(),
                         [](double) { return true; });

  auto envelope = [&](double x, double mult) {
    double env = 1.0;
    if (rep.weibull.fitted) env = std::min(env, std::exp(-mult * rep.weibull.c * g_weibull(x)));
    if (rep.gauss.fitted) env = std::min(env, std::exp(-mult * rep.gauss.c * g_gauss(x)));
    return env;
  };
  for (std::size_t i = 0; i < kx; ++i) {
    const double x = plan.x_grid[i];
    if (envelope(x, 1.0) < rep.max_wilson_lo[i]) ++rep.upper_violations;
    if (envelope(x, 4.0) > rep.max_wilson_hi[i]) ++rep.lower_violations;
  }
  if (!rep.weibull.fitted && !rep.gauss.fitted)
    rep.verdict = "UNFITTED";
  else
    rep.verdict = (rep.upper_violations == 0 && rep.lower_violations == 0) ? "PASS" : "FAIL";
  return rep;
}

void SumTailReport::save_json(const std::string& path) const {
  ordered_json doc;
  doc["q"] = q;
  doc["slowvary"] = slowvary;
  doc["n_set"] = n_set;
  doc["x_grid"] = x_grid;
  doc["replications"] = replications;
  doc["master_seed"] = master_seed;
  auto tails = ordered_json::array();
  for (std::size_t j = 0; j < n_set.size(); ++j) {
    ordered_json t;
    t["n"] = n_set[j];
    t["counts"] = counts[j];
    t["estimates"] = estimates[j];
    t["wilson_lo"] = wilson_lo[j];
    t["wilson_hi"] = wilson_hi[j];
    tails.push_back(std::move(t));
  }
  doc["tails"] = std::move(tails);
  doc["max_estimate"] = max_estimate;
  doc["max_wilson_lo"] = max_wilson_lo;
  doc["max_wilson_hi"] = max_wilson_hi;
  auto branch_json = [](const SumTailBranch& b) {
    ordered_json j;
    j["covariate"] = b.covariate;
    j["fitted"] = b.fitted;
    if (b.fitted) {
      j["c"] = b.c;
      j["c_ls"] = b.c_ls;
      j["c_cap"] = b.c_cap;
    }
    j["points"] = b.points;
    return j;
  };
  doc["weibull_branch"] = branch_json(weibull);
  doc["gauss_branch"] = branch_json(gauss);
  doc["upper_violations"] = upper_violations;
  doc["lower_violations"] = lower_violations;
  doc["verdict"] = verdict;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace mletail

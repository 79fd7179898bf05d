#include "mletail/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "mletail/csv.hpp"

namespace mletail {

namespace {

struct PieceOptions {
  int n = 1;
  bool uniform = false;
};

struct PieceEval {
  double bound = 0.0;
  double y = kInf;
  double tau = 0.0;
  double delta_star = 0.0;
  int truncation_m = 0;
};

// Chained bound factor for one discretized region: natural kernel, norm
// normalization, chain-metric entropy, optimized delta.  The kernel is
// rescaled for n-sample sums or replaced by its uniform-in-n sup.
PieceEval eval_piece(const RiskRegion& region, const PieceOptions& opt) {
  PieceEval out;
  ContrastField field(*region.family, region.grid);
  PhiFunction base = natural_phi(field);
  out.tau = tau_sup(field, base);
  if (!(out.tau > 0.0) || !std::isfinite(out.tau))
    throw std::runtime_error("contrast norm diverges on the region");
  out.y = y_of_v(region, field);
  PhiFunction kernel = base;
  if (opt.uniform)
    kernel = phi_bar(base);
  else if (opt.n > 1)
    kernel = rescale_n(base, opt.n);
  const double level = std::sqrt(static_cast<double>(opt.n)) * out.y / out.tau;

  if (region.grid.size() <= 1) {  // chaining collapses to a Chernoff factor
    out.bound = std::exp(-conjugate(kernel, level));
    return out;
  }
  std::vector<double> s = chain_coordinates(field, base);
  const double tau = out.tau;
  DistanceOracle rho = [&s, tau](std::size_t i, std::size_t j) {
    return std::abs(s[i] - s[j]) / tau;
  };
  // a region whose realized intervals all degenerate is finitely many atoms
  double seg_len = 0.0;
  for (const auto& [lo, hi] : region.segments) seg_len += hi - lo;
  const double span = std::abs(region.grid.front()) + std::abs(region.grid.back());
  const double tol = 1e-9 * std::max(1.0, span);
  const bool exact_set = seg_len <= tol;
  // sampling resolution of the continuum part: the largest chain-metric gap
  // between neighbours inside one positive-length interval; exactly-located
  // atoms sit far from everything yet impose no resolution limit
  double floor_hint = -1.0;
  if (!exact_set) {
    double gap = 0.0;
    bool found = false;
    for (std::size_t i = 0; i + 1 < region.grid.size(); ++i)
      for (const auto& [lo, hi] : region.segments)
        if (hi - lo > tol && region.grid[i] >= lo - tol && region.grid[i + 1] <= hi + tol) {
          gap = std::max(gap, (s[i + 1] - s[i]) / tau);
          found = true;
          break;
        }
    if (found) floor_hint = gap;
  }
  EntropyProfile prof = entropy_profile(s.size(), rho, 24, exact_set, floor_hint);
  ChainingEvaluation ev = psi_bound(prof, kernel, level);
  out.bound = ev.bound;
  out.delta_star = ev.delta_star;
  out.truncation_m = ev.truncation_m;
  return out;
}

BoundResult empty_region_result() {
  BoundResult res;
  res.available = true;
  res.exact_empty = true;
  res.value = 0.0;
  res.flags.push_back("empty-region");
  return res;
}

// Shared core of the partition and sample pipelines: per-layer chained
// bounds summed, plus the trivial one-block partition when the box is
// bounded; the smaller of the two is reported.
BoundResult layered_bound(const ParametricFamily& fam, double w, const PieceOptions& opt,
                          LayerSchedule schedule, int k_max, int points) {
  BoundResult res;
  const int layer_points = std::max(64, points / 8);
  auto layers = partition_layers(fam, w, schedule, k_max, layer_points);
  if (layers.empty()) return empty_region_result();
  try {
    double sum = 0.0, worst = -1.0;
    bool refined = false;
    std::vector<double> terms;
    for (const RiskRegion& layer : layers) {
      PieceEval pe;
      try {
        pe = eval_piece(layer, opt);
      } catch (const std::exception&) {
        // a wildly uneven natural metric can leave a coarse grid unable to
        // resolve the layer's entropy; retry once at chain-worthy density
        int pts = std::max(512, 8 * static_cast<int>(layer.grid.size()));
        pe = eval_piece(RiskRegion::layer(fam, w, layer.layer_index, schedule, pts), opt);
        refined = true;
      }
      terms.push_back(pe.bound);
      sum += pe.bound;
      res.y = std::min(res.y, pe.y);
      res.tau = std::max(res.tau, pe.tau);
      if (pe.bound > worst) {
        worst = pe.bound;
        res.delta_star = pe.delta_star;
        res.truncation_m = pe.truncation_m;
      }
    }
    res.layers = static_cast<int>(layers.size());
    if (refined) res.flags.push_back("layer-refined");
    if (layers.back().layer_index == k_max) {
      // the region may extend past the last evaluated layer: accept the cut
      // only when the terms decay, and account for the rest geometrically
      std::size_t m = terms.size();
      double tail = 0.0;
      if (terms[m - 1] > 0.0) {
        bool decaying = m >= 3 && terms[m - 1] < terms[m - 2] && terms[m - 2] < terms[m - 3];
        if (!decaying)
          throw std::runtime_error("partition truncation unsafe: layer terms not decaying at k_max");
        double r = terms[m - 1] / terms[m - 2];
        tail = terms[m - 1] * r / (1.0 - r);
      }
      sum += tail;
      res.flags.push_back("layer-series-truncated");
      res.extras.emplace_back("series_tail", format_double(tail));
    }
    res.extras.emplace_back("partition_sum", format_double(sum));
    double best = std::min(1.0, sum);
    if (std::isfinite(fam.theta_lo) && std::isfinite(fam.theta_hi)) {
      // optional refinement; the layer sum alone is already a valid bound,
      // so a region the single chain cannot resolve is skipped, not fatal
      try {
        PieceEval one = eval_piece(RiskRegion::full(fam, w, points), opt);
        res.extras.emplace_back("one_block", format_double(one.bound));
        if (std::min(1.0, one.bound) < best) {
          best = std::min(1.0, one.bound);
          res.delta_star = one.delta_star;
          res.truncation_m = one.truncation_m;
          res.flags.push_back("one-block-dominates");
        }
      } catch (const std::exception&) {
        res.flags.push_back("one-block-unresolved");
      }
    }
    res.value = best;
    res.available = true;
  } catch (const std::exception& e) {
    res.reason = e.what();
    res.flags.push_back("unavailable");
    res.value = 1.0;
    res.available = false;
  }
  return res;
}

}  // namespace

BoundResult bound_compact(const ParametricFamily& fam, double v, int points) {
  RiskRegion region = RiskRegion::full(fam, v, points);
  if (region.empty()) return empty_region_result();
  BoundResult res;
  try {
    PieceEval pe = eval_piece(region, {});
    res.value = std::min(1.0, pe.bound);
    res.available = true;
    res.y = pe.y;
    res.tau = pe.tau;
    res.delta_star = pe.delta_star;
    res.truncation_m = pe.truncation_m;
    res.layers = 1;
    res.extras.emplace_back("raw_bound", format_double(pe.bound));
  } catch (const std::exception& e) {
    res.reason = e.what();
    res.flags.push_back("unavailable");
  }
  return res;
}

BoundResult bound_partition(const ParametricFamily& fam, double v, LayerSchedule schedule,
                            int k_max, int points) {
  return layered_bound(fam, v, PieceOptions{}, schedule, k_max, points);
}

BoundResult bound_sample(const ParametricFamily& fam, int n, double v, bool uniform,
                         LayerSchedule schedule, int k_max, int points) {
  if (n < 1) throw std::invalid_argument("bound_sample: n must be >= 1");
  PieceOptions opt;
  opt.n = n;
  opt.uniform = uniform;
  return layered_bound(fam, v / std::sqrt(static_cast<double>(n)), opt, schedule, k_max, points);
}

BoundResult bound_smooth(const ParametricFamily& fam, double v, int k_max, int points) {
  if (!(v >= 1.0)) throw std::invalid_argument("bound_smooth: v must be >= 1");
  BoundResult res;
  const int layer_points = std::max(64, points / 8);
  auto layers = partition_layers(fam, v, LayerSchedule::identity(), k_max, layer_points);
  if (layers.empty()) return empty_region_result();
  try {
    // one kernel for the whole series: the natural phi of the innermost
    // layer; outer-layer norm growth is absorbed into the constants
    std::optional<PhiFunction> phi;
    double c2 = 0.0, c3 = kInf;
    double ratio_lo = kInf, ratio_hi = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const RiskRegion& layer = layers[i];
      ContrastField f(fam, layer.grid);
      if (i == 0) phi = natural_phi(f);
      double tk = tau_sup(f, *phi);
      if (!std::isfinite(tk)) throw std::runtime_error("contrast norm diverges on a layer");
      double yk = y_of_v(layer, f);
      const double k = static_cast<double>(layer.layer_index);
      c2 = std::max(c2, tk / ((k + 1.0) * v));
      c3 = std::min(c3, yk / (k * v * k * v));
      res.tau = std::max(res.tau, tk);
      res.y = std::min(res.y, yk);
      const std::size_t step = std::max<std::size_t>(1, f.size() / 8);
      for (std::size_t j = 0; j < f.size(); j += step) {
        double r = fam.risk(f.theta(j), fam.theta0);
        if (!(r > 0.0)) continue;
        double ratio = f.h(j) / (r * r);
        ratio_lo = std::min(ratio_lo, ratio);
        ratio_hi = std::max(ratio_hi, ratio);
      }
    }
    if (!(ratio_hi <= 4.0 * ratio_lo)) res.flags.push_back("smoothness hypothesis unverified");
    res.extras.emplace_back("h_ratio_spread", format_double(ratio_hi / ratio_lo));

    // series over the formal layer index with the computed constants
    const double rate = c3 / c2;
    double sum = 0.0;
    int used = 0;
    for (int k = 1; k <= 100000; ++k) {
      double term = std::exp(-conjugate(*phi, rate * v * k * k / (k + 1.0)));
      sum += term;
      used = k;
      if (term < 1e-15 * std::max(sum, 1e-300)) break;
    }
    res.value = std::min(1.0, sum);
    res.available = true;
    res.layers = static_cast<int>(layers.size());
    res.truncation_m = used;
    res.extras.emplace_back("C2", format_double(c2));
    res.extras.emplace_back("C3", format_double(c3));
    res.extras.emplace_back("C9", format_double(0.5 * c3 / c2));
    res.extras.emplace_back("single_exponent_form",
                            format_double(std::exp(-conjugate(*phi, 0.5 * c3 / c2 * v))));
  } catch (const std::exception& e) {
    res.reason = e.what();
    res.flags.push_back("unavailable");
    res.value = 1.0;
    res.available = false;
  }
  return res;
}

std::string method_name(BoundMethod method) {
  switch (method) {
    case BoundMethod::Compact: return "compact";
    case BoundMethod::Partition: return "partition";
    case BoundMethod::Smooth: return "smooth";
    case BoundMethod::SampleN: return "sample-n";
    case BoundMethod::SampleUniform: return "sample-uniform";
  }
  throw std::logic_error("method_name: unknown method");
}

TailCurve tail_curve(BoundMethod method, const ParametricFamily& fam, const BoundParams& params,
                     const std::vector<double>& v_grid) {
  for (std::size_t i = 1; i < v_grid.size(); ++i)
    if (!(v_grid[i] > v_grid[i - 1]))
      throw std::invalid_argument("tail_curve: v_grid must be increasing");
  TailCurve curve;
  curve.method = method_name(method);
  curve.v_grid = v_grid;
  for (double v : v_grid) {
    BoundResult r;
    try {
      switch (method) {
        case BoundMethod::Compact:
          r = bound_compact(fam, v, params.points);
          break;
        case BoundMethod::Partition:
          r = bound_partition(fam, v, params.schedule, params.k_max, params.points);
          break;
        case BoundMethod::Smooth:
          r = bound_smooth(fam, v, params.k_max, params.points);
          break;
        case BoundMethod::SampleN:
          r = bound_sample(fam, params.n, v, false, params.schedule, params.k_max, params.points);
          break;
        case BoundMethod::SampleUniform:
          r = bound_sample(fam, params.n, v, true, params.schedule, params.k_max, params.points);
          break;
      }
    } catch (const std::exception& e) {  // per-point failures stay as gaps
      r.available = false;
      r.reason = e.what();
      r.flags.push_back("error");
    }
    curve.points.push_back(std::move(r));
  }
  // clamping happened in the pipelines; monotonize after diagnostics capture
  double run = 1.0;
  for (BoundResult& r : curve.points) {
    if (!r.available) continue;
    if (r.value > run) {
      r.value = run;
      r.flags.push_back("monotonized");
    }
    run = std::min(run, r.value);
  }
  return curve;
}

void TailCurve::save_csv(const std::string& path) const {
  CsvWriter w(path, "v,bound,method,delta_star,layers,flags");
  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    const BoundResult& r = points[i];
    std::string flags;
    for (const std::string& f : r.flags) {
      if (!flags.empty()) flags += ';';
      flags += f;
    }
    if (!r.available) {
      if (!flags.empty()) flags += ';';
      flags += "gap";
    }
    w.row({format_double(v_grid[i]), r.available ? format_double(r.value) : std::string(),
           method, format_double(r.delta_star), format_int(r.layers), flags});
  }
}

void TailCurve::save_json(const std::string& path) const {
  nlohmann::ordered_json doc;
  doc["method"] = method;
  auto pts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    const BoundResult& r = points[i];
    nlohmann::ordered_json p;
    p["v"] = v_grid[i];
    p["available"] = r.available;
    if (r.available)
      p["bound"] = r.value;
    else
      p["reason"] = r.reason;
    p["exact_empty"] = r.exact_empty;
    p["y"] = r.y;
    p["tau"] = r.tau;
    p["delta_star"] = r.delta_star;
    p["layers"] = r.layers;
    p["truncation_m"] = r.truncation_m;
    p["flags"] = r.flags;
    auto extras = nlohmann::ordered_json::object();
    for (const auto& [key, val] : r.extras) extras[key] = val;
    p["diagnostics"] = extras;
    pts.push_back(std::move(p));
  }
  doc["points"] = std::move(pts);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace mletail

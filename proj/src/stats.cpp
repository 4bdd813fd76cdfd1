#include "grl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "grl/errors.hpp"

namespace grl {

namespace {

// Continued fraction for I_x(a, b), modified Lentz; converges for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double cate_mse(std::span<const double> tau_hat, std::span<const double> tau_true,
                std::optional<std::span<const std::size_t>> subset) {
  if (tau_hat.size() != tau_true.size()) throw ShapeError("cate_mse: length mismatch");
  if (!subset) {
    if (tau_hat.empty()) throw ValidationError("cate_mse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < tau_hat.size(); ++i) s += (tau_hat[i] - tau_true[i]) * (tau_hat[i] - tau_true[i]);
    return s / static_cast<double>(tau_hat.size());
  }
  if (subset->empty()) throw ValidationError("cate_mse: empty node subset");
  double s = 0.0;
  for (std::size_t i : *subset) {
    if (i >= tau_hat.size()) throw ValidationError("cate_mse: subset index out of range");
    s += (tau_hat[i] - tau_true[i]) * (tau_hat[i] - tau_true[i]);
  }
  return s / static_cast<double>(subset->size());
}

HubPeripheryErrors hub_periphery_errors(std::span<const double> tau_hat, std::span<const double> tau_true,
                                        const Graph& g) {
  if (tau_hat.size() != g.num_nodes()) throw ShapeError("hub_periphery_errors: vector length differs from graph size");
  const DegreePartition part = degree_partition(g);
  return {cate_mse(tau_hat, tau_true, std::span<const std::size_t>(part.hubs)),
          cate_mse(tau_hat, tau_true, std::span<const std::size_t>(part.periphery))};
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("student_t_two_sided_p: df must be positive");
  if (std::isnan(t)) throw ValidationError("student_t_two_sided_p: t is NaN");
  if (std::isinf(t)) return 0.0;
  return std::clamp(incomplete_beta(df / 2.0, 0.5, df / (df + t * t)), 0.0, 1.0);
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("paired_t_test: samples differ in length");
  if (a.size() < 2) throw ValidationError("paired_t_test: need at least two pairs");
  Vector diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  PairedTest out;
  out.mean_diff = mean_of(diff);
  const double sd = sample_std(diff);
  const double n = static_cast<double>(diff.size());
  if (sd == 0.0) {
    if (out.mean_diff == 0.0) return out;
    out.degenerate = true;
    out.t = std::copysign(std::numeric_limits<double>::infinity(), out.mean_diff);
    out.p = 0.0;
    return out;
  }
  out.t = out.mean_diff / (sd / std::sqrt(n));
  out.p = student_t_two_sided_p(out.t, n - 1.0);
  return out;
}

const char* to_string(Verdict v) { return v == Verdict::Positive ? "POSITIVE" : "NEGATIVE"; }

PairComparison ExperimentSummary::compare(EstimatorKind a, EstimatorKind b) const {
  if (auto it = comparisons.find({a, b}); it != comparisons.end()) return it->second;
  if (auto it = comparisons.find({b, a}); it != comparisons.end()) {
    auto flip = [](PairedTest t) {
      t.mean_diff = -t.mean_diff;
      t.t = -t.t;
      return t;
    };
    return {flip(it->second.mse), flip(it->second.hub_mse), flip(it->second.periphery_mse)};
  }
  throw ValidationError(std::string("no comparison between ") + to_string(a) + " and " + to_string(b));
}

const EstimatorSummary& ExperimentSummary::at(EstimatorKind k) const {
  auto it = per_estimator.find(k);
  if (it == per_estimator.end()) throw ValidationError(std::string("summary has no estimator ") + to_string(k));
  return it->second;
}

Vector metric_series(std::span<const SeedResult> results, EstimatorKind kind, Metric metric) {
  Vector out;
  out.reserve(results.size());
  for (const SeedResult& r : results) {
    auto it = r.scores.find(kind);
    if (it == r.scores.end()) throw ValidationError(std::string("seed result lacks estimator ") + to_string(kind));
    switch (metric) {
      case Metric::Mse: out.push_back(it->second.mse); break;
      case Metric::HubMse: out.push_back(it->second.hub_mse); break;
      case Metric::PeripheryMse: out.push_back(it->second.periphery_mse); break;
    }
  }
  return out;
}

ExperimentSummary summarize(std::vector<SeedResult> results) {
  if (results.size() < 2) throw ValidationError("summarize: need at least two seeds");
  std::sort(results.begin(), results.end(), [](const SeedResult& x, const SeedResult& y) { return x.seed < y.seed; });
  std::set<EstimatorKind> kinds;
  for (const auto& [k, s] : results.front().scores) kinds.insert(k);
  for (const SeedResult& r : results) {
    std::set<EstimatorKind> here;
    for (const auto& [k, s] : r.scores) {
      if (!(s.mse >= 0.0) || !std::isfinite(s.mse)) throw ValidationError("summarize: MSE must be finite and >= 0");
      here.insert(k);
    }
    if (here != kinds) throw ValidationError("summarize: estimator sets differ across seeds");
  }
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].seed == results[i - 1].seed) throw ValidationError("summarize: duplicate seed");
  }

  ExperimentSummary out;
  for (const SeedResult& r : results) out.seeds.push_back(r.seed);
  for (EstimatorKind k : kAllEstimators) {
    if (kinds.count(k)) out.estimators.push_back(k);
  }
  for (EstimatorKind k : out.estimators) {
    const Vector mse = metric_series(results, k, Metric::Mse);
    out.per_estimator[k] = {mean_of(mse), sample_std(mse), mean_of(metric_series(results, k, Metric::HubMse)),
                            mean_of(metric_series(results, k, Metric::PeripheryMse))};
  }
  for (std::size_t i = 0; i < out.estimators.size(); ++i) {
    for (std::size_t j = i + 1; j < out.estimators.size(); ++j) {
      const EstimatorKind a = out.estimators[i];
      const EstimatorKind b = out.estimators[j];
      PairComparison c;
      c.mse = paired_t_test(metric_series(results, a, Metric::Mse), metric_series(results, b, Metric::Mse));
      c.hub_mse = paired_t_test(metric_series(results, a, Metric::HubMse), metric_series(results, b, Metric::HubMse));
      c.periphery_mse = paired_t_test(metric_series(results, a, Metric::PeripheryMse),
                                      metric_series(results, b, Metric::PeripheryMse));
      out.comparisons[{a, b}] = c;
    }
  }
  if (kinds.count(EstimatorKind::Baseline) && kinds.count(EstimatorKind::GraphRLearner)) {
    out.verdict = two_model_test(out);
  }
  return out;
}

Verdict two_model_test(const ExperimentSummary& summary, double ratio_threshold, double alpha) {
  const double base = summary.at(EstimatorKind::Baseline).mean_mse;
  const double graph = summary.at(EstimatorKind::GraphRLearner).mean_mse;
  const PairedTest t = summary.compare(EstimatorKind::Baseline, EstimatorKind::GraphRLearner).mse;
  const double ratio = graph > 0.0 ? base / graph : (base > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  return (ratio >= ratio_threshold && t.p < alpha) ? Verdict::Positive : Verdict::Negative;
}

}  // namespace grl

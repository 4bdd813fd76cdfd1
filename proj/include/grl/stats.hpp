#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grl/estimators.hpp"
#include "grl/graph.hpp"
#include "grl/matrix.hpp"

namespace grl {

/// Mean squared error over `subset` (all nodes when absent).
double cate_mse(std::span<const double> tau_hat, std::span<const double> tau_true,
                std::optional<std::span<const std::size_t>> subset = std::nullopt);

struct HubPeripheryErrors {
  double hub_mse;
  double periphery_mse;
};

/// Sub-MSEs on the sets returned by degree_partition(g).
HubPeripheryErrors hub_periphery_errors(std::span<const double> tau_hat, std::span<const double> tau_true,
                                        const Graph& g);

/// Regularised incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| ≥ |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct PairedTest {
  double mean_diff = 0.0;  // mean(a - b)
  double t = 0.0;
  double p = 1.0;
  bool degenerate = false;  // nonzero mean with zero spread: t is infinite, p reported as 0
};

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct EstimatorScores {
  double mse = 0.0;
  double hub_mse = 0.0;
  double periphery_mse = 0.0;
  double wall_time_s = 0.0;
  Vector tau_hat;  // optional retention; empty when not kept
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::map<EstimatorKind, EstimatorScores> scores;
};

struct EstimatorSummary {
  double mean_mse = 0.0;
  double std_mse = 0.0;  // sample std, n - 1 denominator
  double mean_hub_mse = 0.0;
  double mean_periphery_mse = 0.0;
};

/// Paired tests of one ordered estimator pair, on the three per-seed metrics.
struct PairComparison {
  PairedTest mse;
  PairedTest hub_mse;
  PairedTest periphery_mse;
};

enum class Verdict { Positive, Negative };
const char* to_string(Verdict v);

struct ExperimentSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<EstimatorKind> estimators;  // in kAllEstimators order
  std::map<EstimatorKind, EstimatorSummary> per_estimator;
  std::map<std::pair<EstimatorKind, EstimatorKind>, PairComparison> comparisons;  // (a, b) with a before b
  std::optional<Verdict> verdict;  // set when Baseline and GraphRLearner are both present

  /// Looks up (a, b) or flips (b, a); throws ValidationError when either is absent.
  PairComparison compare(EstimatorKind a, EstimatorKind b) const;
  const EstimatorSummary& at(EstimatorKind k) const;
};

/// Per-seed values of one metric for `kind`, ordered by seed.
enum class Metric { Mse, HubMse, PeripheryMse };
Vector metric_series(std::span<const SeedResult> results, EstimatorKind kind, Metric metric);

ExperimentSummary summarize(std::vector<SeedResult> results);

/// POSITIVE iff mean MSE(Baseline) / mean MSE(GraphRLearner) ≥ ratio_threshold
/// and their paired p < alpha.
Verdict two_model_test(const ExperimentSummary& summary, double ratio_threshold = 2.0, double alpha = 0.01);

}  // namespace grl

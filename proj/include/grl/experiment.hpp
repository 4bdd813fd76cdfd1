#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grl/config.hpp"
#include "grl/stats.hpp"

namespace grl {

struct RunOptions {
  std::filesystem::path out_dir = "results";
  std::size_t parallelism = 0;  // 0: available cores
  bool record_timing = false;   // false writes wall_time_s as 0 so results.csv is reproducible byte for byte
  bool write_embeddings = true;  // GraphRLearner embeddings of the first seed
  bool progress = false;         // one line per finished seed on stderr
  // Called when a seed starts; throwing marks that seed as failed. Test hook.
  std::function<void(std::uint64_t seed)> seed_hook;
};

struct SeedFailure {
  std::uint64_t seed;
  std::string estimator;  // empty when the failure happened before any estimator ran
  std::string message;
  std::optional<std::size_t> epoch;
};

struct RunResult {
  std::vector<SeedResult> results;  // successful seeds, ascending
  std::vector<SeedFailure> failures;
  std::optional<ExperimentSummary> summary;  // needs at least two successful seeds
  std::vector<std::filesystem::path> files;  // written outputs, relative to out_dir

  /// More than 10% of seeds failed.
  bool over_failure_budget(std::size_t num_seeds) const;
};

std::size_t default_parallelism();

struct SeedExtras {
  std::optional<DenseMatrix> embeddings;  // GraphRLearner final-stage embeddings
  Vector true_tau;
};

/// Runs one seed of every requested estimator. Nuisance fits are shared by the
/// pipelines of the same nuisance family, which leaves results unchanged since
/// each family draws from its own stream.
SeedResult run_seed(const ResolvedExperiment& exp, const std::vector<EstimatorKind>& estimators, std::uint64_t seed,
                    bool record_timing = false, SeedExtras* extras = nullptr);

/// Seeds 0..num_seeds-1 across a worker pool; outputs are written once all seeds finish.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

struct SweepPoint {
  std::string value;
  std::filesystem::path out_dir;
  RunResult run;
};

/// One run_experiment per value of `param_path`, each into out_dir/<param>=<value>/,
/// plus sweep.csv (long format) and sweep_summary.csv in out_dir.
std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, const std::string& param_path,
                              const std::vector<std::string>& values, const RunOptions& options);

/// Header "node_id,true_tau,e1..e<hidden>" then one row per node.
void write_embeddings_csv(const std::filesystem::path& path, std::span<const double> true_tau,
                          const DenseMatrix& embeddings);

/// Trains GraphRLearner for one seed and writes its embeddings CSV.
void export_embeddings(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::string format_real(double v);  // shortest text that round-trips

extern const char* const kCodeVersion;

}  // namespace grl

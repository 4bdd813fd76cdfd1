#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "grl/dgp.hpp"
#include "grl/graph.hpp"
#include "grl/models.hpp"
#include "grl/optim.hpp"

namespace grl {

enum class EstimatorKind { Baseline, Ablation, SanityCheck, GraphRLearner, TLearner };

inline constexpr std::array<EstimatorKind, 5> kAllEstimators{
    EstimatorKind::Baseline, EstimatorKind::Ablation, EstimatorKind::SanityCheck, EstimatorKind::GraphRLearner,
    EstimatorKind::TLearner};

const char* to_string(EstimatorKind k);
/// Accepts the enum spelling ("GraphRLearner") or snake case ("graph_rlearner").
EstimatorKind parse_estimator_kind(const std::string& name);

enum class ModelFamily { Mlp, Gnn, Linear };
const char* to_string(ModelFamily f);

/// Component classes of a pipeline. For the T-Learner `final_stage` is the
/// single outcome network and `nuisance` is unused.
struct PipelineDescription {
  EstimatorKind kind;
  bool r_learner;
  ModelFamily nuisance;
  ModelFamily final_stage;
};

PipelineDescription describe(EstimatorKind kind);

struct TrainConfig {
  std::size_t nuisance_epochs = 150;
  std::size_t cate_epochs = 200;
  std::size_t hidden_dim = 32;
  std::size_t num_layers = 2;
  double lr = 1e-3;

  void validate() const;
};

/// {in, hidden × (num_layers - 1), 1}
std::vector<std::size_t> layer_dims(std::size_t in_dim, const TrainConfig& cfg);

struct NuisancePair {
  AnyModel outcome_model;     // Y regression, MSE
  AnyModel propensity_model;  // T logit, logistic loss
  TrainTrace outcome_trace;
  TrainTrace propensity_trace;
};

NuisancePair fit_nuisance(ModelFamily family, const NodeDataset& ds, const Graph& g, const TrainConfig& cfg, Rng& rng);
NuisancePair fit_nuisance(EstimatorKind kind, const NodeDataset& ds, const Graph& g, const TrainConfig& cfg, Rng& rng);

struct Residuals {
  Vector y_res;
  Vector t_res;
};

/// y - m(X, G) and t - sigmoid(logit(X, G)).
Residuals residualize(const NuisancePair& np, const NodeDataset& ds, const Graph& g);

/// τ(X) = Xθ + θ₀
struct LinearCate {
  Vector theta;
  double intercept = 0.0;

  Vector predict(const DenseMatrix& x) const;
};

// Weighted ridge least squares of y_res / t_res on [X, 1] with weights t_res²,
// which is the exact minimiser of the R-loss over affine τ. Nodes with
// |t_res| < 1e-6 get weight zero; ridge 1e-6 is added to the Gram diagonal.
LinearCate fit_final_linear(std::span<const double> y_res, std::span<const double> t_res, const DenseMatrix& x);

struct GcnCate {
  GcnModel model;
  Vector tau_hat;
  DenseMatrix embeddings;  // penultimate-layer node representation
  TrainTrace trace;
  bool degenerate = false;  // every |t_res| ≈ 0: loss is flat in τ̂, training skipped
};

GcnCate fit_final_gnn(std::span<const double> y_res, std::span<const double> t_res, const DenseMatrix& x,
                      const Graph& g, const TrainConfig& cfg, Rng& rng);

struct CateEstimate {
  PipelineDescription pipeline;
  Vector tau_hat;
  Residuals residuals;  // empty for the T-Learner
  std::optional<DenseMatrix> embeddings;
};

// Training streams a pipeline draws from. Pipelines that share a nuisance
// family share its stream, so e.g. Baseline and SanityCheck see identical
// MLP nuisance fits and differ only in the final stage.
struct TrainingStreams {
  Rng nuisance;
  Rng final_stage;
  Rng tlearner;
};

TrainingStreams training_streams(std::uint64_t seed, EstimatorKind kind);

/// R-Learner cell of the 2x2 grid; a pre-fitted nuisance pair can be supplied.
CateEstimate estimate_rlearner(EstimatorKind kind, const NodeDataset& ds, const Graph& g, const TrainConfig& cfg,
                               TrainingStreams& streams, const NuisancePair* prefit = nullptr);
CateEstimate finish_rlearner(EstimatorKind kind, const NuisancePair& np, const NodeDataset& ds, const Graph& g,
                             const TrainConfig& cfg, Rng& final_rng);

/// Trains the T-Learner's outcome network on [X ‖ T] → Y for
/// nuisance_epochs + cate_epochs steps.
GcnModel fit_tlearner_model(const NodeDataset& ds, const Graph& g, const TrainConfig& cfg, Rng& rng);

/// One GCN on [X ‖ T] → Y; τ̂ = ŷ(T=1) − ŷ(T=0).
CateEstimate estimate_tlearner(const NodeDataset& ds, const Graph& g, const TrainConfig& cfg, Rng& rng);
Vector tlearner_effect(const GcnModel& m, const DenseMatrix& a_hat, const DenseMatrix& x, double treated_value,
                       double control_value);

/// Runs `kind` with streams derived from `seed`.
CateEstimate estimate(EstimatorKind kind, const NodeDataset& ds, const Graph& g, const TrainConfig& cfg,
                      std::uint64_t seed);

}  // namespace grl

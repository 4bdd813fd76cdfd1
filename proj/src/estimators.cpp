#include "grl/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "grl/errors.hpp"

namespace grl {

namespace {

constexpr double kRidge = 1e-6;
constexpr double kMinTreatmentResidual = 1e-6;

AnyModel make_model(ModelFamily family, std::size_t in_dim, const TrainConfig& cfg, Rng& rng) {
  const auto dims = layer_dims(in_dim, cfg);
  if (family == ModelFamily::Mlp) return make_mlp(dims, rng);
  if (family == ModelFamily::Gnn) return make_gcn(dims, rng);
  throw ConfigError("nuisance models are MLPs or GNNs");
}

// In-place Cholesky solve of the SPD system g·x = rhs.
Vector solve_spd(DenseMatrix g, Vector rhs) {
  const std::size_t n = g.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = g(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= g(j, k) * g(j, k);
    if (!(diag > 0.0)) throw NumericError("fit_final_linear: Gram matrix is not positive definite");
    const double l_jj = std::sqrt(diag);
    g(j, j) = l_jj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = g(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= g(i, k) * g(j, k);
      g(i, j) = s / l_jj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= g(i, k) * rhs[k];
    rhs[i] = s / g(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = rhs[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= g(k, ii) * rhs[k];
    rhs[ii] = s / g(ii, ii);
  }
  return rhs;
}

std::string normalise_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ' || c == '+') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Baseline: return "Baseline";
    case EstimatorKind::Ablation: return "Ablation";
    case EstimatorKind::SanityCheck: return "SanityCheck";
    case EstimatorKind::GraphRLearner: return "GraphRLearner";
    case EstimatorKind::TLearner: return "TLearner";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  const std::string key = normalise_name(name);
  for (EstimatorKind k : kAllEstimators) {
    if (normalise_name(to_string(k)) == key) return k;
  }
  throw ConfigError("unknown estimator '" + name + "'");
}

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Mlp: return "MLP";
    case ModelFamily::Gnn: return "GNN";
    case ModelFamily::Linear: return "Linear";
  }
  return "?";
}

PipelineDescription describe(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Baseline: return {kind, true, ModelFamily::Mlp, ModelFamily::Linear};
    case EstimatorKind::Ablation: return {kind, true, ModelFamily::Gnn, ModelFamily::Linear};
    case EstimatorKind::SanityCheck: return {kind, true, ModelFamily::Mlp, ModelFamily::Gnn};
    case EstimatorKind::GraphRLearner: return {kind, true, ModelFamily::Gnn, ModelFamily::Gnn};
    case EstimatorKind::TLearner: return {kind, false, ModelFamily::Gnn, ModelFamily::Gnn};
  }
  throw ConfigError("unknown estimator kind");
}

void TrainConfig::validate() const {
  if (hidden_dim == 0) throw ValidationError("hidden_dim must be positive");
  if (num_layers == 0) throw ValidationError("num_layers must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be positive");
}

std::vector<std::size_t> layer_dims(std::size_t in_dim, const TrainConfig& cfg) {
  std::vector<std::size_t> dims{in_dim};
  for (std::size_t k = 1; k < cfg.num_layers; ++k) dims.push_back(cfg.hidden_dim);
  dims.push_back(1);
  return dims;
}

NuisancePair fit_nuisance(ModelFamily family, const NodeDataset& ds, const Graph& g, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = ds.x.cols();
  NuisancePair np{make_model(family, d, cfg, rng), make_model(family, d, cfg, rng), {}, {}};
  np.outcome_trace =
      train_model(np.outcome_model, LossKind::Mse, g.a_hat(), ds.x, LossTargets{ds.y, {}}, cfg.nuisance_epochs, cfg.lr);
  np.propensity_trace = train_model(np.propensity_model, LossKind::Logistic, g.a_hat(), ds.x, LossTargets{ds.t, {}},
                                    cfg.nuisance_epochs, cfg.lr);
  return np;
}

NuisancePair fit_nuisance(EstimatorKind kind, const NodeDataset& ds, const Graph& g, const TrainConfig& cfg, Rng& rng) {
  const PipelineDescription p = describe(kind);
  if (!p.r_learner) throw ConfigError("the T-Learner has no nuisance stage");
  return fit_nuisance(p.nuisance, ds, g, cfg, rng);
}

Residuals residualize(const NuisancePair& np, const NodeDataset& ds, const Graph& g) {
  const DenseMatrix m = forward(np.outcome_model, g.a_hat(), ds.x);
  const DenseMatrix logits = forward(np.propensity_model, g.a_hat(), ds.x);
  const std::size_t n = ds.num_nodes();
  Residuals r{Vector(n), Vector(n)};
  for (std::size_t i = 0; i < n; ++i) {
    r.y_res[i] = ds.y[i] - m(i, 0);
    // Keep p strictly inside (0, 1) even when the logit saturates.
    const double p = std::clamp(sigmoid(logits(i, 0)), 1e-12, 1.0 - 1e-12);
    r.t_res[i] = ds.t[i] - p;
  }
  return r;
}

Vector LinearCate::predict(const DenseMatrix& x) const {
  if (x.cols() != theta.size()) throw ShapeError("LinearCate::predict: feature width mismatch");
  Vector out(x.rows(), intercept);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < theta.size(); ++j) out[i] += x(i, j) * theta[j];
  return out;
}

LinearCate fit_final_linear(std::span<const double> y_res, std::span<const double> t_res, const DenseMatrix& x) {
  const std::size_t n = x.rows();
  if (y_res.size() != n || t_res.size() != n) throw ShapeError("fit_final_linear: residuals do not match X rows");
  const std::size_t p = x.cols() + 1;
  DenseMatrix gram(p, p);
  Vector rhs(p, 0.0);
  Vector a(p);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(t_res[i]) < kMinTreatmentResidual) continue;
    const double w = t_res[i] * t_res[i];
    // w · (y_res / t_res) == t_res · y_res
    const double wz = t_res[i] * y_res[i];
    for (std::size_t j = 0; j + 1 < p; ++j) a[j] = x(i, j);
    a[p - 1] = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      rhs[j] += wz * a[j];
      for (std::size_t k = 0; k <= j; ++k) gram(j, k) += w * a[j] * a[k];
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    gram(j, j) += kRidge;
    for (std::size_t k = 0; k < j; ++k) gram(k, j) = gram(j, k);
  }
  Vector beta = solve_spd(std::move(gram), std::move(rhs));
  LinearCate out;
  out.intercept = beta.back();
  beta.pop_back();
  out.theta = std::move(beta);
  return out;
}

GcnCate fit_final_gnn(std::span<const double> y_res, std::span<const double> t_res, const DenseMatrix& x,
                      const Graph& g, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = x.rows();
  if (y_res.size() != n || t_res.size() != n || g.num_nodes() != n) {
    throw ShapeError("fit_final_gnn: residuals, features and graph disagree on node count");
  }
  GcnCate out;
  out.model = make_gcn(layer_dims(x.cols(), cfg), rng);
  const double max_t = std::accumulate(t_res.begin(), t_res.end(), 0.0,
                                       [](double m, double v) { return std::max(m, std::abs(v)); });
  out.degenerate = max_t < 1e-12;
  if (!out.degenerate) {
    const LossTargets targets{Vector(y_res.begin(), y_res.end()), Vector(t_res.begin(), t_res.end())};
    out.trace = train_gcn(out.model, LossKind::RLoss, g.a_hat(), x, targets, cfg.cate_epochs, cfg.lr);
  }
  const DenseMatrix pred = gcn_forward(out.model, g.a_hat(), x);
  out.tau_hat = pred.col(0);
  if (out.model.num_layers() >= 2) out.embeddings = gcn_embeddings(out.model, g.a_hat(), x);
  return out;
}

TrainingStreams training_streams(std::uint64_t seed, EstimatorKind kind) {
  const PipelineDescription p = describe(kind);
  const std::string nuisance_label = std::string("train/nuisance/") + to_string(p.nuisance);
  return TrainingStreams{make_stream(seed, nuisance_label), make_stream(seed, "train/final/GNN"),
                         make_stream(seed, "train/tlearner")};
}

CateEstimate finish_rlearner(EstimatorKind kind, const NuisancePair& np, const NodeDataset& ds, const Graph& g,
                             const TrainConfig& cfg, Rng& final_rng) {
  const PipelineDescription p = describe(kind);
  if (!p.r_learner) throw ConfigError("finish_rlearner: not an R-Learner pipeline");
  CateEstimate est{p, {}, residualize(np, ds, g), std::nullopt};
  if (p.final_stage == ModelFamily::Linear) {
    est.tau_hat = fit_final_linear(est.residuals.y_res, est.residuals.t_res, ds.x).predict(ds.x);
  } else {
    GcnCate fit = fit_final_gnn(est.residuals.y_res, est.residuals.t_res, ds.x, g, cfg, final_rng);
    est.tau_hat = std::move(fit.tau_hat);
    est.embeddings = std::move(fit.embeddings);
  }
  if (!all_finite(est.tau_hat)) throw TrainingError("non-finite CATE estimate", cfg.cate_epochs);
  return est;
}

CateEstimate estimate_rlearner(EstimatorKind kind, const NodeDataset& ds, const Graph& g, const TrainConfig& cfg,
                               TrainingStreams& streams, const NuisancePair* prefit) {
  if (kind == EstimatorKind::TLearner) throw ConfigError("estimate_rlearner: use estimate_tlearner for the T-Learner");
  if (prefit != nullptr) return finish_rlearner(kind, *prefit, ds, g, cfg, streams.final_stage);
  const NuisancePair np = fit_nuisance(kind, ds, g, cfg, streams.nuisance);
  return finish_rlearner(kind, np, ds, g, cfg, streams.final_stage);
}

Vector tlearner_effect(const GcnModel& m, const DenseMatrix& a_hat, const DenseMatrix& x, double treated_value,
                       double control_value) {
  const std::size_t n = x.rows();
  const DenseMatrix treated = gcn_forward(m, a_hat, hconcat(x, DenseMatrix(n, 1, treated_value)));
  const DenseMatrix control = gcn_forward(m, a_hat, hconcat(x, DenseMatrix(n, 1, control_value)));
  Vector tau(n);
  for (std::size_t i = 0; i < n; ++i) tau[i] = treated(i, 0) - control(i, 0);
  return tau;
}

GcnModel fit_tlearner_model(const NodeDataset& ds, const Graph& g, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const DenseMatrix input = hconcat(ds.x, DenseMatrix::column(ds.t));
  GcnModel model = make_gcn(layer_dims(input.cols(), cfg), rng);
  train_gcn(model, LossKind::Mse, g.a_hat(), input, LossTargets{ds.y, {}}, cfg.nuisance_epochs + cfg.cate_epochs,
            cfg.lr);
  return model;
}

CateEstimate estimate_tlearner(const NodeDataset& ds, const Graph& g, const TrainConfig& cfg, Rng& rng) {
  const GcnModel model = fit_tlearner_model(ds, g, cfg, rng);
  const DenseMatrix input = hconcat(ds.x, DenseMatrix::column(ds.t));
  CateEstimate est{describe(EstimatorKind::TLearner), tlearner_effect(model, g.a_hat(), ds.x, 1.0, 0.0), {},
                   std::nullopt};
  if (model.num_layers() >= 2) est.embeddings = gcn_embeddings(model, g.a_hat(), input);
  return est;
}

CateEstimate estimate(EstimatorKind kind, const NodeDataset& ds, const Graph& g, const TrainConfig& cfg,
                      std::uint64_t seed) {
  TrainingStreams streams = training_streams(seed, kind);
  if (kind == EstimatorKind::TLearner) return estimate_tlearner(ds, g, cfg, streams.tlearner);
  return estimate_rlearner(kind, ds, g, cfg, streams);
}

}  // namespace grl

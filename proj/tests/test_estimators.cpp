#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grl/config.hpp"
#include "grl/dgp.hpp"
#include "grl/errors.hpp"
#include "grl/estimators.hpp"
#include "grl/experiment.hpp"
#include "grl/graph.hpp"
#include "grl/losses.hpp"
#include "grl/stats.hpp"

using namespace grl;

namespace {

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance_of(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

GraphSpec ba(std::size_t n) {
  GraphSpec s;
  s.n = n;
  return s;
}

ResolvedExperiment main_experiment() { return resolve(parse_config(std::string(CONFIG_DIR) + "/main_ba_simple_h.yaml")); }

void perturb(LayerStack& layers, double stddev, Rng& rng) {
  std::normal_distribution<double> noise(0.0, stddev);
  for (LinearLayer& l : layers) {
    for (double& w : l.weight.data()) w += noise(rng);
    for (double& b : l.bias) b += noise(rng);
  }
}

LayerStack& layers_of(AnyModel& m) {
  return std::visit([](auto& model) -> LayerStack& { return model.layers; }, m);
}

// Per-seed results of the main configuration, computed once and shared.
const std::vector<SeedResult>& main_results() {
  static const std::vector<SeedResult> results = [] {
    const ResolvedExperiment exp = main_experiment();
    std::vector<SeedResult> out;
    for (std::uint64_t s = 0; s < 5; ++s) out.push_back(run_seed(exp, {kAllEstimators.begin(), kAllEstimators.end()}, s));
    return out;
  }();
  return results;
}

double mean_mse(EstimatorKind k) {
  double total = 0.0;
  for (const SeedResult& r : main_results()) total += r.scores.at(k).mse;
  return total / static_cast<double>(main_results().size());
}

}  // namespace

TEST_CASE("grid components follow the 2x2 design") {
  CHECK(describe(EstimatorKind::Baseline).nuisance == ModelFamily::Mlp);
  CHECK(describe(EstimatorKind::Baseline).final_stage == ModelFamily::Linear);
  CHECK(describe(EstimatorKind::Ablation).nuisance == ModelFamily::Gnn);
  CHECK(describe(EstimatorKind::Ablation).final_stage == ModelFamily::Linear);
  CHECK(describe(EstimatorKind::SanityCheck).nuisance == ModelFamily::Mlp);
  CHECK(describe(EstimatorKind::SanityCheck).final_stage == ModelFamily::Gnn);
  CHECK(describe(EstimatorKind::GraphRLearner).nuisance == ModelFamily::Gnn);
  CHECK(describe(EstimatorKind::GraphRLearner).final_stage == ModelFamily::Gnn);
  CHECK_FALSE(describe(EstimatorKind::TLearner).r_learner);
  for (EstimatorKind k : kAllEstimators) {
    CHECK(parse_estimator_kind(to_string(k)) == k);
    if (k != EstimatorKind::TLearner) CHECK(describe(k).r_learner);
  }
  CHECK(parse_estimator_kind("graph_rlearner") == EstimatorKind::GraphRLearner);
  CHECK_THROWS_AS(parse_estimator_kind("SLearner"), ConfigError);
}

TEST_CASE("estimate_rlearner returns the components it was asked for") {
  const GeneratedData gd = generate_dataset(ba(120), DgpConfig{}, 0);
  TrainConfig cfg;
  cfg.nuisance_epochs = 5;
  cfg.cate_epochs = 5;
  for (EstimatorKind k : {EstimatorKind::Baseline, EstimatorKind::Ablation, EstimatorKind::SanityCheck,
                          EstimatorKind::GraphRLearner}) {
    const CateEstimate est = estimate(k, gd.data, gd.graph, cfg, 0);
    CHECK(est.pipeline.kind == k);
    CHECK(est.tau_hat.size() == 120);
    CHECK(est.embeddings.has_value() == (describe(k).final_stage == ModelFamily::Gnn));
    if (est.embeddings) CHECK(est.embeddings->cols() == cfg.hidden_dim);
  }
  TrainingStreams streams = training_streams(0, EstimatorKind::TLearner);
  CHECK_THROWS_AS(estimate_rlearner(EstimatorKind::TLearner, gd.data, gd.graph, cfg, streams), ConfigError);
}

TEST_CASE("fit_nuisance: noiseless linear-baseline GNN outcome fit after 150 epochs") {
  DgpConfig dgp;
  dgp.noise_level = 0.0;
  GeneratedData gd = generate_dataset(ba(1000), dgp, 0);
  // τ = 0: the outcome is the linear baseline alone.
  gd.data.tau.assign(1000, 0.0);
  gd.data.y = gd.data.baseline;
  Rng rng(1);
  const NuisancePair np = fit_nuisance(ModelFamily::Gnn, gd.data, gd.graph, TrainConfig{}, rng);
  const DenseMatrix m = forward(np.outcome_model, gd.graph.a_hat(), gd.data.x);
  MESSAGE("GNN outcome training MSE after 150 epochs: " << loss_mse(m.col(0), gd.data.y));
  CHECK(loss_mse(m.col(0), gd.data.y) < 0.05);
}

TEST_CASE("fit_nuisance: constant outcome is learned and leaves near-zero residuals") {
  GeneratedData gd = generate_dataset(ba(200), DgpConfig{}, 1);
  gd.data.y.assign(200, 1.5);
  TrainConfig cfg;
  cfg.nuisance_epochs = 2000;
  cfg.lr = 0.01;
  for (ModelFamily f : {ModelFamily::Mlp, ModelFamily::Gnn}) {
    Rng rng(2);
    const NuisancePair np = fit_nuisance(f, gd.data, gd.graph, cfg, rng);
    const Residuals r = residualize(np, gd.data, gd.graph);
    for (double v : r.y_res) CHECK(std::abs(v) < 0.05);
  }
}

TEST_CASE("fit_nuisance: no confounding gives a near-balanced propensity") {
  DgpConfig dgp;
  dgp.propensity_scale = 0.0;
  const GeneratedData gd = generate_dataset(ba(1000), dgp, 2);
  for (ModelFamily f : {ModelFamily::Mlp, ModelFamily::Gnn}) {
    Rng rng(3);
    const NuisancePair np = fit_nuisance(f, gd.data, gd.graph, TrainConfig{}, rng);
    const DenseMatrix logits = forward(np.propensity_model, gd.graph.a_hat(), gd.data.x);
    double mean_p = 0.0;
    for (double z : logits.col(0)) mean_p += sigmoid(z) / 1000.0;
    CHECK(mean_p >= 0.45);
    CHECK(mean_p <= 0.55);
  }
}

TEST_CASE("fit_nuisance reports divergence with its epoch") {
  GeneratedData gd = generate_dataset(ba(50), DgpConfig{}, 3);
  gd.data.y[7] = std::nan("");
  Rng rng(4);
  CHECK_THROWS_AS(fit_nuisance(ModelFamily::Mlp, gd.data, gd.graph, TrainConfig{}, rng), TrainingError);
}

TEST_CASE("residualize: constant one-half propensity model") {
  const GeneratedData gd = generate_dataset(ba(60), DgpConfig{}, 4);
  Rng rng(5);
  TrainConfig cfg;
  cfg.nuisance_epochs = 1;
  NuisancePair np = fit_nuisance(ModelFamily::Mlp, gd.data, gd.graph, cfg, rng);
  for (LinearLayer& l : layers_of(np.propensity_model)) {
    std::fill(l.weight.data().begin(), l.weight.data().end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  const Residuals r = residualize(np, gd.data, gd.graph);
  for (std::size_t i = 0; i < 60; ++i) CHECK(r.t_res[i] == gd.data.t[i] - 0.5);
}

TEST_CASE("residualize: true nuisances give unit slope of y_res on t_res * tau") {
  DgpConfig dgp;
  dgp.noise_level = 0.0;
  const GeneratedData gd = generate_dataset(ba(1000), dgp, 5);
  const NodeDataset& ds = gd.data;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const double m = ds.baseline[i] + ds.propensity[i] * ds.tau[i];
    const double y_res = ds.y[i] - m;
    const double t_res = ds.t[i] - ds.propensity[i];
    sxy += t_res * ds.tau[i] * y_res;
    sxx += t_res * ds.tau[i] * t_res * ds.tau[i];
  }
  CHECK(sxy / sxx == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trained residuals are centred and treatment residuals stay inside (-1, 1)") {
  const ResolvedExperiment exp = main_experiment();
  const GeneratedData gd = generate_dataset(exp.graph, exp.dgp, 0);
  for (ModelFamily f : {ModelFamily::Mlp, ModelFamily::Gnn}) {
    Rng rng = make_stream(0, std::string("train/nuisance/") + to_string(f));
    const NuisancePair np = fit_nuisance(f, gd.data, gd.graph, exp.train, rng);
    const Residuals r = residualize(np, gd.data, gd.graph);
    MESSAGE(std::string(to_string(f)) << " residual means: y " << mean_of(r.y_res) << ", t " << mean_of(r.t_res));
    CHECK(std::abs(mean_of(r.y_res)) < 0.1);
    CHECK(std::abs(mean_of(r.t_res)) < 0.1);
    for (double t : r.t_res) {
      CHECK(t > -1.0);
      CHECK(t < 1.0);
    }
  }
}

TEST_CASE("fit_final_linear: realizable case recovers the coefficients") {
  // The 1e-6 ridge shifts θ by about 1e-6 / (Gram eigenvalue); 2000 nodes keep that below 1e-8.
  const std::size_t n = 2000;
  Rng rng(6);
  const DenseMatrix x = gaussian_matrix(n, 4, 1.0, rng);
  const Vector theta{0.5, -1.25, 2.0, 0.0};
  Vector t_res(n), y_res(n);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (std::size_t i = 0; i < n; ++i) {
    t_res[i] = u(rng);
    const double tau = std::inner_product(theta.begin(), theta.end(), x.row(i).begin(), 0.0);
    y_res[i] = t_res[i] * tau;
  }
  const LinearCate fit = fit_final_linear(y_res, t_res, x);
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(fit.theta[j] - theta[j]) < 1e-8);
  CHECK(std::abs(fit.intercept) < 1e-8);
  CHECK_THROWS_AS(fit_final_linear(Vector(3), Vector(3), x), ShapeError);
}

TEST_CASE("fit_final_linear: intercept-only model is the t_res-weighted mean") {
  // Zero features leave only the intercept column informative.
  const DenseMatrix x(6, 1, 0.0);
  const Vector y_res{1.0, -0.5, 2.0, 0.3, 0.0, 1.1};
  const Vector t_res{0.4, -0.7, 0.2, 0.9, -0.1, 0.5};
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    num += t_res[i] * y_res[i];
    den += t_res[i] * t_res[i];
  }
  const LinearCate fit = fit_final_linear(y_res, t_res, x);
  CHECK(fit.intercept == doctest::Approx(num / den).epsilon(1e-5));
}

TEST_CASE("fit_final_linear: first-order optimality checked through backward") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const DenseMatrix x = gaussian_matrix(150, 5, 1.0, rng);
    LossTargets targets;
    targets.target = gaussian_vector(150, 1.0, rng);
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    for (std::size_t i = 0; i < 150; ++i) targets.weight.push_back(u(rng));
    const LinearCate fit = fit_final_linear(targets.target, targets.weight, x);

    MlpModel linear;
    linear.layers.push_back(LinearLayer(5, 1));
    for (std::size_t j = 0; j < 5; ++j) linear.layers[0].weight(j, 0) = fit.theta[j];
    linear.layers[0].bias[0] = fit.intercept;
    const BackwardResult br = backward(linear, LossKind::RLoss, x, targets);
    double sq = br.grads[0].bias[0] * br.grads[0].bias[0];
    for (double g : br.grads[0].weight.data()) sq += g * g;
    CHECK(std::sqrt(sq) < 1e-6);
  }
}

TEST_CASE("fit_final_gnn: zero treatment residuals are flagged and skip training") {
  const GeneratedData gd = generate_dataset(ba(80), DgpConfig{}, 6);
  Rng rng(7);
  const GcnCate fit = fit_final_gnn(gd.data.y, Vector(80, 0.0), gd.data.x, gd.graph, TrainConfig{}, rng);
  CHECK(fit.degenerate);
  CHECK(fit.trace.losses.empty());
  Rng same(7);
  const GcnModel init = make_gcn(layer_dims(gd.data.x.cols(), TrainConfig{}), same);
  CHECK(fit.model.layers == init.layers);
}

TEST_CASE("fit_final_gnn: realizable noiseless effect is fitted when run to convergence") {
  const GeneratedData gd = generate_dataset(ba(300), DgpConfig{}, 7);
  const Vector arg = zscore(row_means(gd.data.h1));
  Vector t_res(300), y_res(300);
  for (std::size_t i = 0; i < 300; ++i) {
    t_res[i] = gd.data.t[i] - gd.data.propensity[i];
    y_res[i] = t_res[i] * std::sin(arg[i]);
  }
  TrainConfig cfg;
  cfg.cate_epochs = 3000;
  cfg.lr = 0.01;
  Rng rng(8);
  const GcnCate fit = fit_final_gnn(y_res, t_res, gd.data.x, gd.graph, cfg, rng);
  const double final_loss = r_loss(y_res, t_res, fit.tau_hat);
  MESSAGE("final r_loss " << final_loss << " vs Var(y_res) " << variance_of(y_res));
  CHECK(final_loss < 0.05 * variance_of(y_res));
}

TEST_CASE("fit_final_gnn: loss does not increase over the last 50 epochs") {
  const ResolvedExperiment exp = main_experiment();
  const GeneratedData gd = generate_dataset(exp.graph, exp.dgp, 1);
  Rng nrng = make_stream(1, "train/nuisance/GNN");
  const NuisancePair np = fit_nuisance(ModelFamily::Gnn, gd.data, gd.graph, exp.train, nrng);
  const Residuals r = residualize(np, gd.data, gd.graph);
  Rng frng = make_stream(1, "train/final/GNN");
  const GcnCate fit = fit_final_gnn(r.y_res, r.t_res, gd.data.x, gd.graph, exp.train, frng);
  const auto& l = fit.trace.losses;
  REQUIRE(l.size() == exp.train.cate_epochs);
  for (std::size_t k = l.size() - 50; k < l.size(); ++k) CHECK(l[k] <= l[k - 1] + 1e-3);
}

TEST_CASE("T-Learner: constant effect without noise or confounding") {
  const std::size_t n = 500;
  const GeneratedData gd = generate_dataset(ba(n), DgpConfig{}, 8);
  NodeDataset ds = gd.data;
  Rng rng(9);
  std::bernoulli_distribution coin(0.5);
  const Vector beta = gaussian_vector(ds.x.cols(), 0.5, rng);
  const double c = 1.5;
  for (std::size_t i = 0; i < n; ++i) {
    ds.t[i] = coin(rng) ? 1.0 : 0.0;
    ds.tau[i] = c;
    ds.y[i] = std::inner_product(beta.begin(), beta.end(), ds.x.row(i).begin(), 0.0) + c * ds.t[i];
  }
  Rng trng(10);
  const CateEstimate est = estimate_tlearner(ds, gd.graph, TrainConfig{}, trng);
  MESSAGE("T-Learner constant-effect MSE " << cate_mse(est.tau_hat, ds.tau));
  CHECK(cate_mse(est.tau_hat, ds.tau) < 0.1);
}

TEST_CASE("T-Learner effect is antisymmetric in the treatment column") {
  const GeneratedData gd = generate_dataset(ba(100), DgpConfig{}, 9);
  TrainConfig cfg;
  cfg.nuisance_epochs = 10;
  cfg.cate_epochs = 10;
  Rng rng(11);
  const GcnModel m = fit_tlearner_model(gd.data, gd.graph, cfg, rng);
  const Vector fwd = tlearner_effect(m, gd.graph.a_hat(), gd.data.x, 1.0, 0.0);
  const Vector rev = tlearner_effect(m, gd.graph.a_hat(), gd.data.x, 0.0, 1.0);
  for (std::size_t i = 0; i < 100; ++i) CHECK(rev[i] == -fwd[i]);
  Rng again(11);
  CHECK(estimate_tlearner(gd.data, gd.graph, cfg, again).tau_hat == fwd);
}

TEST_CASE("all five estimators are deterministic") {
  const GeneratedData gd = generate_dataset(ba(150), DgpConfig{}, 10);
  TrainConfig cfg;
  cfg.nuisance_epochs = 20;
  cfg.cate_epochs = 20;
  for (EstimatorKind k : kAllEstimators) {
    CHECK(estimate(k, gd.data, gd.graph, cfg, 3).tau_hat == estimate(k, gd.data, gd.graph, cfg, 3).tau_hat);
  }
}

TEST_CASE("main configuration, 5 seeds: GraphRLearner accuracy and grid ordering") {
  const double base = mean_mse(EstimatorKind::Baseline);
  const double abl = mean_mse(EstimatorKind::Ablation);
  const double san = mean_mse(EstimatorKind::SanityCheck);
  const double grl = mean_mse(EstimatorKind::GraphRLearner);
  const double tl = mean_mse(EstimatorKind::TLearner);
  MESSAGE("mean MSE Baseline " << base << ", Ablation " << abl << ", SanityCheck " << san << ", GraphRLearner " << grl
                               << ", TLearner " << tl);
  CHECK(grl < 1.0);
  CHECK(base > 3.0 * grl);
  CHECK(abl <= base);
  CHECK(tl < std::min(base, abl));
  CHECK(tl > std::max(san, grl));
}

TEST_CASE("orthogonality smoke test: outcome-model perturbation hurts GraphRLearner less than the T-Learner") {
  const ResolvedExperiment exp = main_experiment();
  double grl_change = 0.0, tl_change = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const GeneratedData gd = generate_dataset(exp.graph, exp.dgp, s);
    TrainingStreams streams = training_streams(s, EstimatorKind::GraphRLearner);
    const NuisancePair np = fit_nuisance(ModelFamily::Gnn, gd.data, gd.graph, exp.train, streams.nuisance);
    Rng final_a = streams.final_stage;
    Rng final_b = streams.final_stage;
    const double clean = cate_mse(finish_rlearner(EstimatorKind::GraphRLearner, np, gd.data, gd.graph, exp.train,
                                                  final_a).tau_hat,
                                  gd.data.tau);
    NuisancePair noisy = np;
    Rng noise(1000 + s);
    perturb(layers_of(noisy.outcome_model), 0.01, noise);
    const double pert = cate_mse(finish_rlearner(EstimatorKind::GraphRLearner, noisy, gd.data, gd.graph, exp.train,
                                                 final_b).tau_hat,
                                 gd.data.tau);
    grl_change += std::abs(pert - clean) / clean / 10.0;

    Rng trng = training_streams(s, EstimatorKind::TLearner).tlearner;
    GcnModel tm = fit_tlearner_model(gd.data, gd.graph, exp.train, trng);
    const double t_clean = cate_mse(tlearner_effect(tm, gd.graph.a_hat(), gd.data.x, 1.0, 0.0), gd.data.tau);
    Rng tnoise(1000 + s);
    perturb(tm.layers, 0.01, tnoise);
    const double t_pert = cate_mse(tlearner_effect(tm, gd.graph.a_hat(), gd.data.x, 1.0, 0.0), gd.data.tau);
    tl_change += std::abs(t_pert - t_clean) / t_clean / 10.0;
  }
  MESSAGE("mean relative MSE change: GraphRLearner " << grl_change << ", TLearner " << tl_change);
  CHECK(grl_change < 0.25);
  CHECK(grl_change < tl_change);
}

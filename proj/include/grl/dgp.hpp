#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grl/graph.hpp"
#include "grl/matrix.hpp"
#include "grl/rng.hpp"

namespace grl {

enum class CateKind { SimpleH, HigherOrder, Interaction, LocalX };

const char* to_string(CateKind k);
CateKind parse_cate_kind(const std::string& name);

struct DgpConfig {
  std::size_t d = 10;
  CateKind cate_kind = CateKind::SimpleH;
  double noise_level = 0.5;  // outcome noise std σ
  std::size_t embed_dim = 8;
  double tau_amplitude = 3.0;
  double propensity_scale = 2.0;
  double clip_lo = 0.05;
  double clip_hi = 0.95;
  std::size_t interaction_feature = 0;  // x column used by the interaction and local_x effects
  double baseline_std = 2.0;
  bool redraw_coefficients = true;  // false: one coefficient draw shared by all seeds

  void validate() const;
};

/// Per-node simulation record. `eps` is kept so y can be reconstructed exactly.
struct NodeDataset {
  DenseMatrix x;
  DenseMatrix h1;
  DenseMatrix h2;
  Vector propensity;
  Vector t;
  Vector y;
  Vector tau;
  Vector baseline;
  Vector eps;

  std::size_t num_nodes() const noexcept { return x.rows(); }
  bool operator==(const NodeDataset&) const = default;
};

/// Fixed random coefficients of one DGP instance.
struct DgpCoefficients {
  DenseMatrix w_a;  // d × embed_dim, 1-hop confounder GNN
  DenseMatrix w_b;  // embed_dim × embed_dim, 2-hop confounder GNN
  Vector w_x;       // treatment logit weights on X
  Vector w_h;       // treatment logit weights on H1
  Vector beta_x;    // outcome baseline weights on X
  Vector beta_h;    // outcome baseline weights on H1
};

DgpCoefficients draw_coefficients(std::size_t d, std::size_t embed_dim, Rng& rng);

/// Centre and scale to unit (population) std; all zeros when std < 1e-12.
Vector zscore(std::span<const double> v);

struct Confounders {
  DenseMatrix h1;
  DenseMatrix h2;
};

/// H1 = ReLU(Â X W_a), H2 = ReLU(Â H1 W_b), weights ~ N(0, 1/fan_in) drawn from rng.
Confounders make_confounders(const DenseMatrix& x, const Graph& g, std::size_t embed_dim, Rng& rng);
Confounders confounders_from(const DenseMatrix& x, const Graph& g, const DenseMatrix& w_a, const DenseMatrix& w_b);

/// Scalar argument fed to the sine: z-scored row mean of the relevant embedding
/// (or the z-scored interaction feature for local_x).
Vector cate_argument(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, const DenseMatrix& h2);
Vector make_cate(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, const DenseMatrix& h2);

struct Treatment {
  Vector propensity;
  Vector t;
};

// The sampler sees only (X, H1) and its own stream; baseline, τ and ε are not
// inputs, which is what makes assignment unconfounded given (X, H1).
Treatment assign_treatment(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, Rng& rng);
Treatment treatment_from(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, std::span<const double> w_x,
                         std::span<const double> w_h, Rng& rng);

struct Outcome {
  Vector y;
  Vector baseline;
  Vector eps;
};

Outcome make_outcome(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, std::span<const double> t,
                     std::span<const double> tau, Rng& rng);
/// Deterministic given the coefficients and the noise vector.
Outcome outcome_from(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, std::span<const double> t,
                     std::span<const double> tau, std::span<const double> beta_x, std::span<const double> beta_h,
                     Vector eps);

struct GeneratedData {
  Graph graph;
  NodeDataset data;
};

// Streams: "graph", "features", "dgp-coefficients", "treatment", "outcome-noise".
// File graphs take X from the feature file and ignore cfg.d.
GeneratedData generate_dataset(const GraphSpec& spec, const DgpConfig& cfg, std::uint64_t seed);
/// Same DGP on a given scaffold (graph + features).
NodeDataset simulate_on(const Graph& g, DenseMatrix x, const DgpConfig& cfg, std::uint64_t seed);

// Five-node star (hub C) with X_A = X_B = X_D = 1, X_E = 2, X_C = 10. H is the
// neighbour feature for degree-1 nodes and the neighbour mean otherwise, τ = sin(H).
struct StarExample {
  struct Constraint {
    double x;
    double required_tau;
  };

  std::vector<std::string> names;
  Graph graph;
  Vector x;
  Vector h;
  Vector tau;
  std::vector<Constraint> constraints;  // f(x) values a graph-blind model must hit, by distinct x
  double per_group_mean_mse;            // best unrestricted graph-blind f(X)
  double linear_mse;                    // best affine graph-blind θ·X + θ₀
  double graph_aware_mse;               // table indexed by H
};

StarExample star_example();

}  // namespace grl

#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "grl/losses.hpp"
#include "grl/matrix.hpp"
#include "grl/rng.hpp"

namespace grl {

/// Affine map x ↦ xW + b with W stored in_dim × out_dim.
struct LinearLayer {
  DenseMatrix weight;
  Vector bias;

  LinearLayer() = default;
  LinearLayer(std::size_t in_dim, std::size_t out_dim) : weight(in_dim, out_dim), bias(out_dim, 0.0) {}

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }
  std::size_t parameter_count() const noexcept { return weight.size() + bias.size(); }

  bool operator==(const LinearLayer&) const = default;
};

/// Weights ~ N(0, 1/fan_in), zero bias.
LinearLayer init_linear(std::size_t in_dim, std::size_t out_dim, Rng& rng);

/// Parameter-shaped container; also used for gradients and optimizer moments.
using LayerStack = std::vector<LinearLayer>;

LayerStack zeros_like(const LayerStack& layers);
std::size_t parameter_count(const LayerStack& layers);

/// Feed-forward network: ReLU between layers, identity output.
struct MlpModel {
  LayerStack layers;
};

/// Graph convolution stack: each layer aggregates with Â before its affine
/// map, ReLU between layers, identity output.
struct GcnModel {
  LayerStack layers;
  std::size_t num_layers() const noexcept { return layers.size(); }
};

using AnyModel = std::variant<MlpModel, GcnModel>;

/// dims = {in, hidden..., out}; throws ShapeError for fewer than two entries.
MlpModel make_mlp(std::span<const std::size_t> dims, Rng& rng);
GcnModel make_gcn(std::span<const std::size_t> dims, Rng& rng);

/// Shape check for consecutive layers; throws ShapeError.
void validate_chain(const LayerStack& layers);

DenseMatrix mlp_forward(const MlpModel& m, const DenseMatrix& x);
DenseMatrix gcn_forward(const GcnModel& m, const DenseMatrix& a_hat, const DenseMatrix& x);

/// Output of the penultimate layer (post-ReLU), i.e. the node representation
/// fed to the output head.
DenseMatrix gcn_embeddings(const GcnModel& m, const DenseMatrix& a_hat, const DenseMatrix& x);

/// Shared entry point: a_hat is ignored for MlpModel.
DenseMatrix forward(const AnyModel& m, const DenseMatrix& a_hat, const DenseMatrix& x);

struct BackwardResult {
  double loss = 0.0;
  LayerStack grads;
};

// Closed-form layer backprop for a scalar-output model. Multi-column outputs
// are rejected with ConfigError.
BackwardResult backward(const MlpModel& m, LossKind kind, const DenseMatrix& x, const LossTargets& targets);
BackwardResult backward(const GcnModel& m, LossKind kind, const DenseMatrix& a_hat, const DenseMatrix& x,
                        const LossTargets& targets);

/// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// numeric gradients by central differences with the given step.
double grad_check(const MlpModel& m, LossKind kind, const DenseMatrix& x, const LossTargets& targets,
                  double step = 1e-5);
double grad_check(const GcnModel& m, LossKind kind, const DenseMatrix& a_hat, const DenseMatrix& x,
                  const LossTargets& targets, double step = 1e-5);

}  // namespace grl

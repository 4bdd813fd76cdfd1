#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "grl/models.hpp"

namespace grl {

struct AdamState {
  std::size_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LayerStack first_moment;
  LayerStack second_moment;
};

/// Zeroed moments shaped like `params`.
AdamState make_adam(const LayerStack& params, double lr);

/// One bias-corrected Adam update of `params` in place; increments state.step.
void adam_step(AdamState& state, LayerStack& params, const LayerStack& grads);

/// Loss before each full-batch step.
struct TrainTrace {
  std::vector<double> losses;
};

// Full-batch Adam. Throws TrainingError (with the epoch index) as soon as the
// loss or a gradient goes non-finite.
TrainTrace train_mlp(MlpModel& m, LossKind kind, const DenseMatrix& x, const LossTargets& targets,
                     std::size_t epochs, double lr);
TrainTrace train_gcn(GcnModel& m, LossKind kind, const DenseMatrix& a_hat, const DenseMatrix& x,
                     const LossTargets& targets, std::size_t epochs, double lr);
TrainTrace train_model(AnyModel& m, LossKind kind, const DenseMatrix& a_hat, const DenseMatrix& x,
                       const LossTargets& targets, std::size_t epochs, double lr);

}  // namespace grl

#pragma once

#include <span>

#include "grl/matrix.hpp"

namespace grl {

enum class LossKind { Mse, Logistic, RLoss };

/// Targets for a scalar-output loss. `weight` carries the treatment residual
/// for LossKind::RLoss and is ignored otherwise.
struct LossTargets {
  Vector target;
  Vector weight;
};

double loss_mse(std::span<const double> pred, std::span<const double> target);

// mean(log(1 + e^z) - y z), evaluated as max(z,0) - y z + log1p(e^-|z|).
double loss_logistic(std::span<const double> logits, std::span<const double> labels);

/// mean_i (y_res_i - t_res_i * tau_hat_i)^2
double r_loss(std::span<const double> y_res, std::span<const double> t_res,
              std::span<const double> tau_hat);

double sigmoid(double z);

struct LossValue {
  double loss = 0.0;
  Vector grad;  // d loss / d prediction_i
};

/// Loss and its gradient with respect to each prediction.
LossValue evaluate_loss(LossKind kind, std::span<const double> pred, const LossTargets& targets);

}  // namespace grl

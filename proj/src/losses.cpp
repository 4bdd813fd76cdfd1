#include "grl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "grl/errors.hpp"

namespace grl {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
  if (a == 0) throw ShapeError(std::string(what) + ": empty input");
}

double logistic_term(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

void require_binary(std::span<const double> labels) {
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw ValidationError("loss_logistic: labels must be 0 or 1");
  }
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double loss_mse(std::span<const double> pred, std::span<const double> target) {
  require_same_length(pred.size(), target.size(), "loss_mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double loss_logistic(std::span<const double> logits, std::span<const double> labels) {
  require_same_length(logits.size(), labels.size(), "loss_logistic");
  require_binary(labels);
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) s += logistic_term(logits[i], labels[i]);
  return s / static_cast<double>(logits.size());
}

double r_loss(std::span<const double> y_res, std::span<const double> t_res,
              std::span<const double> tau_hat) {
  require_same_length(y_res.size(), t_res.size(), "r_loss");
  require_same_length(y_res.size(), tau_hat.size(), "r_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < y_res.size(); ++i) {
    const double d = y_res[i] - t_res[i] * tau_hat[i];
    s += d * d;
  }
  return s / static_cast<double>(y_res.size());
}

LossValue evaluate_loss(LossKind kind, std::span<const double> pred, const LossTargets& targets) {
  const std::size_t n = pred.size();
  require_same_length(n, targets.target.size(), "evaluate_loss");
  const double inv_n = 1.0 / static_cast<double>(n);
  LossValue out;
  out.grad.resize(n);
  switch (kind) {
    case LossKind::Mse:
      out.loss = loss_mse(pred, targets.target);
      for (std::size_t i = 0; i < n; ++i) out.grad[i] = 2.0 * inv_n * (pred[i] - targets.target[i]);
      break;
    case LossKind::Logistic:
      out.loss = loss_logistic(pred, targets.target);
      for (std::size_t i = 0; i < n; ++i) out.grad[i] = inv_n * (sigmoid(pred[i]) - targets.target[i]);
      break;
    case LossKind::RLoss: {
      const auto& y = targets.target;
      const auto& w = targets.weight;
      out.loss = r_loss(y, w, pred);
      for (std::size_t i = 0; i < n; ++i) out.grad[i] = 2.0 * inv_n * (w[i] * pred[i] - y[i]) * w[i];
      break;
    }
  }
  return out;
}

}  // namespace grl

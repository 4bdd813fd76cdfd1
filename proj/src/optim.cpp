#include "grl/optim.hpp"

#include <cmath>

#include "grl/errors.hpp"

namespace grl {

namespace {

void check_same_shape(const LayerStack& a, const LayerStack& b) {
  if (a.size() != b.size()) throw ShapeError("adam_step: layer count mismatch");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].weight.rows() != b[k].weight.rows() || a[k].weight.cols() != b[k].weight.cols() ||
        a[k].bias.size() != b[k].bias.size()) {
      throw ShapeError("adam_step: parameter/gradient shape mismatch at layer " + std::to_string(k));
    }
  }
}

bool grads_finite(const LayerStack& grads) {
  for (const auto& g : grads) {
    if (!all_finite(g.weight.data()) || !all_finite(g.bias)) return false;
  }
  return true;
}

template <typename BackwardFn>
TrainTrace run_training(LayerStack& params, BackwardFn&& backward_fn, std::size_t epochs, double lr) {
  AdamState state = make_adam(params, lr);
  TrainTrace trace;
  trace.losses.reserve(epochs);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    BackwardResult br;
    try {
      br = backward_fn();
    } catch (const NumericError& e) {
      throw TrainingError(std::string("training diverged: ") + e.what(), epoch);
    }
    if (!std::isfinite(br.loss) || !grads_finite(br.grads)) throw TrainingError("loss became non-finite", epoch);
    trace.losses.push_back(br.loss);
    adam_step(state, params, br.grads);
  }
  return trace;
}

}  // namespace

AdamState make_adam(const LayerStack& params, double lr) {
  AdamState s;
  s.lr = lr;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  return s;
}

void adam_step(AdamState& state, LayerStack& params, const LayerStack& grads) {
  check_same_shape(params, grads);
  check_same_shape(params, state.first_moment);
  check_same_shape(params, state.second_moment);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    update(params[k].weight.data(), grads[k].weight.data(), state.first_moment[k].weight.data(),
           state.second_moment[k].weight.data());
    update(params[k].bias, grads[k].bias, state.first_moment[k].bias, state.second_moment[k].bias);
  }
}

TrainTrace train_mlp(MlpModel& m, LossKind kind, const DenseMatrix& x, const LossTargets& targets,
                     std::size_t epochs, double lr) {
  return run_training(m.layers, [&] { return backward(m, kind, x, targets); }, epochs, lr);
}

TrainTrace train_gcn(GcnModel& m, LossKind kind, const DenseMatrix& a_hat, const DenseMatrix& x,
                     const LossTargets& targets, std::size_t epochs, double lr) {
  return run_training(m.layers, [&] { return backward(m, kind, a_hat, x, targets); }, epochs, lr);
}

TrainTrace train_model(AnyModel& m, LossKind kind, const DenseMatrix& a_hat, const DenseMatrix& x,
                       const LossTargets& targets, std::size_t epochs, double lr) {
  if (auto* mlp = std::get_if<MlpModel>(&m)) return train_mlp(*mlp, kind, x, targets, epochs, lr);
  return train_gcn(std::get<GcnModel>(m), kind, a_hat, x, targets, epochs, lr);
}

}  // namespace grl

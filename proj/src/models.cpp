#include "grl/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grl/errors.hpp"

namespace grl {

namespace {

struct ForwardCache {
  std::vector<DenseMatrix> input;  // Z_k fed to layer k
  std::vector<DenseMatrix> agg;    // Â Z_k when aggregation ran before the affine map
  std::vector<DenseMatrix> pre;    // pre-activation of layer k
};

// a_hat == nullptr means no aggregation (MLP).
DenseMatrix run_forward(const LayerStack& layers, const DenseMatrix* a_hat, const DenseMatrix& x,
                        ForwardCache* cache) {
  validate_chain(layers);
  if (x.cols() != layers.front().in_dim()) {
    throw ShapeError("forward: input has " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(layers.front().in_dim()));
  }
  if (a_hat != nullptr && (a_hat->rows() != x.rows() || a_hat->cols() != x.rows())) {
    throw ShapeError("gcn_forward: adjacency does not match node count");
  }
  DenseMatrix z = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const LinearLayer& layer = layers[k];
    DenseMatrix pre;
    DenseMatrix agg;
    if (a_hat == nullptr) {
      pre = matmul(z, layer.weight);
    } else if (layer.in_dim() <= layer.out_dim()) {
      agg = matmul(*a_hat, z);
      pre = matmul(agg, layer.weight);
    } else {
      pre = matmul(*a_hat, matmul(z, layer.weight));
    }
    add_row_vector(pre, layer.bias);
    DenseMatrix next = pre;
    if (k + 1 < layers.size()) relu_inplace(next);
    if (cache != nullptr) {
      cache->input.push_back(std::move(z));
      cache->agg.push_back(std::move(agg));
      cache->pre.push_back(std::move(pre));
    }
    z = std::move(next);
  }
  return z;
}

BackwardResult run_backward(const LayerStack& layers, const DenseMatrix* a_hat, LossKind kind,
                            const DenseMatrix& x, const LossTargets& targets) {
  if (layers.empty() || layers.back().out_dim() != 1) {
    throw ConfigError("backward: losses are defined for scalar-output models only");
  }
  if (kind == LossKind::RLoss && targets.weight.size() != targets.target.size()) {
    throw ShapeError("backward: r_loss needs a treatment residual per node");
  }
  ForwardCache cache;
  const DenseMatrix out = run_forward(layers, a_hat, x, &cache);
  const LossValue lv = evaluate_loss(kind, out.data(), targets);

  BackwardResult result;
  result.loss = lv.loss;
  result.grads.resize(layers.size());

  DenseMatrix upstream = DenseMatrix::column(lv.grad);
  for (std::size_t step = 0; step < layers.size(); ++step) {
    const std::size_t k = layers.size() - 1 - step;
    const LinearLayer& layer = layers[k];
    DenseMatrix d_pre = std::move(upstream);
    if (k + 1 < layers.size()) {
      const auto& pre = cache.pre[k].data();
      auto& g = d_pre.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (pre[i] <= 0.0) g[i] = 0.0;
      }
    }
    LinearLayer& grad = result.grads[k];
    grad.bias = column_sums(d_pre);
    const bool need_input_grad = k > 0;
    if (a_hat == nullptr) {
      grad.weight = matmul_tn(cache.input[k], d_pre);
      if (need_input_grad) upstream = matmul_nt(d_pre, layer.weight);
    } else if (!cache.agg[k].empty()) {
      grad.weight = matmul_tn(cache.agg[k], d_pre);
      if (need_input_grad) upstream = matmul_tn(*a_hat, matmul_nt(d_pre, layer.weight));
    } else {
      const DenseMatrix spread = matmul_tn(*a_hat, d_pre);
      grad.weight = matmul_tn(cache.input[k], spread);
      if (need_input_grad) upstream = matmul_nt(spread, layer.weight);
    }
  }
  return result;
}

double numeric_loss(const LayerStack& layers, const DenseMatrix* a_hat, LossKind kind, const DenseMatrix& x,
                    const LossTargets& targets) {
  const DenseMatrix out = run_forward(layers, a_hat, x, nullptr);
  return evaluate_loss(kind, out.data(), targets).loss;
}

double run_grad_check(const LayerStack& layers, const DenseMatrix* a_hat, LossKind kind, const DenseMatrix& x,
                      const LossTargets& targets, double step) {
  const BackwardResult analytic = run_backward(layers, a_hat, kind, x, targets);
  LayerStack probe = layers;
  double worst = 0.0;
  auto compare = [&](double& param, double analytic_value) {
    const double saved = param;
    param = saved + step;
    const double up = numeric_loss(probe, a_hat, kind, x, targets);
    param = saved - step;
    const double down = numeric_loss(probe, a_hat, kind, x, targets);
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic_value), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic_value - numeric) / denom);
  };
  for (std::size_t k = 0; k < probe.size(); ++k) {
    auto& w = probe[k].weight.data();
    for (std::size_t i = 0; i < w.size(); ++i) compare(w[i], analytic.grads[k].weight.data()[i]);
    auto& b = probe[k].bias;
    for (std::size_t i = 0; i < b.size(); ++i) compare(b[i], analytic.grads[k].bias[i]);
  }
  return worst;
}

LayerStack make_stack(std::span<const std::size_t> dims, Rng& rng) {
  if (dims.size() < 2) throw ShapeError("model needs at least input and output dims");
  LayerStack layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) layers.push_back(init_linear(dims[k], dims[k + 1], rng));
  return layers;
}

}  // namespace

LinearLayer init_linear(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  if (in_dim == 0 || out_dim == 0) throw ShapeError("init_linear: zero dimension");
  LinearLayer layer;
  layer.weight = gaussian_matrix(in_dim, out_dim, 1.0 / std::sqrt(static_cast<double>(in_dim)), rng);
  layer.bias.assign(out_dim, 0.0);
  return layer;
}

LayerStack zeros_like(const LayerStack& layers) {
  LayerStack out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.emplace_back(l.in_dim(), l.out_dim());
  return out;
}

std::size_t parameter_count(const LayerStack& layers) {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

void validate_chain(const LayerStack& layers) {
  if (layers.empty()) throw ShapeError("model has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].bias.size() != layers[k].out_dim()) throw ShapeError("layer bias/weight shape mismatch");
    if (k > 0 && layers[k - 1].out_dim() != layers[k].in_dim()) {
      throw ShapeError("layer " + std::to_string(k) + " input dim does not chain with previous output");
    }
  }
}

MlpModel make_mlp(std::span<const std::size_t> dims, Rng& rng) { return MlpModel{make_stack(dims, rng)}; }

GcnModel make_gcn(std::span<const std::size_t> dims, Rng& rng) { return GcnModel{make_stack(dims, rng)}; }

DenseMatrix mlp_forward(const MlpModel& m, const DenseMatrix& x) { return run_forward(m.layers, nullptr, x, nullptr); }

DenseMatrix gcn_forward(const GcnModel& m, const DenseMatrix& a_hat, const DenseMatrix& x) {
  return run_forward(m.layers, &a_hat, x, nullptr);
}

DenseMatrix gcn_embeddings(const GcnModel& m, const DenseMatrix& a_hat, const DenseMatrix& x) {
  if (m.layers.size() < 2) throw ConfigError("gcn_embeddings: need at least two layers");
  LayerStack body(m.layers.begin(), m.layers.end() - 1);
  DenseMatrix h = run_forward(body, &a_hat, x, nullptr);
  relu_inplace(h);
  return h;
}

DenseMatrix forward(const AnyModel& m, const DenseMatrix& a_hat, const DenseMatrix& x) {
  if (const auto* mlp = std::get_if<MlpModel>(&m)) return mlp_forward(*mlp, x);
  return gcn_forward(std::get<GcnModel>(m), a_hat, x);
}

BackwardResult backward(const MlpModel& m, LossKind kind, const DenseMatrix& x, const LossTargets& targets) {
  return run_backward(m.layers, nullptr, kind, x, targets);
}

BackwardResult backward(const GcnModel& m, LossKind kind, const DenseMatrix& a_hat, const DenseMatrix& x,
                        const LossTargets& targets) {
  return run_backward(m.layers, &a_hat, kind, x, targets);
}

double grad_check(const MlpModel& m, LossKind kind, const DenseMatrix& x, const LossTargets& targets, double step) {
  return run_grad_check(m.layers, nullptr, kind, x, targets, step);
}

double grad_check(const GcnModel& m, LossKind kind, const DenseMatrix& a_hat, const DenseMatrix& x,
                  const LossTargets& targets, double step) {
  return run_grad_check(m.layers, &a_hat, kind, x, targets, step);
}

}  // namespace grl

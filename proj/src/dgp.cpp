#include "grl/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "grl/errors.hpp"
#include "grl/losses.hpp"

namespace grl {

namespace {

Vector affine_scores(const DenseMatrix& x, std::span<const double> w_x, const DenseMatrix& h1,
                     std::span<const double> w_h) {
  if (w_x.size() != x.cols() || w_h.size() != h1.cols() || x.rows() != h1.rows()) {
    throw ShapeError("coefficient vectors do not match X / H1 widths");
  }
  Vector s(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) acc += x(i, j) * w_x[j];
    for (std::size_t j = 0; j < h1.cols(); ++j) acc += h1(i, j) * w_h[j];
    s[i] = acc;
  }
  return s;
}

double population_std(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / n);
}

}  // namespace

const char* to_string(CateKind k) {
  switch (k) {
    case CateKind::SimpleH: return "simple_h";
    case CateKind::HigherOrder: return "higher_order";
    case CateKind::Interaction: return "interaction";
    case CateKind::LocalX: return "local_x";
  }
  return "?";
}

CateKind parse_cate_kind(const std::string& name) {
  if (name == "simple_h") return CateKind::SimpleH;
  if (name == "higher_order") return CateKind::HigherOrder;
  if (name == "interaction") return CateKind::Interaction;
  if (name == "local_x") return CateKind::LocalX;
  throw ConfigError("unknown cate_type '" + name + "'");
}

void DgpConfig::validate() const {
  if (d == 0) throw ValidationError("feature dimension d must be positive");
  if (embed_dim == 0) throw ValidationError("embed_dim must be positive");
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) throw ValidationError("noise_level must be >= 0");
  if (!(tau_amplitude > 0.0)) throw ValidationError("tau_amplitude must be > 0");
  if (!(propensity_scale >= 0.0)) throw ValidationError("propensity_scale must be >= 0");
  if (!(clip_lo > 0.0 && clip_lo < clip_hi && clip_hi < 1.0)) throw ValidationError("propensity clip must lie inside (0, 1)");
  if (!(baseline_std >= 0.0)) throw ValidationError("baseline_std must be >= 0");
}

DgpCoefficients draw_coefficients(std::size_t d, std::size_t embed_dim, Rng& rng) {
  DgpCoefficients c;
  c.w_a = gaussian_matrix(d, embed_dim, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  c.w_b = gaussian_matrix(embed_dim, embed_dim, 1.0 / std::sqrt(static_cast<double>(embed_dim)), rng);
  c.w_x = gaussian_vector(d, 1.0, rng);
  c.w_h = gaussian_vector(embed_dim, 1.0, rng);
  c.beta_x = gaussian_vector(d, 1.0, rng);
  c.beta_h = gaussian_vector(embed_dim, 1.0, rng);
  return c;
}

Vector zscore(std::span<const double> v) {
  Vector out(v.size(), 0.0);
  if (v.empty()) return out;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const double sd = population_std(v);
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
  return out;
}

Confounders confounders_from(const DenseMatrix& x, const Graph& g, const DenseMatrix& w_a, const DenseMatrix& w_b) {
  if (x.rows() != g.num_nodes()) throw ShapeError("make_confounders: X rows do not match graph size");
  if (x.cols() != w_a.rows()) throw ShapeError("make_confounders: X width does not match W_a");
  Confounders c;
  c.h1 = matmul(g.a_hat(), matmul(x, w_a));
  relu_inplace(c.h1);
  c.h2 = matmul(g.a_hat(), matmul(c.h1, w_b));
  relu_inplace(c.h2);
  return c;
}

Confounders make_confounders(const DenseMatrix& x, const Graph& g, std::size_t embed_dim, Rng& rng) {
  const std::size_t d = x.cols();
  const DenseMatrix w_a = gaussian_matrix(d, embed_dim, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  const DenseMatrix w_b = gaussian_matrix(embed_dim, embed_dim, 1.0 / std::sqrt(static_cast<double>(embed_dim)), rng);
  return confounders_from(x, g, w_a, w_b);
}

Vector cate_argument(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, const DenseMatrix& h2) {
  switch (cfg.cate_kind) {
    case CateKind::SimpleH:
    case CateKind::Interaction:
      return zscore(row_means(h1));
    case CateKind::HigherOrder:
      return zscore(row_means(h2));
    case CateKind::LocalX:
      if (cfg.interaction_feature >= x.cols()) throw ConfigError("interaction_feature out of range");
      return zscore(x.col(cfg.interaction_feature));
  }
  throw ConfigError("unknown cate kind");
}

Vector make_cate(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, const DenseMatrix& h2) {
  if (x.rows() != h1.rows() || x.rows() != h2.rows()) throw ShapeError("make_cate: row counts differ");
  const Vector arg = cate_argument(cfg, x, h1, h2);
  Vector tau(arg.size());
  for (std::size_t i = 0; i < arg.size(); ++i) tau[i] = cfg.tau_amplitude * std::sin(arg[i]);
  if (cfg.cate_kind == CateKind::Interaction) {
    if (cfg.interaction_feature >= x.cols()) throw ConfigError("interaction_feature out of range");
    const Vector x0 = zscore(x.col(cfg.interaction_feature));
    for (std::size_t i = 0; i < tau.size(); ++i) tau[i] *= x0[i];
  }
  return tau;
}

Treatment treatment_from(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, std::span<const double> w_x,
                         std::span<const double> w_h, Rng& rng) {
  const Vector raw = affine_scores(x, w_x, h1, w_h);
  const double s = population_std(raw);
  Treatment tr;
  tr.propensity.resize(raw.size());
  tr.t.resize(raw.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double logit = (s < 1e-12 || cfg.propensity_scale == 0.0) ? 0.0 : cfg.propensity_scale * raw[i] / s;
    tr.propensity[i] = std::clamp(sigmoid(logit), cfg.clip_lo, cfg.clip_hi);
    tr.t[i] = u(rng) < tr.propensity[i] ? 1.0 : 0.0;
  }
  return tr;
}

Treatment assign_treatment(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, Rng& rng) {
  const Vector w_x = gaussian_vector(x.cols(), 1.0, rng);
  const Vector w_h = gaussian_vector(h1.cols(), 1.0, rng);
  return treatment_from(cfg, x, h1, w_x, w_h, rng);
}

Outcome outcome_from(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, std::span<const double> t,
                     std::span<const double> tau, std::span<const double> beta_x, std::span<const double> beta_h,
                     Vector eps) {
  const std::size_t n = x.rows();
  if (t.size() != n || tau.size() != n || eps.size() != n) throw ShapeError("make_outcome: vector lengths differ");
  Outcome out;
  out.baseline = zscore(affine_scores(x, beta_x, h1, beta_h));
  for (double& b : out.baseline) b *= cfg.baseline_std;
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.y[i] = out.baseline[i] + t[i] * tau[i] + eps[i];
  out.eps = std::move(eps);
  return out;
}

Outcome make_outcome(const DgpConfig& cfg, const DenseMatrix& x, const DenseMatrix& h1, std::span<const double> t,
                     std::span<const double> tau, Rng& rng) {
  const Vector beta_x = gaussian_vector(x.cols(), 1.0, rng);
  const Vector beta_h = gaussian_vector(h1.cols(), 1.0, rng);
  Vector eps = gaussian_vector(x.rows(), cfg.noise_level, rng);
  return outcome_from(cfg, x, h1, t, tau, beta_x, beta_h, std::move(eps));
}

NodeDataset simulate_on(const Graph& g, DenseMatrix x, const DgpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (x.rows() != g.num_nodes()) throw ShapeError("simulate_on: feature rows do not match graph size");
  Rng coef_rng = make_stream(cfg.redraw_coefficients ? seed : 0, "dgp-coefficients");
  const DgpCoefficients coef = draw_coefficients(x.cols(), cfg.embed_dim, coef_rng);

  NodeDataset ds;
  Confounders conf = confounders_from(x, g, coef.w_a, coef.w_b);
  ds.tau = make_cate(cfg, x, conf.h1, conf.h2);

  Rng treat_rng = make_stream(seed, "treatment");
  Treatment tr = treatment_from(cfg, x, conf.h1, coef.w_x, coef.w_h, treat_rng);

  Rng noise_rng = make_stream(seed, "outcome-noise");
  Outcome oc = outcome_from(cfg, x, conf.h1, tr.t, ds.tau, coef.beta_x, coef.beta_h,
                            gaussian_vector(x.rows(), cfg.noise_level, noise_rng));

  ds.x = std::move(x);
  ds.h1 = std::move(conf.h1);
  ds.h2 = std::move(conf.h2);
  ds.propensity = std::move(tr.propensity);
  ds.t = std::move(tr.t);
  ds.y = std::move(oc.y);
  ds.baseline = std::move(oc.baseline);
  ds.eps = std::move(oc.eps);
  return ds;
}

GeneratedData generate_dataset(const GraphSpec& spec, const DgpConfig& cfg, std::uint64_t seed) {
  spec.validate();
  if (spec.kind == GraphKind::File) {
    LoadedGraph loaded = load_graph_files(spec.edge_path, spec.feature_path);
    DgpConfig file_cfg = cfg;
    file_cfg.d = loaded.features.cols();
    NodeDataset ds = simulate_on(loaded.graph, std::move(loaded.features), file_cfg, seed);
    return GeneratedData{std::move(loaded.graph), std::move(ds)};
  }
  Rng graph_rng = make_stream(seed, "graph");
  Graph g = generate_graph(spec, graph_rng);
  Rng feature_rng = make_stream(seed, "features");
  DenseMatrix x = gaussian_matrix(spec.n, cfg.d, 1.0, feature_rng);
  NodeDataset ds = simulate_on(g, std::move(x), cfg, seed);
  return GeneratedData{std::move(g), std::move(ds)};
}

StarExample star_example() {
  // Node order A, B, C, D, E; C is the hub.
  std::vector<std::string> names{"A", "B", "C", "D", "E"};
  Graph g(5, {{2, 0}, {2, 1}, {2, 3}, {2, 4}});
  Vector x{1.0, 1.0, 10.0, 1.0, 2.0};

  Vector h(5, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& nb = g.neighbors()[i];
    double s = 0.0;
    for (std::size_t j : nb) s += x[j];
    h[i] = nb.size() == 1 ? x[nb.front()] : s / static_cast<double>(nb.size());
  }
  Vector tau(5);
  for (std::size_t i = 0; i < 5; ++i) tau[i] = std::sin(h[i]);

  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < 5; ++i) groups[x[i]].push_back(i);

  std::vector<StarExample::Constraint> constraints;
  double group_sse = 0.0;
  for (const auto& [xv, members] : groups) {
    double mean = 0.0;
    for (std::size_t i : members) mean += tau[i];
    mean /= static_cast<double>(members.size());
    for (std::size_t i : members) group_sse += (tau[i] - mean) * (tau[i] - mean);
    constraints.push_back({xv, tau[members.front()]});
  }

  // Ordinary least squares of τ on [x, 1].
  const double n = 5.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    sx += x[i];
    sy += tau[i];
    sxx += x[i] * x[i];
    sxy += x[i] * tau[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double lin_sse = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double r = tau[i] - (slope * x[i] + intercept);
    lin_sse += r * r;
  }

  double aware_sse = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double r = tau[i] - std::sin(h[i]);
    aware_sse += r * r;
  }

  return StarExample{std::move(names), std::move(g),     std::move(x),  std::move(h),
                     std::move(tau),   std::move(constraints), group_sse / n, lin_sse / n,
                     aware_sse / n};
}

}  // namespace grl

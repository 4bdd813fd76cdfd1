#include "grl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

#include "grl/errors.hpp"

namespace grl {

namespace {

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(name) + " must lie in [0, 1]");
}

// ⌈frac·n⌉ with a guard against products like 0.1 * 30 = 3.0000000000000004.
std::size_t ceil_count(double frac, std::size_t n) {
  const double raw = frac * static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Graph::Graph(std::size_t n, std::vector<Edge> edges) : n_(n) {
  if (n == 0) throw ValidationError("graph needs at least one node");
  for (auto& [u, v] : edges) {
    if (u >= n || v >= n) throw ValidationError("edge endpoint out of range");
    if (u == v) throw ValidationError("self-loops are not allowed");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  degree_.assign(n, 0);
  adjacency_.assign(n, {});
  for (const auto& [u, v] : edges_) {
    ++degree_[u];
    ++degree_[v];
    adjacency_[u].push_back(v);
    adjacency_[v].push_back(u);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
  a_hat_ = normalized_adjacency(*this);
}

bool Graph::has_edge(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) return false;
  const auto& nb = adjacency_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

double Graph::mean_degree() const {
  return 2.0 * static_cast<double>(edges_.size()) / static_cast<double>(n_);
}

std::size_t Graph::max_degree() const { return *std::max_element(degree_.begin(), degree_.end()); }

bool Graph::is_connected() const {
  std::vector<char> seen(n_, 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n_;
}

const char* to_string(GraphKind k) {
  switch (k) {
    case GraphKind::Ba: return "ba";
    case GraphKind::Er: return "er";
    case GraphKind::Sbm: return "sbm";
    case GraphKind::File: return "file";
  }
  return "?";
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "ba") return GraphKind::Ba;
  if (name == "er") return GraphKind::Er;
  if (name == "sbm") return GraphKind::Sbm;
  if (name == "file") return GraphKind::File;
  throw ConfigError("unknown graph type '" + name + "'");
}

double GraphSpec::effective_er_p() const {
  if (er_p) return *er_p;
  return n > 1 ? 10.0 / static_cast<double>(n - 1) : 0.0;
}

void GraphSpec::validate() const {
  if (kind == GraphKind::File) {
    if (edge_path.empty() || feature_path.empty()) throw ValidationError("file graph needs edge and feature paths");
    return;
  }
  if (n == 0) throw ValidationError("graph needs at least one node");
  switch (kind) {
    case GraphKind::Ba:
      if (ba_m < 1 || ba_m >= n) throw ValidationError("BA attachment m must satisfy 1 <= m < n");
      break;
    case GraphKind::Er:
      require_probability(effective_er_p(), "er_p");
      break;
    case GraphKind::Sbm:
      require_probability(sbm_p_in, "sbm_p_in");
      require_probability(sbm_p_out, "sbm_p_out");
      if (sbm_p_out > sbm_p_in) throw ValidationError("sbm_p_out must not exceed sbm_p_in");
      if (sbm_blocks < 1 || sbm_blocks > n) throw ValidationError("sbm_blocks must lie in [1, n]");
      break;
    case GraphKind::File:
      break;
  }
}

Graph generate_ba(std::size_t n, std::size_t m, Rng& rng) {
  if (m < 1 || m >= n) throw ValidationError("BA attachment m must satisfy 1 <= m < n");
  std::vector<Edge> edges;
  edges.reserve(m + (n - m - 1) * m);
  // Each edge contributes both endpoints, so uniform draws are degree-proportional.
  std::vector<std::size_t> endpoints;
  endpoints.reserve(2 * edges.capacity());
  for (std::size_t leaf = 1; leaf <= m; ++leaf) {
    edges.emplace_back(0, leaf);
    endpoints.push_back(0);
    endpoints.push_back(leaf);
  }
  std::vector<std::size_t> targets;
  for (std::size_t v = m + 1; v < n; ++v) {
    targets.clear();
    std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
    while (targets.size() < m) {
      const std::size_t t = endpoints[pick(rng)];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (std::size_t t : targets) {
      edges.emplace_back(t, v);
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return Graph(n, std::move(edges));
}

Graph generate_er(std::size_t n, double p, Rng& rng) {
  require_probability(p, "er_p");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

std::vector<std::size_t> sbm_block_of(std::size_t n, std::size_t num_blocks) {
  std::vector<std::size_t> block(n);
  const std::size_t base = n / num_blocks;
  const std::size_t extra = n % num_blocks;
  std::size_t node = 0;
  for (std::size_t b = 0; b < num_blocks; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) block[node++] = b;
  }
  return block;
}

Graph generate_sbm(std::size_t n, std::size_t num_blocks, double p_in, double p_out, Rng& rng) {
  require_probability(p_in, "sbm_p_in");
  require_probability(p_out, "sbm_p_out");
  if (p_out > p_in) throw ValidationError("sbm_p_out must not exceed sbm_p_in");
  if (num_blocks < 1 || num_blocks > n) throw ValidationError("sbm_blocks must lie in [1, n]");
  const auto block = sbm_block_of(n, num_blocks);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < (block[i] == block[j] ? p_in : p_out)) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

Graph generate_graph(const GraphSpec& spec, Rng& rng) {
  spec.validate();
  switch (spec.kind) {
    case GraphKind::Ba: return generate_ba(spec.n, spec.ba_m, rng);
    case GraphKind::Er: return generate_er(spec.n, spec.effective_er_p(), rng);
    case GraphKind::Sbm: return generate_sbm(spec.n, spec.sbm_blocks, spec.sbm_p_in, spec.sbm_p_out, rng);
    case GraphKind::File: break;
  }
  throw ConfigError("generate_graph: file graphs are loaded, not generated");
}

DenseMatrix normalized_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree()[i] + 1));
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = inv_sqrt[i] * inv_sqrt[i];
  for (const auto& [u, v] : g.edges()) {
    const double w = inv_sqrt[u] * inv_sqrt[v];
    a(u, v) = w;
    a(v, u) = w;
  }
  return a;
}

DegreePartition degree_partition(const Graph& g, double hub_frac, double periphery_frac) {
  if (!(hub_frac > 0.0 && hub_frac < 1.0) || !(periphery_frac > 0.0 && periphery_frac < 1.0)) {
    throw ValidationError("degree_partition: fractions must lie in (0, 1)");
  }
  if (hub_frac + periphery_frac > 1.0 + 1e-12) throw ValidationError("degree_partition: fractions exceed 1");
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const auto& deg = g.degree();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return deg[a] > deg[b]; });

  const std::size_t hub_count = std::min(n, ceil_count(hub_frac, n));
  const std::size_t periphery_count = std::min(n - hub_count, ceil_count(periphery_frac, n));
  DegreePartition part;
  part.hubs.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(hub_count));
  part.periphery.assign(order.end() - static_cast<std::ptrdiff_t>(periphery_count), order.end());
  return part;
}

LoadedGraph load_graph_files(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path) {
  std::ifstream feat(feature_path);
  if (!feat) throw IoError("cannot open feature file " + feature_path.string());
  std::vector<double> values;
  std::size_t rows = 0, cols = 0, line_no = 0;
  std::string line;
  while (std::getline(feat, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::size_t count = 0;
    std::stringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const std::string c = trim(cell);
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size() || !std::isfinite(v)) {
        throw ParseError(feature_path.string(), line_no, "non-numeric feature '" + c + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw ParseError(feature_path.string(), line_no, "expected " + std::to_string(cols) + " columns");
    ++rows;
  }
  if (rows == 0) throw ParseError(feature_path.string(), line_no, "feature file has no rows");

  std::ifstream edge_in(edge_path);
  if (!edge_in) throw IoError("cannot open edge file " + edge_path.string());
  std::vector<Edge> edges;
  line_no = 0;
  while (std::getline(edge_in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::stringstream ss(t);
    std::string a, b, rest;
    ss >> a >> b;
    if (b.empty() || (ss >> rest)) throw ParseError(edge_path.string(), line_no, "expected two node ids");
    std::size_t u = 0, v = 0;
    const auto ru = std::from_chars(a.data(), a.data() + a.size(), u);
    const auto rv = std::from_chars(b.data(), b.data() + b.size(), v);
    if (ru.ec != std::errc() || ru.ptr != a.data() + a.size() || rv.ec != std::errc() ||
        rv.ptr != b.data() + b.size()) {
      throw ParseError(edge_path.string(), line_no, "node ids must be non-negative integers");
    }
    if (u >= rows || v >= rows) {
      throw ParseError(edge_path.string(), line_no,
                       "endpoint out of range for " + std::to_string(rows) + " nodes");
    }
    if (u != v) edges.emplace_back(u, v);
  }
  return LoadedGraph{Graph(rows, std::move(edges)), DenseMatrix::from_data(rows, cols, std::move(values))};
}

void write_edge_file(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

void write_feature_file(const DenseMatrix& features, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j) {
      if (j) out << ',';
      out << features(i, j);
    }
    out << '\n';
  }
}

}  // namespace grl

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grl/matrix.hpp"
#include "grl/rng.hpp"

namespace grl {

using Edge = std::pair<std::size_t, std::size_t>;

/// Simple undirected graph with its renormalised adjacency cached.
///
/// Edges are stored once as (min, max), sorted and deduplicated; the
/// constructor rejects self-loops and out-of-range endpoints with
/// ValidationError.
class Graph {
 public:
  Graph(std::size_t n, std::vector<Edge> edges);

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& degree() const noexcept { return degree_; }
  const std::vector<std::vector<std::size_t>>& neighbors() const noexcept { return adjacency_; }
  const DenseMatrix& a_hat() const noexcept { return a_hat_; }

  bool has_edge(std::size_t i, std::size_t j) const;
  double mean_degree() const;
  std::size_t max_degree() const;
  bool is_connected() const;

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> degree_;
  std::vector<std::vector<std::size_t>> adjacency_;
  DenseMatrix a_hat_;
};

enum class GraphKind { Ba, Er, Sbm, File };

const char* to_string(GraphKind k);
GraphKind parse_graph_kind(const std::string& name);

struct GraphSpec {
  GraphKind kind = GraphKind::Ba;
  std::size_t n = 1000;
  std::size_t ba_m = 5;
  std::optional<double> er_p;  // defaults to 10 / (n - 1)
  std::size_t sbm_blocks = 4;
  double sbm_p_in = 0.03;
  double sbm_p_out = 0.002;
  std::filesystem::path edge_path;
  std::filesystem::path feature_path;

  double effective_er_p() const;
  /// Throws ValidationError when parameters are invalid for `kind`.
  void validate() const;
};

/// Preferential attachment grown from a star on nodes 0..m (centre 0); every
/// later node attaches to m distinct existing nodes chosen proportionally to degree.
Graph generate_ba(std::size_t n, std::size_t m, Rng& rng);
Graph generate_er(std::size_t n, double p, Rng& rng);
/// Contiguous blocks; the first n % num_blocks blocks get one extra node.
Graph generate_sbm(std::size_t n, std::size_t num_blocks, double p_in, double p_out, Rng& rng);

/// Block index of every node under generate_sbm's layout.
std::vector<std::size_t> sbm_block_of(std::size_t n, std::size_t num_blocks);

/// Dispatch for the synthetic kinds; GraphKind::File is rejected here.
Graph generate_graph(const GraphSpec& spec, Rng& rng);

/// D̃^{-1/2}(A + I)D̃^{-1/2}
DenseMatrix normalized_adjacency(const Graph& g);

struct DegreePartition {
  std::vector<std::size_t> hubs;
  std::vector<std::size_t> periphery;
};

/// Sort by degree descending (ties: lower index first); hubs are the first
/// ⌈hub_frac·n⌉, periphery the last ⌈periphery_frac·n⌉.
DegreePartition degree_partition(const Graph& g, double hub_frac = 0.10, double periphery_frac = 0.50);

struct LoadedGraph {
  Graph graph;
  DenseMatrix features;
};

// Edge list "i j" (0-based, '#' comments) plus a headerless CSV feature
// matrix whose row count fixes n. Self-loops in the edge file are dropped.
LoadedGraph load_graph_files(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path);

void write_edge_file(const Graph& g, const std::filesystem::path& path);
void write_feature_file(const DenseMatrix& features, const std::filesystem::path& path);

}  // namespace grl

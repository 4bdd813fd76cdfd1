#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "grl/errors.hpp"
#include "grl/graph.hpp"
#include "grl/rng.hpp"

using namespace grl;
namespace fs = std::filesystem;

namespace {

Graph star(std::size_t leaves) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Graph(leaves + 1, e);
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grl_graphkit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("Graph normalizes, deduplicates and rejects bad edges") {
  const Graph g(4, {{1, 0}, {0, 1}, {2, 3}});
  CHECK(g.num_edges() == 2);
  CHECK(g.edges()[0] == Edge{0, 1});
  CHECK(g.degree() == std::vector<std::size_t>{1, 1, 1, 1});
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(0, 2));
  CHECK_THROWS_AS(Graph(3, {{0, 0}}), ValidationError);
  CHECK_THROWS_AS(Graph(3, {{0, 3}}), ValidationError);
}

TEST_CASE("generate_ba: seed star, min degree, connectivity, validation") {
  Rng rng(1);
  const Graph base = generate_ba(6, 5, rng);
  CHECK(base.num_edges() == 5);
  CHECK(base.degree()[0] == 5);

  for (std::size_t m : {1, 2, 5}) {
    Rng r(m);
    const Graph g = generate_ba(300, m, r);
    CHECK(g.num_edges() == m + (300 - m - 1) * m);
    CHECK(g.is_connected());
    for (std::size_t i = 1; i < 300; ++i) CHECK(g.degree()[i] >= (i <= m ? 1 : m));
    for (std::size_t i = m + 1; i < 300; ++i) CHECK(g.degree()[i] >= m);
  }
  CHECK_THROWS_AS(generate_ba(5, 0, rng), ValidationError);
  CHECK_THROWS_AS(generate_ba(5, 5, rng), ValidationError);
}

TEST_CASE("generate_ba(1000, 5): hubs dominate in at least 28 of 30 seeds") {
  int dominated = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng rng = make_stream(s, "graph");
    const Graph g = generate_ba(1000, 5, rng);
    if (static_cast<double>(g.max_degree()) > 5.0 * g.mean_degree()) ++dominated;
  }
  CHECK(dominated >= 28);
}

TEST_CASE("generate_er: extremes and mean-degree concentration") {
  Rng rng(2);
  CHECK(generate_er(50, 0.0, rng).num_edges() == 0);
  CHECK(generate_er(50, 1.0, rng).num_edges() == 50 * 49 / 2);
  CHECK_THROWS_AS(generate_er(10, 1.5, rng), ValidationError);

  int inside = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng r = make_stream(s, "graph");
    const double mean = generate_er(1000, 10.0 / 999.0, r).mean_degree();
    if (mean >= 9.0 && mean <= 11.0) ++inside;
  }
  CHECK(inside >= 28);
}

TEST_CASE("generate_sbm: block layout, p_out = 0, within-block fraction") {
  const auto blocks = sbm_block_of(10, 4);
  CHECK(blocks == std::vector<std::size_t>{0, 0, 0, 1, 1, 1, 2, 2, 3, 3});

  Rng rng(3);
  const Graph isolated = generate_sbm(200, 4, 0.2, 0.0, rng);
  const auto b200 = sbm_block_of(200, 4);
  for (const Edge& e : isolated.edges()) CHECK(b200[e.first] == b200[e.second]);

  const Graph g = generate_sbm(1000, 4, 0.03, 0.002, rng);
  const auto b = sbm_block_of(1000, 4);
  std::size_t within = 0;
  for (const Edge& e : g.edges()) within += b[e.first] == b[e.second];
  CHECK(static_cast<double>(within) / static_cast<double>(g.num_edges()) > 0.7);

  CHECK_THROWS_AS(generate_sbm(100, 4, 0.01, 0.02, rng), ValidationError);
  CHECK_THROWS_AS(generate_sbm(100, 4, 1.2, 0.02, rng), ValidationError);
}

TEST_CASE("generate_sbm with p_in = p_out matches ER mean degree over seeds") {
  double sbm_mean = 0.0, er_mean = 0.0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng a = make_stream(s, "sbm");
    Rng b = make_stream(s, "er");
    sbm_mean += generate_sbm(400, 4, 0.02, 0.02, a).mean_degree() / 30.0;
    er_mean += generate_er(400, 0.02, b).mean_degree() / 30.0;
  }
  // Mean degree has std about 0.022 per seed-average; 0.2 is many standard errors.
  CHECK(std::abs(sbm_mean - er_mean) < 0.2);
  CHECK(std::abs(sbm_mean - 0.02 * 399) < 0.2);
}

TEST_CASE("generators are deterministic given the seed") {
  for (GraphKind kind : {GraphKind::Ba, GraphKind::Er, GraphKind::Sbm}) {
    GraphSpec spec;
    spec.kind = kind;
    spec.n = 300;
    Rng a(42), b(42), c(43);
    const Graph g1 = generate_graph(spec, a);
    const Graph g2 = generate_graph(spec, b);
    const Graph g3 = generate_graph(spec, c);
    CHECK(g1.edges() == g2.edges());
    CHECK(g1.edges() != g3.edges());
  }
  GraphSpec file;
  file.kind = GraphKind::File;
  file.edge_path = "e.txt";
  file.feature_path = "x.csv";
  Rng r(0);
  CHECK_THROWS_AS(generate_graph(file, r), ConfigError);
}

TEST_CASE("normalized_adjacency: hand-computed cases") {
  CHECK(normalized_adjacency(Graph(1, {})) == DenseMatrix{{1.0}});

  const DenseMatrix path = normalized_adjacency(Graph(2, {{0, 1}}));
  for (double v : path.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

  const DenseMatrix s = normalized_adjacency(star(4));
  CHECK(s(0, 0) == doctest::Approx(1.0 / 5.0).epsilon(1e-15));
  for (std::size_t leaf = 1; leaf <= 4; ++leaf) {
    CHECK(s(0, leaf) == doctest::Approx(1.0 / std::sqrt(10.0)).epsilon(1e-15));
    CHECK(s(leaf, leaf) == doctest::Approx(0.5).epsilon(1e-15));
  }

  // Five leaves: D̃ = diag(6, 2, 2, 2, 2, 2).
  const DenseMatrix s5 = normalized_adjacency(star(5));
  CHECK(s5(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(s5(0, 3) == doctest::Approx(1.0 / std::sqrt(12.0)).epsilon(1e-15));
}

TEST_CASE("normalized_adjacency: symmetric, entries in [0,1], support matches edges, spectral radius <= 1") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const Graph g = generate_er(60, 0.1, rng);
    const DenseMatrix& a = g.a_hat();
    CHECK(a == normalized_adjacency(g));
    for (std::size_t i = 0; i < 60; ++i) {
      for (std::size_t j = 0; j < 60; ++j) {
        CHECK(std::abs(a(i, j) - a(j, i)) < 1e-12);
        CHECK(a(i, j) >= 0.0);
        CHECK(a(i, j) <= 1.0);
        CHECK((a(i, j) > 0.0) == (i == j || g.has_edge(i, j)));
      }
    }
    // Power iteration on the symmetric matrix.
    Vector v(60, 1.0), w(60);
    double lambda = 0.0;
    for (int it = 0; it < 300; ++it) {
      for (std::size_t i = 0; i < 60; ++i) {
        w[i] = 0.0;
        for (std::size_t j = 0; j < 60; ++j) w[i] += a(i, j) * v[j];
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      lambda = norm;
      for (std::size_t i = 0; i < 60; ++i) v[i] = w[i] / norm;
    }
    CHECK(lambda <= 1.0 + 1e-9);
  }
}

TEST_CASE("degree_partition: star, regular graph and BA sizes") {
  const DegreePartition sp = degree_partition(star(9));
  CHECK(sp.hubs == std::vector<std::size_t>{0});
  CHECK(sp.periphery.size() == 5);

  // Cycle: all degrees 2, so order is by index.
  std::vector<Edge> cyc;
  for (std::size_t i = 0; i < 20; ++i) cyc.emplace_back(i, (i + 1) % 20);
  const DegreePartition cp = degree_partition(Graph(20, cyc));
  CHECK(cp.hubs == std::vector<std::size_t>{0, 1});
  CHECK(cp.periphery == std::vector<std::size_t>{10, 11, 12, 13, 14, 15, 16, 17, 18, 19});

  Rng rng(4);
  const Graph ba = generate_ba(1000, 5, rng);
  const DegreePartition p = degree_partition(ba);
  CHECK(p.hubs.size() == 100);
  CHECK(p.periphery.size() == 500);
  const std::set<std::size_t> hubs(p.hubs.begin(), p.hubs.end());
  std::size_t min_hub = ba.max_degree();
  for (std::size_t h : p.hubs) min_hub = std::min(min_hub, ba.degree()[h]);
  for (std::size_t q : p.periphery) {
    CHECK(hubs.count(q) == 0);
    CHECK(ba.degree()[q] <= min_hub);
  }

  CHECK_THROWS_AS(degree_partition(ba, 0.0, 0.5), ValidationError);
  CHECK_THROWS_AS(degree_partition(ba, 0.6, 0.5), ValidationError);
}

TEST_CASE("degree_partition uses ceiling sizes") {
  Rng rng(5);
  const Graph g = generate_er(23, 0.3, rng);
  const DegreePartition p = degree_partition(g);
  CHECK(p.hubs.size() == 3);
  CHECK(p.periphery.size() == 12);
}

TEST_CASE("load_graph_files: triangle, duplicates, comments") {
  const fs::path dir = scratch_dir("triangle");
  write_text(dir / "edges.txt", "# triangle\n0 1\n1 2\n2 0\n1 0\n\n");
  write_text(dir / "x.csv", "1.0,2.0\n3.5,-1\n0,0\n");
  const LoadedGraph lg = load_graph_files(dir / "edges.txt", dir / "x.csv");
  CHECK(lg.graph.num_nodes() == 3);
  CHECK(lg.graph.num_edges() == 3);
  CHECK(lg.features == DenseMatrix{{1.0, 2.0}, {3.5, -1.0}, {0.0, 0.0}});
}

TEST_CASE("load_graph_files: errors carry line numbers") {
  const fs::path dir = scratch_dir("errors");
  write_text(dir / "x.csv", "1,2\n3,4\n5,6\n");
  write_text(dir / "range.txt", "0 1\n# c\n1 3\n");
  try {
    load_graph_files(dir / "range.txt", dir / "x.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  write_text(dir / "bad.csv", "1,2\n3,abc\n");
  write_text(dir / "ok.txt", "0 1\n");
  try {
    load_graph_files(dir / "ok.txt", dir / "bad.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_graph_files(dir / "missing.txt", dir / "x.csv"), IoError);
  CHECK_THROWS_AS(load_graph_files(dir / "ok.txt", dir / "missing.csv"), IoError);
}

TEST_CASE("edge and feature files round-trip a generated graph") {
  const fs::path dir = scratch_dir("roundtrip");
  Rng rng(6);
  const Graph g = generate_er(80, 0.08, rng);
  const DenseMatrix x = gaussian_matrix(80, 3, 1.0, rng);
  write_edge_file(g, dir / "e.txt");
  write_feature_file(x, dir / "x.csv");
  const LoadedGraph back = load_graph_files(dir / "e.txt", dir / "x.csv");
  CHECK(back.graph.edges() == g.edges());
  CHECK(back.features == x);
}

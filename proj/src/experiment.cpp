#include "grl/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "grl/errors.hpp"
#include "grl/report.hpp"

namespace grl {

const char* const kCodeVersion = "grl-bench 0.1.0";

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct SeedOutcome {
  std::optional<SeedResult> result;
  std::optional<SeedFailure> failure;
  SeedExtras extras;
};

SeedResult run_seed_tracked(const ResolvedExperiment& exp, const std::vector<EstimatorKind>& estimators,
                            std::uint64_t seed, bool record_timing, SeedExtras* extras, std::string& stage) {
  stage.clear();
  const GeneratedData gd = generate_dataset(exp.graph, exp.dgp, seed);
  SeedResult out;
  out.seed = seed;
  std::map<ModelFamily, NuisancePair> nuisance;
  for (EstimatorKind kind : estimators) {
    stage = to_string(kind);
    const auto start = std::chrono::steady_clock::now();
    TrainingStreams streams = training_streams(seed, kind);
    CateEstimate est = [&] {
      const PipelineDescription p = describe(kind);
      if (!p.r_learner) return estimate_tlearner(gd.data, gd.graph, exp.train, streams.tlearner);
      auto it = nuisance.find(p.nuisance);
      if (it == nuisance.end()) {
        it = nuisance.emplace(p.nuisance, fit_nuisance(p.nuisance, gd.data, gd.graph, exp.train, streams.nuisance))
                 .first;
      }
      return finish_rlearner(kind, it->second, gd.data, gd.graph, exp.train, streams.final_stage);
    }();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EstimatorScores sc;
    sc.mse = cate_mse(est.tau_hat, gd.data.tau);
    const HubPeripheryErrors hp = hub_periphery_errors(est.tau_hat, gd.data.tau, gd.graph);
    sc.hub_mse = hp.hub_mse;
    sc.periphery_mse = hp.periphery_mse;
    sc.wall_time_s = record_timing ? elapsed : 0.0;
    out.scores[kind] = sc;
    if (extras != nullptr && kind == EstimatorKind::GraphRLearner) {
      extras->embeddings = std::move(est.embeddings);
      extras->true_tau = gd.data.tau;
    }
  }
  stage.clear();
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

json test_json(const PairedTest& t) {
  json j;
  j["mean_diff"] = t.mean_diff;
  j["t"] = std::isfinite(t.t) ? json(t.t) : json(nullptr);
  j["p"] = t.p;
  j["degenerate"] = t.degenerate;
  return j;
}

std::string results_csv(const std::vector<SeedResult>& results, const std::vector<EstimatorKind>& estimators) {
  std::ostringstream out;
  out << "seed,estimator,mse,hub_mse,periphery_mse,wall_time_s\n";
  for (const SeedResult& r : results) {
    for (EstimatorKind k : estimators) {
      const EstimatorScores& s = r.scores.at(k);
      out << r.seed << ',' << to_string(k) << ',' << format_real(s.mse) << ',' << format_real(s.hub_mse) << ','
          << format_real(s.periphery_mse) << ',' << format_real(s.wall_time_s) << '\n';
    }
  }
  return out.str();
}

json summary_json(const ExperimentConfig& cfg, const RunResult& run) {
  json j;
  j["name"] = cfg.name;
  j["num_seeds"] = cfg.num_seeds;
  j["successful_seeds"] = run.results.size();
  j["failed_seeds"] = run.failures.size();
  if (!run.summary) {
    j["summary"] = nullptr;
    return j;
  }
  const ExperimentSummary& s = *run.summary;
  json est = json::object();
  for (EstimatorKind k : s.estimators) {
    const EstimatorSummary& e = s.at(k);
    est[to_string(k)] = {{"mean_mse", e.mean_mse},
                         {"std_mse", e.std_mse},
                         {"mean_hub_mse", e.mean_hub_mse},
                         {"mean_periphery_mse", e.mean_periphery_mse}};
  }
  j["estimators"] = est;
  json comps = json::array();
  for (const auto& [pair, c] : s.comparisons) {
    comps.push_back({{"a", to_string(pair.first)},
                     {"b", to_string(pair.second)},
                     {"mse", test_json(c.mse)},
                     {"hub_mse", test_json(c.hub_mse)},
                     {"periphery_mse", test_json(c.periphery_mse)}});
  }
  j["comparisons"] = comps;
  j["two_model_test"] = s.verdict ? json(to_string(*s.verdict)) : json(nullptr);
  return j;
}

std::string sweep_dir_name(const std::string& value) {
  std::string out;
  for (char c : value) out.push_back((std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_');
  return out;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericError("format_real: conversion failed");
  return std::string(buf, end);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("SHA-256 unavailable");
  }
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

bool RunResult::over_failure_budget(std::size_t num_seeds) const {
  return static_cast<double>(failures.size()) > 0.10 * static_cast<double>(num_seeds);
}

std::size_t default_parallelism() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

SeedResult run_seed(const ResolvedExperiment& exp, const std::vector<EstimatorKind>& estimators, std::uint64_t seed,
                    bool record_timing, SeedExtras* extras) {
  std::string stage;
  return run_seed_tracked(exp, estimators, seed, record_timing, extras, stage);
}

void write_embeddings_csv(const fs::path& path, std::span<const double> true_tau, const DenseMatrix& embeddings) {
  if (true_tau.size() != embeddings.rows()) throw ShapeError("write_embeddings_csv: tau length differs from rows");
  std::ostringstream out;
  out << "node_id,true_tau";
  for (std::size_t c = 0; c < embeddings.cols(); ++c) out << ",e" << (c + 1);
  out << '\n';
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    out << i << ',' << format_real(true_tau[i]);
    for (std::size_t c = 0; c < embeddings.cols(); ++c) out << ',' << format_real(embeddings(i, c));
    out << '\n';
  }
  write_text(path, out.str());
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const ResolvedExperiment exp = resolve(cfg);
  const std::vector<EstimatorKind> estimators = cfg.estimator_list();
  const std::size_t num_seeds = cfg.num_seeds;
  const bool want_embeddings = options.write_embeddings &&
                               std::find(estimators.begin(), estimators.end(), EstimatorKind::GraphRLearner) !=
                                   estimators.end();

  std::vector<SeedOutcome> outcomes(num_seeds);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < num_seeds; i = next.fetch_add(1)) {
      const std::uint64_t seed = i;
      SeedOutcome& slot = outcomes[i];
      std::string stage;
      try {
        if (options.seed_hook) options.seed_hook(seed);
        slot.result = run_seed_tracked(exp, estimators, seed, options.record_timing,
                                       (want_embeddings && i == 0) ? &slot.extras : nullptr, stage);
      } catch (const TrainingError& e) {
        slot.failure = SeedFailure{seed, stage, e.what(), e.epoch()};
      } catch (const std::exception& e) {
        slot.failure = SeedFailure{seed, stage, e.what(), std::nullopt};
      }
      if (options.progress) {
        std::lock_guard lock(log_mutex);
        std::cerr << "[" << cfg.name << "] seed " << seed << (slot.failure ? " failed: " + slot.failure->message : " done")
                  << '\n';
      }
    }
  };
  const std::size_t requested = options.parallelism == 0 ? default_parallelism() : options.parallelism;
  const std::size_t workers = std::max<std::size_t>(1, std::min(requested, num_seeds));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  RunResult run;
  for (SeedOutcome& o : outcomes) {
    if (o.result) run.results.push_back(std::move(*o.result));
    if (o.failure) run.failures.push_back(std::move(*o.failure));
  }
  if (run.results.size() >= 2) run.summary = summarize(run.results);

  fs::create_directories(options.out_dir);
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(options.out_dir / name, text);
    run.files.emplace_back(name);
  };
  const std::string config_text = emit_config(cfg);
  emit("config.yaml", config_text);
  emit("results.csv", results_csv(run.results, estimators));
  emit("summary.json", summary_json(cfg, run).dump(2) + "\n");
  if (run.summary) {
    const RenderedSummary rendered = render_summary(*run.summary, cfg.name);
    emit("summary.txt", rendered.text);
    emit("summary.svg", rendered.svg);
  }
  if (want_embeddings && !outcomes.empty() && outcomes[0].extras.embeddings) {
    write_embeddings_csv(options.out_dir / "embeddings_seed0.csv", outcomes[0].extras.true_tau,
                         *outcomes[0].extras.embeddings);
    run.files.emplace_back("embeddings_seed0.csv");
  }

  json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["config_name"] = cfg.name;
  manifest["config"] = config_text;
  std::vector<std::uint64_t> seeds(num_seeds);
  for (std::size_t i = 0; i < num_seeds; ++i) seeds[i] = i;
  manifest["seeds"] = seeds;
  manifest["estimators"] = json::array();
  for (EstimatorKind k : estimators) manifest["estimators"].push_back(to_string(k));
  manifest["parallelism"] = workers;
  manifest["record_timing"] = options.record_timing;
  json failures = json::array();
  for (const SeedFailure& f : run.failures) {
    failures.push_back({{"seed", f.seed},
                        {"estimator", f.estimator.empty() ? json(nullptr) : json(f.estimator)},
                        {"message", f.message},
                        {"epoch", f.epoch ? json(*f.epoch) : json(nullptr)}});
  }
  manifest["failures"] = failures;
  manifest["over_failure_budget"] = run.over_failure_budget(num_seeds);
  json files = json::array();
  for (const fs::path& f : run.files) {
    const fs::path full = options.out_dir / f;
    files.push_back({{"path", f.generic_string()}, {"sha256", sha256_file(full)}, {"bytes", fs::file_size(full)}});
  }
  manifest["files"] = files;
  write_text(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return run;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, const std::string& param_path,
                              const std::vector<std::string>& values, const RunOptions& options) {
  if (!is_numeric_param(param_path)) throw ValidationError("sweep: '" + param_path + "' is not a numeric config field");
  if (values.empty()) throw ValidationError("sweep: no values given");
  std::vector<ExperimentConfig> variants;
  for (const std::string& v : values) {
    ExperimentConfig c = cfg;
    apply_override(c, param_path + "=" + v);
    resolve(c);
    variants.push_back(std::move(c));
  }
  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunOptions sub = options;
    sub.out_dir = options.out_dir / (sweep_dir_name(param_path) + "=" + sweep_dir_name(values[i]));
    points.push_back({values[i], sub.out_dir, run_experiment(variants[i], sub)});
  }

  std::ostringstream longform;
  longform << "param,value,seed,estimator,mse,hub_mse,periphery_mse\n";
  std::ostringstream means;
  means << "param,value,estimator,mean_mse,std_mse,successful_seeds\n";
  for (const SweepPoint& p : points) {
    const auto ests = variants.front().estimator_list();
    for (const SeedResult& r : p.run.results) {
      for (EstimatorKind k : ests) {
        const EstimatorScores& s = r.scores.at(k);
        longform << param_path << ',' << p.value << ',' << r.seed << ',' << to_string(k) << ',' << format_real(s.mse)
                 << ',' << format_real(s.hub_mse) << ',' << format_real(s.periphery_mse) << '\n';
      }
    }
    if (p.run.summary) {
      for (EstimatorKind k : p.run.summary->estimators) {
        const EstimatorSummary& e = p.run.summary->at(k);
        means << param_path << ',' << p.value << ',' << to_string(k) << ',' << format_real(e.mean_mse) << ','
              << format_real(e.std_mse) << ',' << p.run.results.size() << '\n';
      }
    }
  }
  fs::create_directories(options.out_dir);
  write_text(options.out_dir / "sweep.csv", longform.str());
  write_text(options.out_dir / "sweep_summary.csv", means.str());
  json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["param"] = param_path;
  manifest["values"] = values;
  json files = json::array();
  for (const char* name : {"sweep.csv", "sweep_summary.csv"}) {
    const fs::path full = options.out_dir / name;
    files.push_back({{"path", name}, {"sha256", sha256_file(full)}, {"bytes", fs::file_size(full)}});
  }
  for (const SweepPoint& p : points) {
    const fs::path rel = fs::relative(p.out_dir, options.out_dir);
    for (const fs::path& f : p.run.files) {
      const fs::path full = p.out_dir / f;
      files.push_back({{"path", (rel / f).generic_string()}, {"sha256", sha256_file(full)}, {"bytes", fs::file_size(full)}});
    }
    const fs::path m = p.out_dir / "manifest.json";
    files.push_back({{"path", (rel / "manifest.json").generic_string()}, {"sha256", sha256_file(m)}, {"bytes", fs::file_size(m)}});
  }
  manifest["files"] = files;
  write_text(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return points;
}

void export_embeddings(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& path) {
  const ResolvedExperiment exp = resolve(cfg);
  SeedExtras extras;
  run_seed(exp, {EstimatorKind::GraphRLearner}, seed, false, &extras);
  if (!extras.embeddings) throw NumericError("export_embeddings: the final-stage GNN produced no embeddings");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_embeddings_csv(path, extras.true_tau, *extras.embeddings);
}

}  // namespace grl

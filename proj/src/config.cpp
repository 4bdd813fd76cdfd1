#include "grl/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "grl/errors.hpp"

namespace grl {

namespace {

// Where a value came from, for error messages.
struct Source {
  std::string name;
  bool from_file;
};

[[noreturn]] void fail(const Source& src, const YAML::Node& node, const std::string& what) {
  const std::size_t line = node.Mark().is_null() ? 0 : static_cast<std::size_t>(node.Mark().line) + 1;
  if (src.from_file) throw ParseError(src.name, line, what);
  throw ValidationError(src.name + ": " + what);
}

bool is_null(const YAML::Node& node) { return !node.IsDefined() || node.IsNull(); }

const std::string& scalar_text(const Source& src, const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail(src, node, key + ": expected a scalar value");
  return node.Scalar();
}

std::size_t as_count(const Source& src, const YAML::Node& node, const std::string& key) {
  if (is_null(node)) fail(src, node, key + ": must not be null");
  const std::string& s = scalar_text(src, node, key);
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) fail(src, node, key + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

double as_real(const Source& src, const YAML::Node& node, const std::string& key) {
  if (is_null(node)) fail(src, node, key + ": must not be null");
  const std::string& s = scalar_text(src, node, key);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    fail(src, node, key + ": expected a finite number, got '" + s + "'");
  }
  return v;
}

std::string as_string(const Source& src, const YAML::Node& node, const std::string& key) {
  if (is_null(node)) fail(src, node, key + ": must not be null");
  return scalar_text(src, node, key);
}

template <class F>
auto nullable(const YAML::Node& node, F&& parse) -> std::optional<decltype(parse(node))> {
  if (is_null(node)) return std::nullopt;
  return parse(node);
}

// Checks that `map` is a mapping with exactly the keys in `required` (plus any
// of `optional`), and returns the value node for each present key.
std::map<std::string, YAML::Node> take_keys(const Source& src, const YAML::Node& map, const std::string& where,
                                            const std::vector<std::string>& required,
                                            const std::vector<std::string>& optional = {}) {
  if (!map.IsMap()) fail(src, map, where + ": expected a mapping");
  std::map<std::string, YAML::Node> out;
  for (auto it = map.begin(); it != map.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) fail(src, it->first, "unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    if (out.count(key)) fail(src, it->first, "duplicate key '" + key + "'");
    out.emplace(key, it->second);
  }
  for (const std::string& key : required) {
    if (!out.count(key)) fail(src, map, "missing key '" + (where.empty() ? key : where + "." + key) + "'");
  }
  return out;
}

std::vector<std::string> split_key(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  return parts;
}

// Setters for the schema fields, keyed by dotted path.
using FieldSetter = std::function<void(ExperimentConfig&, const Source&, const YAML::Node&)>;

const std::map<std::string, FieldSetter>& schema_fields() {
  static const std::map<std::string, FieldSetter> fields = {
      {"name", [](ExperimentConfig& c, const Source& s, const YAML::Node& v) { c.name = as_string(s, v, "name"); }},
      {"num_seeds",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) { c.num_seeds = as_count(s, v, "num_seeds"); }},
      {"data_params.n",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.data_params.n = nullable(v, [&](const YAML::Node& x) { return as_count(s, x, "data_params.n"); });
       }},
      {"data_params.d",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.data_params.d = nullable(v, [&](const YAML::Node& x) { return as_count(s, x, "data_params.d"); });
       }},
      {"data_params.graph_type",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.data_params.graph_type =
             nullable(v, [&](const YAML::Node& x) { return as_string(s, x, "data_params.graph_type"); });
       }},
      {"data_params.cate_type",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.data_params.cate_type = as_string(s, v, "data_params.cate_type");
       }},
      {"data_params.real_data_name",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.data_params.real_data_name =
             nullable(v, [&](const YAML::Node& x) { return as_string(s, x, "data_params.real_data_name"); });
       }},
      {"data_params.noise_level",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.data_params.noise_level = as_real(s, v, "data_params.noise_level");
       }},
      {"model_params.num_layers",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.model_params.num_layers = as_count(s, v, "model_params.num_layers");
       }},
      {"model_params.hidden_dim",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.model_params.hidden_dim = as_count(s, v, "model_params.hidden_dim");
       }},
      {"training_params.nuisance_epochs",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.training_params.nuisance_epochs = as_count(s, v, "training_params.nuisance_epochs");
       }},
      {"training_params.cate_epochs",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.training_params.cate_epochs = as_count(s, v, "training_params.cate_epochs");
       }},
      {"training_params.lr",
       [](ExperimentConfig& c, const Source& s, const YAML::Node& v) {
         c.training_params.lr = as_real(s, v, "training_params.lr");
       }},
  };
  return fields;
}

const std::vector<std::string> kSections = {"data_params", "model_params", "training_params"};

std::vector<std::string> section_keys(const std::string& section) {
  std::vector<std::string> keys;
  for (const auto& [path, setter] : schema_fields()) {
    const auto parts = split_key(path);
    if (parts.size() == 2 && parts[0] == section) keys.push_back(parts[1]);
  }
  return keys;
}

enum class KnobType { Count, Real, Bool, Path };

struct Knob {
  KnobType type;
  std::function<void(ResolvedExperiment&, const std::string&)> apply;
};

std::size_t parse_count_text(const std::string& s) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ValidationError("expected a non-negative integer, got '" + s + "'");
  return v;
}

double parse_real_text(const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw ValidationError("expected a finite number, got '" + s + "'");
  }
  return v;
}

bool parse_bool_text(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ValidationError("expected true or false, got '" + s + "'");
}

const std::map<std::string, Knob>& knobs() {
  static const std::map<std::string, Knob> table = {
      {"graph.ba_m", {KnobType::Count, [](ResolvedExperiment& r, const std::string& v) { r.graph.ba_m = parse_count_text(v); }}},
      {"graph.er_p", {KnobType::Real, [](ResolvedExperiment& r, const std::string& v) { r.graph.er_p = parse_real_text(v); }}},
      {"graph.sbm_blocks",
       {KnobType::Count, [](ResolvedExperiment& r, const std::string& v) { r.graph.sbm_blocks = parse_count_text(v); }}},
      {"graph.sbm_p_in",
       {KnobType::Real, [](ResolvedExperiment& r, const std::string& v) { r.graph.sbm_p_in = parse_real_text(v); }}},
      {"graph.sbm_p_out",
       {KnobType::Real, [](ResolvedExperiment& r, const std::string& v) { r.graph.sbm_p_out = parse_real_text(v); }}},
      {"dgp.embed_dim",
       {KnobType::Count, [](ResolvedExperiment& r, const std::string& v) { r.dgp.embed_dim = parse_count_text(v); }}},
      {"dgp.tau_amplitude",
       {KnobType::Real, [](ResolvedExperiment& r, const std::string& v) { r.dgp.tau_amplitude = parse_real_text(v); }}},
      {"dgp.propensity_scale",
       {KnobType::Real, [](ResolvedExperiment& r, const std::string& v) { r.dgp.propensity_scale = parse_real_text(v); }}},
      {"dgp.clip_lo", {KnobType::Real, [](ResolvedExperiment& r, const std::string& v) { r.dgp.clip_lo = parse_real_text(v); }}},
      {"dgp.clip_hi", {KnobType::Real, [](ResolvedExperiment& r, const std::string& v) { r.dgp.clip_hi = parse_real_text(v); }}},
      {"dgp.baseline_std",
       {KnobType::Real, [](ResolvedExperiment& r, const std::string& v) { r.dgp.baseline_std = parse_real_text(v); }}},
      {"dgp.interaction_feature",
       {KnobType::Count,
        [](ResolvedExperiment& r, const std::string& v) { r.dgp.interaction_feature = parse_count_text(v); }}},
      {"dgp.redraw_coefficients",
       {KnobType::Bool,
        [](ResolvedExperiment& r, const std::string& v) { r.dgp.redraw_coefficients = parse_bool_text(v); }}},
      {"data.edge_path", {KnobType::Path, [](ResolvedExperiment& r, const std::string& v) { r.graph.edge_path = v; }}},
      {"data.feature_path",
       {KnobType::Path, [](ResolvedExperiment& r, const std::string& v) { r.graph.feature_path = v; }}},
  };
  return table;
}

std::pair<std::string, std::string> split_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + assignment + "' is not of the form key=value");
  return {assignment.substr(0, eq), assignment.substr(eq + 1)};
}

// Checks an extra-knob assignment and returns it in canonical "key=value" form.
std::string check_knob(const std::string& assignment) {
  const auto [key, value] = split_assignment(assignment);
  auto it = knobs().find(key);
  if (it == knobs().end()) throw ValidationError("unknown config path '" + key + "'");
  ResolvedExperiment scratch;
  it->second.apply(scratch, value);
  return key + "=" + value;
}

void set_knob(std::vector<std::string>& overrides, const std::string& assignment) {
  const std::string canonical = check_knob(assignment);
  const std::string key = split_assignment(canonical).first;
  std::erase_if(overrides, [&](const std::string& o) { return split_assignment(o).first == key; });
  overrides.push_back(canonical);
}

ExperimentConfig parse_document(const YAML::Node& root, const Source& src) {
  if (is_null(root)) fail(src, root, "empty configuration");
  auto top = take_keys(src, root, "", {"name", "num_seeds", "data_params", "model_params", "training_params"},
                       {"estimators", "overrides"});
  ExperimentConfig cfg;
  const auto& fields = schema_fields();
  fields.at("name")(cfg, src, top.at("name"));
  fields.at("num_seeds")(cfg, src, top.at("num_seeds"));
  for (const std::string& section : kSections) {
    auto entries = take_keys(src, top.at(section), section, section_keys(section));
    for (const auto& [key, node] : entries) fields.at(section + "." + key)(cfg, src, node);
  }
  if (auto it = top.find("estimators"); it != top.end()) {
    const YAML::Node& list = it->second;
    if (!list.IsSequence() || list.size() == 0) fail(src, list, "estimators: expected a non-empty list");
    std::vector<EstimatorKind> kinds;
    for (const YAML::Node& item : list) {
      EstimatorKind k;
      try {
        k = parse_estimator_kind(as_string(src, item, "estimators"));
      } catch (const ConfigError& e) {
        fail(src, item, e.what());
      }
      if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) fail(src, item, "estimators: duplicate entry");
      kinds.push_back(k);
    }
    cfg.estimators = kinds;
  }
  if (auto it = top.find("overrides"); it != top.end()) {
    const YAML::Node& list = it->second;
    if (!list.IsSequence()) fail(src, list, "overrides: expected a list of key=value strings");
    for (const YAML::Node& item : list) {
      try {
        set_knob(cfg.overrides, as_string(src, item, "overrides"));
      } catch (const ValidationError& e) {
        fail(src, item, e.what());
      }
    }
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    fail(src, root, e.what());
  }
  return cfg;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "''";
    else out.push_back(c);
  }
  return out + "'";
}

std::string real_text(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T, class F>
std::string or_null(const std::optional<T>& v, F&& show) {
  return v ? show(*v) : std::string("null");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (num_seeds < 1) throw ValidationError("num_seeds must be at least 1");
  const DataParams& dp = data_params;
  if (dp.real_data_name) {
    if (dp.n || dp.d || dp.graph_type) {
      throw ValidationError("real_data_name is set, so data_params n, d and graph_type must be null");
    }
  } else {
    if (!dp.n || !dp.d || !dp.graph_type) {
      throw ValidationError("synthetic data needs data_params n, d and graph_type");
    }
    const GraphKind kind = [&] {
      try {
        return parse_graph_kind(*dp.graph_type);
      } catch (const ConfigError& e) {
        throw ValidationError(e.what());
      }
    }();
    if (kind == GraphKind::File) throw ValidationError("graph_type must be ba, er or sbm");
    if (*dp.n < 2) throw ValidationError("data_params.n must be at least 2");
    if (*dp.d < 1) throw ValidationError("data_params.d must be at least 1");
  }
  try {
    parse_cate_kind(dp.cate_type);
  } catch (const ConfigError& e) {
    throw ValidationError(e.what());
  }
  if (!(dp.noise_level >= 0.0)) throw ValidationError("noise_level must be >= 0");
  if (model_params.num_layers < 1) throw ValidationError("num_layers must be at least 1");
  if (model_params.hidden_dim < 1) throw ValidationError("hidden_dim must be at least 1");
  if (!(training_params.lr > 0.0)) throw ValidationError("lr must be > 0");
  if (estimators && estimators->empty()) throw ValidationError("estimators must not be empty");
  for (const std::string& o : overrides) check_knob(o);
}

std::vector<EstimatorKind> ExperimentConfig::estimator_list() const {
  if (!estimators) return {kAllEstimators.begin(), kAllEstimators.end()};
  std::vector<EstimatorKind> out;
  for (EstimatorKind k : kAllEstimators) {
    if (std::find(estimators->begin(), estimators->end(), k) != estimators->end()) out.push_back(k);
  }
  return out;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  const Source src{source, true};
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(source, static_cast<std::size_t>(e.mark.line) + 1, e.msg);
  }
  return parse_document(root, src);
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::string emit_config(const ExperimentConfig& cfg) {
  auto count = [](std::size_t v) { return std::to_string(v); };
  const DataParams& dp = cfg.data_params;
  std::ostringstream out;
  out << "name: " << quote(cfg.name) << "\n";
  out << "num_seeds: " << cfg.num_seeds << "\n\n";
  out << "data_params:\n";
  out << "  n: " << or_null(dp.n, count) << "\n";
  out << "  d: " << or_null(dp.d, count) << "\n";
  out << "  graph_type: " << or_null(dp.graph_type, quote) << "\n";
  out << "  cate_type: " << quote(dp.cate_type) << "\n";
  out << "  real_data_name: " << or_null(dp.real_data_name, quote) << "\n";
  out << "  noise_level: " << real_text(dp.noise_level) << "\n\n";
  out << "model_params:\n";
  out << "  num_layers: " << cfg.model_params.num_layers << "\n";
  out << "  hidden_dim: " << cfg.model_params.hidden_dim << "\n\n";
  out << "training_params:\n";
  out << "  nuisance_epochs: " << cfg.training_params.nuisance_epochs << "\n";
  out << "  cate_epochs: " << cfg.training_params.cate_epochs << "\n";
  out << "  lr: " << real_text(cfg.training_params.lr) << "\n";
  if (cfg.estimators) {
    out << "\nestimators:\n";
    for (EstimatorKind k : *cfg.estimators) out << "  - " << to_string(k) << "\n";
  }
  if (!cfg.overrides.empty()) {
    out << "\noverrides:\n";
    for (const std::string& o : cfg.overrides) out << "  - " << quote(o) << "\n";
  }
  return out.str();
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto [key, value] = split_assignment(assignment);
  const auto& fields = schema_fields();
  if (auto it = fields.find(key); it != fields.end()) {
    YAML::Node node;
    try {
      node = YAML::Load(value);
    } catch (const YAML::Exception& e) {
      throw ValidationError("override " + key + ": " + e.msg);
    }
    ExperimentConfig next = cfg;
    it->second(next, Source{"override " + key, false}, node);
    next.validate();
    cfg = std::move(next);
    return;
  }
  set_knob(cfg.overrides, assignment);
}

bool is_numeric_param(const std::string& path) {
  static const std::set<std::string> numeric_fields = {
      "num_seeds",         "data_params.n",          "data_params.d",
      "data_params.noise_level", "model_params.num_layers", "model_params.hidden_dim",
      "training_params.nuisance_epochs", "training_params.cate_epochs", "training_params.lr"};
  if (numeric_fields.count(path)) return true;
  auto it = knobs().find(path);
  return it != knobs().end() && (it->second.type == KnobType::Count || it->second.type == KnobType::Real);
}

ResolvedExperiment resolve(const ExperimentConfig& cfg) {
  cfg.validate();
  ResolvedExperiment r;
  const DataParams& dp = cfg.data_params;
  if (dp.real_data_name) {
    r.graph.kind = GraphKind::File;
  } else {
    r.graph.kind = parse_graph_kind(*dp.graph_type);
    r.graph.n = *dp.n;
    r.dgp.d = *dp.d;
  }
  r.dgp.cate_kind = parse_cate_kind(dp.cate_type);
  r.dgp.noise_level = dp.noise_level;
  r.train.num_layers = cfg.model_params.num_layers;
  r.train.hidden_dim = cfg.model_params.hidden_dim;
  r.train.nuisance_epochs = cfg.training_params.nuisance_epochs;
  r.train.cate_epochs = cfg.training_params.cate_epochs;
  r.train.lr = cfg.training_params.lr;
  for (const std::string& o : cfg.overrides) {
    const auto [key, value] = split_assignment(o);
    knobs().at(key).apply(r, value);
  }
  if (r.graph.kind == GraphKind::File && (r.graph.edge_path.empty() || r.graph.feature_path.empty())) {
    throw ConfigError("real dataset '" + *dp.real_data_name +
                      "' needs data.edge_path and data.feature_path overrides pointing at its files");
  }
  if (r.graph.kind != GraphKind::File) r.graph.validate();
  r.dgp.validate();
  r.train.validate();
  return r;
}

}  // namespace grl

#include "pathcast/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("data")) {
    const auto& d = j.at("data");
    read_field(d, "crime", c.crime_path);
    read_field(d, "census", c.census_path);
    read_field(d, "tract_map", c.tract_map_path);
    read_field(d, "poi", c.poi_path);
    read_field(d, "regions", c.regions_path);
    read_field(d, "taxonomy", c.taxonomy_path);
  }
  read_field(j, "bundle", c.bundle_dir);
  if (j.contains("period")) {
    read_field(j.at("period"), "start", c.period_start);
    read_field(j.at("period"), "end", c.period_end);
  }
  read_field(j, "categories", c.categories);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    read_field(m, "window", c.window);
    read_field(m, "state_dim", c.state_dim);
    read_field(m, "embed_dim", c.embed_dim);
    read_field(m, "attention_dim", c.attention_dim);
    read_field(m, "lstm_layers", c.lstm_layers);
    read_field(m, "top_k", c.top_k);
    read_field(m, "log1p_inputs", c.log1p_inputs);
    read_field(m, "instance_feature_scaling", c.instance_feature_scaling);
  }
  if (j.contains("hin")) {
    read_field(j.at("hin"), "quantile_bins", c.quantile_bins);
    read_field(j.at("hin"), "geo_adjacency_km", c.geo_adjacency_km);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    read_field(t, "learning_rate", c.learning_rate);
    read_field(t, "epochs", c.epochs);
    read_field(t, "patience", c.patience);
    read_field(t, "threshold", c.threshold);
    read_field(t, "min_history", c.min_history);
  }
  read_field(j, "seed", c.seed);
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["data"] = {{"crime", crime_path},     {"census", census_path},
               {"tract_map", tract_map_path}, {"poi", poi_path},
               {"regions", regions_path}, {"taxonomy", taxonomy_path}};
  j["bundle"] = bundle_dir;
  j["period"] = {{"start", period_start}, {"end", period_end}};
  j["categories"] = categories;
  j["model"] = {{"window", window},
                {"state_dim", state_dim},
                {"embed_dim", embed_dim},
                {"attention_dim", attention_dim},
                {"lstm_layers", lstm_layers},
                {"top_k", top_k},
                {"log1p_inputs", log1p_inputs},
                {"instance_feature_scaling", instance_feature_scaling}};
  j["hin"] = {{"quantile_bins", quantile_bins}, {"geo_adjacency_km", geo_adjacency_km}};
  j["train"] = {{"learning_rate", learning_rate}, {"epochs", epochs},
                {"patience", patience},           {"threshold", threshold},
                {"min_history", min_history}};
  j["seed"] = seed;
  return j;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed config '" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << to_json().dump(2) << '\n';
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_json().dump()); }

NetworkConfig RunConfig::network() const {
  NetworkConfig n;
  n.window = window;
  n.state_dim = state_dim;
  n.embed_dim = embed_dim;
  n.attention_dim = attention_dim;
  n.lstm_layers = lstm_layers;
  n.top_k = top_k;
  n.log1p_inputs = log1p_inputs;
  if (instance_feature_scaling == "none") {
    n.instance_feature_scaling = FeatureScaling::kNone;
  } else if (instance_feature_scaling == "l1") {
    n.instance_feature_scaling = FeatureScaling::kL1;
  } else if (instance_feature_scaling == "log1p") {
    n.instance_feature_scaling = FeatureScaling::kLog1p;
  } else {
    throw InputError("unknown instance_feature_scaling '" + instance_feature_scaling + "'");
  }
  return n;
}

TrainConfig RunConfig::trainer() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.epochs = epochs;
  t.patience = patience;
  t.seed = seed;
  return t;
}

BinConfig RunConfig::bins() const { return {quantile_bins}; }

SplitOptions RunConfig::split_options() const {
  SplitOptions s;
  s.min_history = min_history;
  return s;
}

void RunConfig::validate() const {
  if (window < 1 || state_dim < 1 || embed_dim < 1 || attention_dim < 1 || lstm_layers < 1) {
    throw InputError("config: model dimensions must be positive");
  }
  if (quantile_bins < 1) throw InputError("config: quantile_bins must be positive");
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw InputError("config: threshold must lie in (0, 1)");
  }
  if (epochs < 0 || patience < 1) throw InputError("config: bad training schedule");
  network();  // validates the scaling name
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

}  // namespace pathcast

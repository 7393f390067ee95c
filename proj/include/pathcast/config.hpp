#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pathcast/hin.hpp"
#include "pathcast/metapath_network.hpp"
#include "pathcast/training.hpp"

namespace pathcast {

/// Single source of truth for a batch run. Loaded from a JSON file; CLI
/// flags override file values; the effective config is echoed into every
/// output directory.
struct RunConfig {
  // Raw inputs (resolved against the config file's directory when relative).
  std::string crime_path;
  std::string census_path;
  std::string tract_map_path;
  std::string poi_path;
  std::string regions_path;
  std::string taxonomy_path;  // empty = shipped default taxonomy
  std::string bundle_dir;     // empty = <out>/bundle

  std::string period_start;
  std::string period_end;
  std::vector<std::string> categories;

  int window = 28;
  int state_dim = 128;
  int embed_dim = 64;
  int attention_dim = 128;
  int lstm_layers = 2;
  int top_k = 20;
  bool log1p_inputs = true;
  std::string instance_feature_scaling = "l1";  // none | l1 | log1p

  int quantile_bins = 3;
  double geo_adjacency_km = 0.0;  // <= 0: auto threshold
  int min_history = 28;

  double learning_rate = 1e-4;
  int epochs = 100;
  int patience = 10;
  double threshold = 0.5;
  std::uint64_t seed = 7;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// FNV-1a of the canonical JSON form; stamped into checkpoints.
  std::uint64_t hash() const;

  NetworkConfig network() const;
  TrainConfig trainer() const;
  BinConfig bins() const;
  SplitOptions split_options() const;

  void validate() const;
};

/// Resolves `path` against `base_dir` when it is relative.
std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::string& path);

}  // namespace pathcast

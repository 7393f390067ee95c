// pathcast command line: ingest raw data into a dataset bundle, build the
// factor network and similarity matrices, train, evaluate, and export the
// attention-weight explanations.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "pathcast/checkpoint.hpp"
#include "pathcast/common.hpp"
#include "pathcast/config.hpp"
#include "pathcast/csv.hpp"
#include "pathcast/hin.hpp"
#include "pathcast/ingest.hpp"
#include "pathcast/similarity.hpp"
#include "pathcast/training.hpp"

namespace fs = std::filesystem;
using namespace pathcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

/// One command per output directory; the lock file enforces it.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& out_dir) : path_(out_dir / ".pathcast.lock") {
    fs::create_directories(out_dir);
    if (fs::exists(path_)) {
      throw std::runtime_error("output directory is locked by another run: " + path_.string());
    }
    std::ofstream lock(path_);
    lock << "locked\n";
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  fs::path path_;
};

struct CommandContext {
  RunConfig config;
  fs::path config_dir;
  fs::path out;
  fs::path checkpoint_path;

  fs::path bundle_dir() const {
    if (!config.bundle_dir.empty()) return resolve_path(config_dir, config.bundle_dir);
    return out / "bundle";
  }
  fs::path input(const std::string& path, const char* what) const {
    if (path.empty()) throw InputError(std::string("config: missing data path for ") + what);
    fs::path p = resolve_path(config_dir, path);
    if (!fs::exists(p)) throw InputError(std::string(what) + " file not found: " + p.string());
    return p;
  }
};

void echo_effective_config(const CommandContext& ctx) {
  ctx.config.save(ctx.out / "effective_config.json");
}

void report_skips(const std::string& what, const SkipReport& skipped, std::ostream& out) {
  if (skipped.empty()) return;
  out << what << ": skipped " << skipped.size() << " rows\n";
  for (std::size_t i = 0; i < skipped.entries.size() && i < 10; ++i) {
    out << "  row " << skipped.entries[i].row << ": " << skipped.entries[i].reason << "\n";
  }
  if (skipped.size() > 10) out << "  ...\n";
}

int cmd_ingest(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.period_start.empty() || cfg.period_end.empty() || cfg.categories.empty()) {
    throw InputError("config: period.start, period.end and categories are required");
  }
  StudyPeriod period{parse_date(cfg.period_start), parse_date(cfg.period_end)};
  if (period.days() < 2) throw InputError("config: study period must span at least two days");

  DatasetBundle bundle;
  bundle.taxonomy = cfg.taxonomy_path.empty()
                        ? FeatureTaxonomy::default_taxonomy()
                        : FeatureTaxonomy::load(ctx.input(cfg.taxonomy_path, "taxonomy"));

  // Region table: region_id, lat, lon, optional WKT geometry.
  std::map<std::string, std::string> checksums;
  const fs::path regions_path = ctx.input(cfg.regions_path, "regions");
  checksums["regions"] = hex64(fnv1a64_file(regions_path));
  {
    CsvTable table = read_csv_file(regions_path);
    const int id_col = table.require_column("region_id");
    const int lat_col = table.require_column("lat");
    const int lon_col = table.require_column("lon");
    const int geom_col = table.column("geometry");
    for (const auto& row : table.rows) {
      RegionProfile p;
      p.region_id = row[id_col];
      p.lat = std::stod(row[lat_col]);
      p.lon = std::stod(row[lon_col]);
      if (geom_col >= 0 && !row[geom_col].empty()) {
        p.geometry = parse_wkt_polygon(row[geom_col]);
      }
      bundle.profiles.push_back(std::move(p));
    }
  }
  if (bundle.profiles.empty()) throw InputError("regions file lists no regions");

  const fs::path census_path = ctx.input(cfg.census_path, "census");
  const fs::path tract_map_path = ctx.input(cfg.tract_map_path, "tract_map");
  checksums["census"] = hex64(fnv1a64_file(census_path));
  checksums["tract_map"] = hex64(fnv1a64_file(tract_map_path));
  {
    std::ifstream census(census_path);
    std::ifstream tract_map(tract_map_path);
    auto result = load_census(census, tract_map, bundle.profiles, bundle.taxonomy);
    report_skips("census", result.skipped, std::cout);
  }

  const fs::path poi_path = ctx.input(cfg.poi_path, "poi");
  checksums["poi"] = hex64(fnv1a64_file(poi_path));
  {
    std::ifstream poi(poi_path);
    auto result = load_poi(poi, bundle.profiles, bundle.taxonomy);
    report_skips("poi", result.skipped, std::cout);
  }

  bundle.geography = compute_geography(bundle.profiles, cfg.geo_adjacency_km);
  apply_geography(bundle.profiles, bundle.geography, bundle.taxonomy);

  const auto violations = validate_profiles(bundle.profiles, bundle.taxonomy);
  if (!violations.empty()) {
    std::cerr << "profile validation failed with " << violations.size() << " violations:\n";
    for (const auto& v : violations) {
      std::cerr << "  " << v.region_id << " / " << factor_name(v.kind) << ": " << v.message
                << "\n";
    }
    return kExitInput;
  }

  const fs::path crime_path = ctx.input(cfg.crime_path, "crime");
  checksums["crime"] = hex64(fnv1a64_file(crime_path));
  std::vector<std::string> region_ids;
  for (const auto& p : bundle.profiles) region_ids.push_back(p.region_id);
  {
    std::ifstream crime(crime_path);
    auto result = load_crime_events(crime, cfg.categories, period, region_ids);
    report_skips("crime", result.skipped, std::cout);
    bundle.tensor = build_crime_tensor(result.events, region_ids, period, cfg.categories);
  }

  save_bundle(ctx.bundle_dir(), bundle, checksums);
  std::cout << "bundle written to " << ctx.bundle_dir().string() << " (" << region_ids.size()
            << " regions, " << bundle.tensor.days() << " days, "
            << bundle.tensor.category_count() << " categories, " << bundle.tensor.total()
            << " events)\n";
  return kExitOk;
}

struct BuiltNetwork {
  DatasetBundle bundle;
  Hin hin;
  std::array<SimilarityMatrix, kFactorKindCount> sims;
};

BuiltNetwork load_network(const CommandContext& ctx, bool require_cached_sims) {
  BuiltNetwork net;
  net.bundle = load_bundle(ctx.bundle_dir());
  net.hin = Hin::build(net.bundle.profiles, net.bundle.taxonomy, ctx.config.bins());
  bool cached = true;
  for (FactorKind kind : kAllFactorKinds) {
    const fs::path path =
        ctx.bundle_dir() / ("similarity_" + std::string(factor_name(kind)) + ".csv");
    if (!fs::exists(path)) {
      cached = false;
      break;
    }
    std::ifstream in(path);
    net.sims[kind_index(kind)] = load_similarity_csv(in, kind, net.hin.region_ids());
  }
  if (!cached) {
    if (require_cached_sims) {
      throw InputError("similarity matrices missing from the bundle; run `build` first");
    }
    net.sims = all_similarity_matrices(net.bundle.profiles, net.bundle.taxonomy, net.hin);
  }
  return net;
}

int cmd_build(const CommandContext& ctx) {
  DatasetBundle bundle = load_bundle(ctx.bundle_dir());
  Hin hin = Hin::build(bundle.profiles, bundle.taxonomy, ctx.config.bins());
  {
    std::ofstream out(ctx.bundle_dir() / "hin_edges.tsv");
    hin.export_edges(out);
  }
  auto sims = all_similarity_matrices(bundle.profiles, bundle.taxonomy, hin);
  for (FactorKind kind : kAllFactorKinds) {
    std::ofstream out(ctx.bundle_dir() /
                      ("similarity_" + std::string(factor_name(kind)) + ".csv"));
    save_similarity_csv(out, sims[kind_index(kind)], hin.region_ids());
  }
  std::cout << "network built: " << hin.region_count() << " regions, edge list and "
            << kFactorKindCount << " similarity matrices written to "
            << ctx.bundle_dir().string() << "\n";
  return kExitOk;
}

int cmd_train(const CommandContext& ctx) {
  BuiltNetwork net = load_network(ctx, /*require_cached_sims=*/false);
  PreparedData data = prepare_inputs(net.bundle, net.hin, net.sims, ctx.config.network());
  DatasetSplit split =
      split_dataset(net.bundle.tensor, ctx.config.window, ctx.config.split_options());

  TrainResult result = train(data, split, ctx.config.trainer());
  save_checkpoint(ctx.checkpoint_path, result.best_params, ctx.config.hash());
  {
    std::ofstream log(ctx.out / "train_log.csv");
    write_train_log(log, result.log);
  }
  std::cout << "trained " << result.log.size() << " epochs";
  if (result.best_epoch > 0) {
    std::cout << ", best validation loss " << format_double(result.best_val_loss) << " at epoch "
              << result.best_epoch;
  }
  std::cout << "; checkpoint written to " << ctx.checkpoint_path.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const CommandContext& ctx) {
  BuiltNetwork net = load_network(ctx, /*require_cached_sims=*/false);
  PreparedData data = prepare_inputs(net.bundle, net.hin, net.sims, ctx.config.network());
  DatasetSplit split =
      split_dataset(net.bundle.tensor, ctx.config.window, ctx.config.split_options());

  LoadedCheckpoint checkpoint = load_checkpoint(ctx.checkpoint_path);
  MetricsReport report =
      evaluate(checkpoint.params, data, split.test_days, ctx.config.threshold);
  {
    std::ofstream json(ctx.out / "metrics.json");
    write_metrics_json(json, report, net.bundle.tensor.categories());
  }
  {
    std::ofstream table(ctx.out / "metrics.txt");
    write_metrics_table(table, report, net.bundle.tensor.categories());
  }
  write_metrics_table(std::cout, report, net.bundle.tensor.categories());
  return kExitOk;
}

int cmd_explain(const CommandContext& ctx) {
  BuiltNetwork net = load_network(ctx, /*require_cached_sims=*/false);
  PreparedData data = prepare_inputs(net.bundle, net.hin, net.sims, ctx.config.network());
  DatasetSplit split =
      split_dataset(net.bundle.tensor, ctx.config.window, ctx.config.split_options());

  LoadedCheckpoint checkpoint = load_checkpoint(ctx.checkpoint_path);
  if (!checkpoint.params.dims.metapath) {
    throw InputError("checkpoint was trained without the meta-path pipeline; "
                     "attention weights are undefined");
  }
  ExplainResult result = explain(checkpoint.params, data, split.test_days);
  {
    std::ofstream trace(ctx.out / "beta_trace.csv");
    write_beta_trace(trace, result);
  }
  {
    std::ofstream summary(ctx.out / "beta_summary.csv");
    write_beta_summary(summary, result);
  }
  std::cout << "attention traces for " << result.days.size() << " test days written to "
            << (ctx.out / "beta_trace.csv").string() << "\n";
  write_beta_summary(std::cout, result);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meta-path guided crime occurrence forecasting"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string checkpoint_path;
  std::optional<std::uint64_t> seed_override;

  app.add_option("--config", config_path, "run configuration file (JSON)")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--checkpoint", checkpoint_path,
                 "checkpoint path (default <out>/checkpoint.ckpt)");

  auto* ingest = app.add_subcommand("ingest", "load raw data into a dataset bundle");
  auto* build = app.add_subcommand("build", "build the factor network and similarity matrices");
  auto* train = app.add_subcommand("train", "train a model on the bundle");
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test split");
  auto* explain = app.add_subcommand("explain", "export attention-weight explanations");

  CLI11_PARSE(app, argc, argv);

  try {
    CommandContext ctx;
    ctx.config = RunConfig::load(config_path);
    if (seed_override) ctx.config.seed = *seed_override;
    ctx.config.validate();
    ctx.config_dir = fs::path(config_path).parent_path();
    ctx.out = out_dir;
    ctx.checkpoint_path =
        checkpoint_path.empty() ? ctx.out / "checkpoint.ckpt" : fs::path(checkpoint_path);

    OutputLock lock(ctx.out);
    echo_effective_config(ctx);

    if (ingest->parsed()) return cmd_ingest(ctx);
    if (build->parsed()) return cmd_build(ctx);
    if (train->parsed()) return cmd_train(ctx);
    if (evaluate->parsed()) return cmd_evaluate(ctx);
    if (explain->parsed()) return cmd_explain(ctx);
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

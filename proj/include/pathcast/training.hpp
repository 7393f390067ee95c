#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pathcast/metapath_network.hpp"

namespace pathcast {

/// One prediction task: the window of days [day-M+1 .. day] predicts the
/// occurrence labels of day+1 for one region.
struct Sample {
  int region = 0;
  int day = 0;  // last observed day, 0-based
};

struct SplitOptions {
  double train_fraction = 0.75;
  double val_fraction = 0.05;
  /// Minimum observed days before the first prediction; the published
  /// protocol starts predictions on day 29 regardless of the window, so
  /// the default floor is 28. Set to 0 for short synthetic periods.
  int min_history = 28;
};

/// Day indices (last-observed-day t, so the predicted day is t+1) of the
/// chronological train/validation/test split.
struct DatasetSplit {
  std::vector<int> train_days;
  std::vector<int> val_days;
  std::vector<int> test_days;

  int total_days() const {
    return static_cast<int>(train_days.size() + val_days.size() + test_days.size());
  }
};

/// Chronological split of all prediction days. The first predicted day is
/// max(window, min_history) + 1 (1-based); a full 365-day year therefore
/// has 337 prediction days and uses the published 255/18/64 protocol
/// counts; other lengths split by cumulative rounding of the fractions.
/// Fewer than 3 prediction days is an error.
DatasetSplit split_dataset(const CrimeTensor& tensor, int window, SplitOptions options = {});

/// Per-(day, region) sample list for a set of split days.
std::vector<Sample> make_samples(const CrimeTensor& tensor, std::span<const int> days);

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 100;
  int patience = 10;  // early stopping on validation loss
  std::uint64_t seed = 7;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ModelParams best_params;
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

/// Adam training over the split's train days (one optimizer step per day,
/// day order reshuffled each epoch from the seed). Keeps the parameters of
/// the best validation epoch. Non-finite loss aborts with a diagnostic.
TrainResult train(const PreparedData& data, const DatasetSplit& split,
                  const TrainConfig& config);

void write_train_log(std::ostream& out, std::span<const EpochLog> log);

struct CategoryConfusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricsReport {
  double macro_f1 = 0.0, micro_f1 = 0.0;
  double macro_recall = 0.0, micro_recall = 0.0;
  std::vector<double> f1;        // per category
  std::vector<double> recall;    // per category
  std::vector<bool> zero_positive;  // categories with no positive samples
  std::vector<CategoryConfusion> confusion;
  double threshold = 0.5;
};

/// Metric arithmetic from per-category confusion counts: recall =
/// TP/(TP+FN), F1ic = harmonic mean of precision and recall, macro =
/// unweighted category mean, micro = pooled counts. Categories without a
/// single positive score recall 0 and are flagged.
MetricsReport metrics_from_confusion(std::span<const CategoryConfusion> confusion,
                                     double threshold);

/// Forwards every test day, binarizes at the threshold, and pools the
/// confusion counts over all (day, region) samples per category.
MetricsReport evaluate(const ModelParams& params, const PreparedData& data,
                       std::span<const int> test_days, double threshold = 0.5);

void write_metrics_json(std::ostream& out, const MetricsReport& report,
                        std::span<const std::string> categories);
void write_metrics_table(std::ostream& out, const MetricsReport& report,
                         std::span<const std::string> categories);

struct FactorSummary {
  double mean = 0.0, min = 0.0, median = 0.0, max = 0.0;
};

struct ExplainResult {
  std::vector<int> days;
  Eigen::MatrixXd beta;  // one row per test day, six factor columns
  std::array<FactorSummary, kFactorKindCount> summary;
};

/// Attention-weight traces over the test days plus the per-factor
/// mean/min/median/max summary. Every trace row sums to 1.
ExplainResult explain(const ModelParams& params, const PreparedData& data,
                      std::span<const int> test_days);

void write_beta_trace(std::ostream& out, const ExplainResult& result);
void write_beta_summary(std::ostream& out, const ExplainResult& result);

/// Same pipeline with the meta-path aggregation bypassed: the temporal
/// embedding feeds the prediction head directly. Returns the evaluation
/// report of the trained ablation model.
MetricsReport lstm_only_ablation(const DatasetBundle& bundle, const Hin& hin,
                                 const std::array<SimilarityMatrix, kFactorKindCount>& sims,
                                 const NetworkConfig& network, const DatasetSplit& split,
                                 const TrainConfig& config, double threshold = 0.5,
                                 TrainResult* result_out = nullptr);

}  // namespace pathcast

#include "pathcast/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "pathcast/common.hpp"

namespace pathcast {

DatasetSplit split_dataset(const CrimeTensor& tensor, int window, SplitOptions options) {
  if (window < 1) throw InputError("split_dataset: window must be positive");
  const int total_days = tensor.days();
  // First prediction target is day max(window, min_history)+1 (1-based), so
  // the first last-observed day index is one less than that offset.
  const int start = std::max(window, options.min_history) - 1;
  const int prediction_days = total_days - 1 - start;
  if (prediction_days < 3) {
    throw InputError("split_dataset: period of " + std::to_string(total_days) +
                     " days leaves " + std::to_string(std::max(prediction_days, 0)) +
                     " prediction days; need at least 3");
  }

  int train_count, val_count;
  if (prediction_days == 337) {
    // Published full-year protocol: 337 prediction days from day 29 split
    // as 255/18/64. These counts are not a rounding of the nominal
    // fractions (337 is prime), so they are pinned explicitly.
    train_count = 255;
    val_count = 18;
  } else {
    const double n = static_cast<double>(prediction_days);
    train_count = static_cast<int>(std::llround(n * options.train_fraction));
    const int train_val =
        static_cast<int>(std::llround(n * (options.train_fraction + options.val_fraction)));
    val_count = train_val - train_count;
    train_count = std::max(1, std::min(train_count, prediction_days - 2));
    val_count = std::max(1, std::min(val_count, prediction_days - train_count - 1));
  }

  DatasetSplit split;
  for (int i = 0; i < prediction_days; ++i) {
    const int day = start + i;  // predicts day+1
    if (i < train_count) {
      split.train_days.push_back(day);
    } else if (i < train_count + val_count) {
      split.val_days.push_back(day);
    } else {
      split.test_days.push_back(day);
    }
  }
  return split;
}

std::vector<Sample> make_samples(const CrimeTensor& tensor, std::span<const int> days) {
  std::vector<Sample> samples;
  samples.reserve(days.size() * static_cast<std::size_t>(tensor.region_count()));
  for (int day : days) {
    for (int r = 0; r < tensor.region_count(); ++r) samples.push_back({r, day});
  }
  return samples;
}

namespace {

Eigen::MatrixXd day_targets(const CrimeTensor& tensor, int day) {
  Eigen::MatrixXd targets(tensor.region_count(), tensor.category_count());
  for (int r = 0; r < tensor.region_count(); ++r) {
    targets.row(r) = tensor.occurrence_row(day + 1, r).transpose();
  }
  return targets;
}

double dataset_loss(const PreparedData& data, const ModelParams& params,
                    std::span<const int> days) {
  double loss = 0.0;
  for (int day : days) {
    DayOutput out = forward(day, data, params);
    loss += bce_loss(out.probs, day_targets(*data.tensor, day));
  }
  return loss;
}

/// Adam moment buffers, flat per tensor.
struct AdamState {
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  long step = 0;
};

void adam_step(ModelParams& params, ModelGrads& grads, AdamState& state,
               const TrainConfig& config) {
  auto param_refs = tensor_refs(params);
  auto grad_refs = tensor_refs(grads);
  if (state.m.empty()) {
    state.m.resize(param_refs.size());
    state.v.resize(param_refs.size());
    for (std::size_t i = 0; i < param_refs.size(); ++i) {
      state.m[i] = Eigen::VectorXd::Zero(param_refs[i].size());
      state.v[i] = Eigen::VectorXd::Zero(param_refs[i].size());
    }
  }
  ++state.step;
  const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param_refs.size(); ++i) {
    Eigen::Map<Eigen::VectorXd> p(param_refs[i].data, param_refs[i].size());
    Eigen::Map<const Eigen::VectorXd> g(grad_refs[i].data, grad_refs[i].size());
    state.m[i] = config.adam_beta1 * state.m[i] + (1.0 - config.adam_beta1) * g;
    state.v[i] = config.adam_beta2 * state.v[i] +
                 (1.0 - config.adam_beta2) * g.cwiseProduct(g);
    const Eigen::VectorXd m_hat = state.m[i] / bias1;
    const Eigen::VectorXd v_hat = state.v[i] / bias2;
    p -= (config.learning_rate * m_hat.array() / (v_hat.array().sqrt() + config.adam_epsilon))
             .matrix();
  }
  // Keep parameters exactly representable in the f32 checkpoint format.
  params.quantize_storage();
}

}  // namespace

TrainResult train(const PreparedData& data, const DatasetSplit& split,
                  const TrainConfig& config) {
  ModelParams params = ModelParams::init(data.dims, config.seed);
  ModelGrads grads = ModelGrads::zero_like(params);
  AdamState adam;
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  TrainResult result;
  result.best_params = params;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  std::vector<int> order = split.train_days;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double train_loss = 0.0;
    for (int day : order) {
      grads.setZero();
      train_loss += forward_backward(day, data, params, day_targets(*data.tensor, day), grads);
      adam_step(params, grads, adam, config);
    }
    if (!std::isfinite(train_loss)) {
      throw std::runtime_error("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch + 1));
    }
    const double val_loss =
        split.val_days.empty() ? train_loss : dataset_loss(data, params, split.val_days);
    result.log.push_back({epoch + 1, train_loss, val_loss});

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch + 1;
      result.best_params = params;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= config.patience) {
      break;
    }
  }
  return result;
}

void write_train_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,train_loss,val_loss\n";
  for (const auto& entry : log) {
    out << entry.epoch << ',' << format_double(entry.train_loss) << ','
        << format_double(entry.val_loss) << '\n';
  }
}

MetricsReport metrics_from_confusion(std::span<const CategoryConfusion> confusion,
                                     double threshold) {
  MetricsReport report;
  report.threshold = threshold;
  report.confusion.assign(confusion.begin(), confusion.end());

  long pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  for (const auto& c : confusion) {
    const bool zero_positive = (c.tp + c.fn) == 0;
    report.zero_positive.push_back(zero_positive);
    const double recall =
        zero_positive ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    const double precision =
        (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double f1 =
        (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    report.recall.push_back(recall);
    report.f1.push_back(f1);
    pooled_tp += c.tp;
    pooled_fp += c.fp;
    pooled_fn += c.fn;
  }

  const auto count = static_cast<double>(confusion.size());
  if (count > 0) {
    report.macro_f1 = std::accumulate(report.f1.begin(), report.f1.end(), 0.0) / count;
    report.macro_recall =
        std::accumulate(report.recall.begin(), report.recall.end(), 0.0) / count;
  }
  report.micro_recall = (pooled_tp + pooled_fn) == 0
                            ? 0.0
                            : static_cast<double>(pooled_tp) /
                                  static_cast<double>(pooled_tp + pooled_fn);
  report.micro_f1 = (2 * pooled_tp + pooled_fp + pooled_fn) == 0
                        ? 0.0
                        : 2.0 * static_cast<double>(pooled_tp) /
                              static_cast<double>(2 * pooled_tp + pooled_fp + pooled_fn);
  return report;
}

MetricsReport evaluate(const ModelParams& params, const PreparedData& data,
                       std::span<const int> test_days, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw InputError("evaluate: threshold must lie strictly inside (0, 1)");
  }
  const int categories = data.dims.categories;
  std::vector<CategoryConfusion> confusion(categories);
  for (int day : test_days) {
    DayOutput out = forward(day, data, params);
    const Eigen::MatrixXd targets = day_targets(*data.tensor, day);
    for (int r = 0; r < data.region_count(); ++r) {
      for (int c = 0; c < categories; ++c) {
        const bool predicted = out.probs(r, c) >= threshold;
        const bool actual = targets(r, c) >= 0.5;
        if (predicted && actual) ++confusion[c].tp;
        else if (predicted && !actual) ++confusion[c].fp;
        else if (!predicted && actual) ++confusion[c].fn;
        else ++confusion[c].tn;
      }
    }
  }
  return metrics_from_confusion(confusion, threshold);
}

void write_metrics_json(std::ostream& out, const MetricsReport& report,
                        std::span<const std::string> categories) {
  out << "{\n";
  out << "  \"threshold\": " << format_double(report.threshold) << ",\n";
  out << "  \"macro_f1\": " << format_double(report.macro_f1) << ",\n";
  out << "  \"micro_f1\": " << format_double(report.micro_f1) << ",\n";
  out << "  \"macro_recall\": " << format_double(report.macro_recall) << ",\n";
  out << "  \"micro_recall\": " << format_double(report.micro_recall) << ",\n";
  out << "  \"categories\": [\n";
  for (std::size_t c = 0; c < report.f1.size(); ++c) {
    out << "    {\"name\": \"" << (c < categories.size() ? categories[c] : std::to_string(c))
        << "\", \"f1\": " << format_double(report.f1[c])
        << ", \"recall\": " << format_double(report.recall[c])
        << ", \"zero_positive\": " << (report.zero_positive[c] ? "true" : "false") << "}"
        << (c + 1 < report.f1.size() ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
}

void write_metrics_table(std::ostream& out, const MetricsReport& report,
                         std::span<const std::string> categories) {
  out << "category                     f1     recall\n";
  out << "---------------------------------------------\n";
  char line[128];
  for (std::size_t c = 0; c < report.f1.size(); ++c) {
    const std::string name = c < categories.size() ? categories[c] : std::to_string(c);
    std::snprintf(line, sizeof line, "%-24s %8.3f %8.3f%s\n", name.c_str(), report.f1[c],
                  report.recall[c], report.zero_positive[c] ? "  (no positives)" : "");
    out << line;
  }
  out << "---------------------------------------------\n";
  std::snprintf(line, sizeof line, "macro                    %8.3f %8.3f\n", report.macro_f1,
                report.macro_recall);
  out << line;
  std::snprintf(line, sizeof line, "micro                    %8.3f %8.3f\n", report.micro_f1,
                report.micro_recall);
  out << line;
}

ExplainResult explain(const ModelParams& params, const PreparedData& data,
                      std::span<const int> test_days) {
  ExplainResult result;
  result.days.assign(test_days.begin(), test_days.end());
  result.beta.resize(static_cast<Eigen::Index>(test_days.size()), kFactorKindCount);
  for (std::size_t i = 0; i < test_days.size(); ++i) {
    DayOutput out = forward(test_days[i], data, params);
    result.beta.row(static_cast<Eigen::Index>(i)) = out.beta.transpose();
  }

  for (int k = 0; k < kFactorKindCount; ++k) {
    std::vector<double> column(test_days.size());
    for (std::size_t i = 0; i < test_days.size(); ++i) {
      column[i] = result.beta(static_cast<Eigen::Index>(i), k);
    }
    std::sort(column.begin(), column.end());
    FactorSummary s;
    if (!column.empty()) {
      s.min = column.front();
      s.max = column.back();
      s.mean = std::accumulate(column.begin(), column.end(), 0.0) /
               static_cast<double>(column.size());
      const std::size_t mid = column.size() / 2;
      s.median = (column.size() % 2 == 1) ? column[mid]
                                          : 0.5 * (column[mid - 1] + column[mid]);
    }
    result.summary[k] = s;
  }
  return result;
}

void write_beta_trace(std::ostream& out, const ExplainResult& result) {
  out << "day";
  for (FactorKind kind : kAllFactorKinds) out << ',' << factor_name(kind);
  out << '\n';
  for (std::size_t i = 0; i < result.days.size(); ++i) {
    out << result.days[i];
    for (int k = 0; k < kFactorKindCount; ++k) {
      out << ',' << format_double(result.beta(static_cast<Eigen::Index>(i), k));
    }
    out << '\n';
  }
}

void write_beta_summary(std::ostream& out, const ExplainResult& result) {
  out << "factor,mean,min,median,max\n";
  for (FactorKind kind : kAllFactorKinds) {
    const auto& s = result.summary[kind_index(kind)];
    out << factor_name(kind) << ',' << format_double(s.mean) << ',' << format_double(s.min)
        << ',' << format_double(s.median) << ',' << format_double(s.max) << '\n';
  }
}

MetricsReport lstm_only_ablation(const DatasetBundle& bundle, const Hin& hin,
                                 const std::array<SimilarityMatrix, kFactorKindCount>& sims,
                                 const NetworkConfig& network, const DatasetSplit& split,
                                 const TrainConfig& config, double threshold,
                                 TrainResult* result_out) {
  NetworkConfig ablated = network;
  ablated.metapath = false;
  PreparedData data = prepare_inputs(bundle, hin, sims, ablated);
  TrainResult result = train(data, split, config);
  MetricsReport report = evaluate(result.best_params, data, split.test_days, threshold);
  if (result_out) *result_out = std::move(result);
  return report;
}

}  // namespace pathcast

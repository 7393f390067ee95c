// Python bindings for the main pipeline operations: the path-count
// similarity measures, window encoding, split arithmetic, metrics, and a
// one-call synthetic end-to-end experiment for smoke testing.

#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include "pathcast/common.hpp"
#include "pathcast/feature_model.hpp"
#include "pathcast/geo.hpp"
#include "pathcast/metapath_network.hpp"
#include "pathcast/similarity.hpp"
#include "pathcast/synthetic.hpp"
#include "pathcast/temporal_encoder.hpp"
#include "pathcast/training.hpp"

namespace py = pybind11;
using namespace pathcast;

namespace {

KindTaxonomy taxonomy_from_sizes(const std::vector<int>& subcategory_sizes) {
  KindTaxonomy kt;
  for (std::size_t s = 0; s < subcategory_sizes.size(); ++s) {
    Subcategory sub;
    sub.name = "sub" + std::to_string(s);
    for (int f = 0; f < subcategory_sizes[s]; ++f) {
      sub.features.push_back("f" + std::to_string(s) + "_" + std::to_string(f));
    }
    kt.subcategories.push_back(std::move(sub));
  }
  return kt;
}

py::dict metrics_to_dict(const MetricsReport& report) {
  py::dict d;
  d["macro_f1"] = report.macro_f1;
  d["micro_f1"] = report.micro_f1;
  d["macro_recall"] = report.macro_recall;
  d["micro_recall"] = report.micro_recall;
  d["f1"] = report.f1;
  d["recall"] = report.recall;
  d["threshold"] = report.threshold;
  return d;
}

}  // namespace

PYBIND11_MODULE(pathcast_py, m) {
  m.doc() = "meta-path guided crime occurrence forecasting (core operations)";

  m.def("path_count", &path_count, py::arg("counts_i"), py::arg("counts_j"),
        "Number of length-2 path instances between two regions (inner product of counts).");
  m.def("classic_pathsim", &classic_pathsim, py::arg("counts_i"), py::arg("counts_j"));
  m.def(
      "dist_aware_pathsim",
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b,
         const std::vector<int>& subcategory_sizes) {
        return dist_aware_pathsim(a, b, taxonomy_from_sizes(subcategory_sizes));
      },
      py::arg("counts_i"), py::arg("counts_j"), py::arg("subcategory_sizes"),
      "Subcategory-weighted PathSim; subcategory_sizes partitions the vectors.");

  m.def("haversine_km", &haversine_km, py::arg("lat1"), py::arg("lon1"), py::arg("lat2"),
        py::arg("lon2"));

  m.def(
      "bce_loss",
      [](const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
        return bce_loss(predictions, targets);
      },
      py::arg("predictions"), py::arg("targets"));

  m.def(
      "encode_window",
      [](const Eigen::MatrixXd& series, int state_dim, int layers, std::uint64_t seed,
         bool log1p_inputs) {
        std::mt19937_64 rng(seed);
        LstmParams params =
            LstmParams::init(static_cast<int>(series.cols()), state_dim, layers, rng);
        return encode_window(series, params, log1p_inputs);
      },
      py::arg("series"), py::arg("state_dim") = 16, py::arg("layers") = 1, py::arg("seed") = 7,
      py::arg("log1p_inputs") = true,
      "Encodes a (days x categories) count window with a freshly seeded LSTM.");

  m.def(
      "split_counts",
      [](int total_days, int window, int min_history) {
        StudyPeriod period{parse_date("2015-01-01"),
                           add_days(parse_date("2015-01-01"), total_days - 1)};
        CrimeTensor tensor(period, {"R0"}, {"c0"});
        SplitOptions options;
        options.min_history = min_history;
        DatasetSplit split = split_dataset(tensor, window, options);
        return py::make_tuple(split.train_days.size(), split.val_days.size(),
                              split.test_days.size());
      },
      py::arg("total_days"), py::arg("window") = 28, py::arg("min_history") = 28,
      "Chronological (train, val, test) prediction-day counts for a period.");

  m.def(
      "metrics_from_confusion",
      [](const std::vector<std::tuple<long, long, long, long>>& confusion, double threshold) {
        std::vector<CategoryConfusion> cs;
        for (const auto& [tp, fp, fn, tn] : confusion) cs.push_back({tp, fp, fn, tn});
        return metrics_to_dict(metrics_from_confusion(cs, threshold));
      },
      py::arg("confusion"), py::arg("threshold") = 0.5,
      "Macro/micro F1 and recall from per-category (tp, fp, fn, tn) tuples.");

  m.def(
      "run_synthetic_experiment",
      [](std::uint64_t seed, int regions, int days, int categories, int epochs, int window,
         double learning_rate) {
        SyntheticConfig synth;
        synth.seed = seed;
        synth.regions = regions;
        synth.days = days;
        synth.categories = categories;
        SyntheticData data = generate_synthetic(synth);

        NetworkConfig network;
        network.window = window;
        network.state_dim = 16;
        network.embed_dim = 16;
        network.attention_dim = 16;
        network.lstm_layers = 1;
        network.top_k = 0;
        PreparedData prepared = prepare_inputs(data.bundle, data.hin, data.sims, network);

        SplitOptions split_options;
        split_options.min_history = window;
        DatasetSplit split = split_dataset(data.bundle.tensor, window, split_options);

        TrainConfig trainer;
        trainer.seed = seed;
        trainer.epochs = epochs;
        trainer.learning_rate = learning_rate;
        TrainResult result = train(prepared, split, trainer);

        MetricsReport report = evaluate(result.best_params, prepared, split.test_days);
        ExplainResult attention = explain(result.best_params, prepared, split.test_days);

        py::dict out = metrics_to_dict(report);
        py::dict beta;
        for (FactorKind kind : kAllFactorKinds) {
          beta[py::str(std::string(factor_name(kind)))] =
              attention.summary[kind_index(kind)].mean;
        }
        out["mean_beta"] = beta;
        out["epochs_run"] = result.log.size();
        out["first_train_loss"] = result.log.empty() ? 0.0 : result.log.front().train_loss;
        out["last_train_loss"] = result.log.empty() ? 0.0 : result.log.back().train_loss;
        return out;
      },
      py::arg("seed") = 7, py::arg("regions") = 12, py::arg("days") = 80,
      py::arg("categories") = 3, py::arg("epochs") = 3, py::arg("window") = 7,
      py::arg("learning_rate") = 1e-2,
      "Generates a seeded synthetic dataset, trains briefly, and returns metrics plus "
      "per-factor mean attention weights.");
}

#pragma once

// Shared fixtures and independent oracle implementations for the test
// suites. Oracles here deliberately avoid the library's compute paths:
// plain loops and <cmath> only, so they stay meaningful as cross-checks.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pathcast/feature_model.hpp"
#include "pathcast/ingest.hpp"
#include "pathcast/metapath_network.hpp"
#include "pathcast/temporal_encoder.hpp"

namespace testsupport {

using namespace pathcast;

// ---------------------------------------------------------------------------
// Worked-example fixture: three regions, urbanization counts split into
// educational {elementary, high} and recreational {zoo, pool}.

inline KindTaxonomy toy_urbanization_taxonomy() {
  KindTaxonomy kt;
  kt.subcategories = {{"educational", {"elementary_school", "high_school"}},
                      {"recreational", {"zoo", "pool"}}};
  return kt;
}

inline std::vector<Eigen::VectorXd> toy_urbanization_counts() {
  std::vector<Eigen::VectorXd> counts(3, Eigen::VectorXd(4));
  counts[0] << 2, 2, 5, 5;
  counts[1] << 2, 2, 0, 10;
  counts[2] << 0, 0, 5, 5;
  return counts;
}

// ---------------------------------------------------------------------------
// Independent numeric oracles.

inline double oracle_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline Eigen::VectorXd oracle_softmax(const Eigen::VectorXd& scores) {
  Eigen::VectorXd out(scores.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) total += std::exp(scores[i]);
  for (Eigen::Index i = 0; i < scores.size(); ++i) out[i] = std::exp(scores[i]) / total;
  return out;
}

/// Loop-based LSTM step following the six update equations directly.
inline void oracle_lstm_cell(const std::vector<double>& x, const std::vector<double>& h_prev,
                             const std::vector<double>& c_prev, const LstmLayerParams& p,
                             std::vector<double>& h_out, std::vector<double>& c_out) {
  const int d = p.state_dim();
  const int in = p.input_dim();
  h_out.assign(d, 0.0);
  c_out.assign(d, 0.0);
  for (int r = 0; r < d; ++r) {
    double zf = p.b_f[r], zi = p.b_i[r], zc = p.b_c[r], zo = p.b_o[r];
    for (int c = 0; c < in; ++c) {
      zf += p.w_xf(r, c) * x[c];
      zi += p.w_xi(r, c) * x[c];
      zc += p.w_xc(r, c) * x[c];
      zo += p.w_xo(r, c) * x[c];
    }
    for (int c = 0; c < d; ++c) {
      zf += p.w_hf(r, c) * h_prev[c];
      zi += p.w_hi(r, c) * h_prev[c];
      zc += p.w_hc(r, c) * h_prev[c];
      zo += p.w_ho(r, c) * h_prev[c];
    }
    const double f = oracle_sigmoid(zf);
    const double i = oracle_sigmoid(zi);
    const double c_bar = std::tanh(zc);
    const double o = oracle_sigmoid(zo);
    c_out[r] = f * c_prev[r] + i * c_bar;
    h_out[r] = o * std::tanh(c_out[r]);
  }
}

/// Unrolls the stacked LSTM over a window with the loop-based cell.
inline std::vector<double> oracle_encode_window(const Eigen::MatrixXd& series,
                                                const LstmParams& params, bool log1p_inputs) {
  const int layers = static_cast<int>(params.layers.size());
  std::vector<std::vector<double>> h(layers), c(layers);
  for (int l = 0; l < layers; ++l) {
    h[l].assign(params.layers[l].state_dim(), 0.0);
    c[l].assign(params.layers[l].state_dim(), 0.0);
  }
  for (int t = 0; t < series.rows(); ++t) {
    std::vector<double> x(series.cols());
    for (int j = 0; j < series.cols(); ++j) {
      x[j] = log1p_inputs ? std::log1p(series(t, j)) : series(t, j);
    }
    for (int l = 0; l < layers; ++l) {
      std::vector<double> h_next, c_next;
      oracle_lstm_cell(x, h[l], c[l], params.layers[l], h_next, c_next);
      h[l] = h_next;
      c[l] = c_next;
      x = h[l];
    }
  }
  return h.back();
}

// ---------------------------------------------------------------------------
// Tiny hand-assembled model inputs for network and gradient tests.

struct TinyData {
  std::shared_ptr<CrimeTensor> tensor;
  PreparedData data;
};

/// Builds a PreparedData directly: random count tensor, random per-kind
/// feature matrices, and weighted instance lists for `active_kinds` only
/// (self instance with weight 1 plus every other region with a weight in
/// (0, 1)). The remaining kinds stay empty, exercising the zero-vector
/// fallback.
inline TinyData make_tiny_data(int regions, int categories, int days, int window, int state_dim,
                               int embed_dim, int attention_dim, int lstm_layers,
                               const std::vector<FactorKind>& active_kinds, int feature_dim,
                               std::mt19937_64& rng) {
  TinyData tiny;
  StudyPeriod period{parse_date("2015-01-01"), add_days(parse_date("2015-01-01"), days - 1)};
  std::vector<std::string> region_ids, category_names;
  for (int r = 0; r < regions; ++r) region_ids.push_back("R" + std::to_string(r));
  for (int c = 0; c < categories; ++c) category_names.push_back("cat" + std::to_string(c));
  tiny.tensor = std::make_shared<CrimeTensor>(period, region_ids, category_names);

  std::uniform_int_distribution<int> count_dist(0, 3);
  for (int t = 0; t < days; ++t) {
    for (int r = 0; r < regions; ++r) {
      for (int c = 0; c < categories; ++c) {
        const int count = count_dist(rng);
        if (count > 0) tiny.tensor->add(t, r, c, count);
      }
    }
  }

  PreparedData& data = tiny.data;
  data.tensor = tiny.tensor.get();
  data.dims.categories = categories;
  data.dims.state_dim = state_dim;
  data.dims.embed_dim = embed_dim;
  data.dims.attention_dim = attention_dim;
  data.dims.lstm_layers = lstm_layers;
  data.dims.window = window;
  data.dims.metapath = true;
  data.config.window = window;
  data.config.log1p_inputs = true;

  std::uniform_real_distribution<double> feature_dist(0.0, 1.0);
  std::uniform_real_distribution<double> weight_dist(0.1, 1.0);
  for (int k = 0; k < kFactorKindCount; ++k) {
    data.dims.feature_dims[k] = feature_dim;
    Eigen::MatrixXd features(feature_dim, regions);
    for (int f = 0; f < feature_dim; ++f) {
      for (int r = 0; r < regions; ++r) features(f, r) = feature_dist(rng);
    }
    data.features[k] = features;
    data.instances[k].assign(regions, {});
  }
  for (FactorKind kind : active_kinds) {
    const int k = kind_index(kind);
    for (int r = 0; r < regions; ++r) {
      std::vector<WeightedInstance> list = {{r, 1.0}};
      for (int peer = 0; peer < regions; ++peer) {
        if (peer != r) list.push_back({peer, weight_dist(rng)});
      }
      data.instances[k][r] = list;
    }
  }
  return tiny;
}

inline Eigen::MatrixXd targets_for_day(const CrimeTensor& tensor, int day) {
  Eigen::MatrixXd targets(tensor.region_count(), tensor.category_count());
  for (int r = 0; r < tensor.region_count(); ++r) {
    targets.row(r) = tensor.occurrence_row(day + 1, r).transpose();
  }
  return targets;
}

// ---------------------------------------------------------------------------
// Central finite-difference gradient comparison.

struct GradientCheckEntry {
  std::string name;
  double relative_error;
};

/// For each parameter tensor, compares the accumulated analytic gradient
/// against central finite differences of `loss` (step `h`), reporting the
/// L2-relative error per tensor. `loss` must be a pure function of the
/// current parameter values.
template <class LossFn>
std::vector<GradientCheckEntry> finite_difference_check(ModelParams& params,
                                                        ModelGrads& analytic, LossFn&& loss,
                                                        double h) {
  std::vector<GradientCheckEntry> report;
  auto param_refs = tensor_refs(params);
  auto grad_refs = tensor_refs(analytic);
  for (std::size_t i = 0; i < param_refs.size(); ++i) {
    double diff_sq = 0.0, fd_sq = 0.0, an_sq = 0.0;
    for (Eigen::Index j = 0; j < param_refs[i].size(); ++j) {
      const double saved = param_refs[i].data[j];
      param_refs[i].data[j] = saved + h;
      const double plus = loss();
      param_refs[i].data[j] = saved - h;
      const double minus = loss();
      param_refs[i].data[j] = saved;
      const double fd = (plus - minus) / (2.0 * h);
      const double an = grad_refs[i].data[j];
      diff_sq += (fd - an) * (fd - an);
      fd_sq += fd * fd;
      an_sq += an * an;
    }
    const double denom = std::max({std::sqrt(fd_sq), std::sqrt(an_sq), 1e-12});
    report.push_back({param_refs[i].name, std::sqrt(diff_sq) / denom});
  }
  return report;
}

}  // namespace testsupport

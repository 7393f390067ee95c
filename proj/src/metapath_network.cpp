#include "pathcast/metapath_network.hpp"

#include <algorithm>
#include <cmath>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

inline double sigmoid_scalar(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  const double peak = scores.maxCoeff();
  Eigen::VectorXd exps = (scores.array() - peak).exp();
  return exps / exps.sum();
}

}  // namespace

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams params;
  params.dims = dims;
  params.lstm = LstmParams::init(dims.categories, dims.state_dim, dims.lstm_layers, rng);

  if (dims.metapath) {
    const double proj_bound = 1.0 / std::sqrt(static_cast<double>(dims.embed_dim));
    for (int k = 0; k < kFactorKindCount; ++k) {
      params.instance_proj[k] =
          uniform_matrix(dims.embed_dim, dims.instance_input(k), proj_bound, rng);
    }
    const double attn_bound = 1.0 / std::sqrt(static_cast<double>(dims.attention_dim));
    params.attn_m = uniform_matrix(dims.attention_dim, dims.embed_dim, attn_bound, rng);
    params.attn_b = Eigen::VectorXd::Zero(dims.attention_dim);
    params.attn_q = uniform_matrix(dims.attention_dim, 1, attn_bound, rng);
  }
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(dims.head_input()));
  params.head_w = uniform_matrix(dims.categories, dims.head_input(), head_bound, rng);
  params.head_b = Eigen::VectorXd::Zero(dims.categories);

  params.quantize_storage();
  return params;
}

void ModelParams::quantize_storage() {
  for (auto& ref : tensor_refs(*this)) {
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      ref.data[i] = static_cast<double>(static_cast<float>(ref.data[i]));
    }
  }
}

ModelGrads ModelGrads::zero_like(const ModelParams& params) {
  ModelGrads grads;
  grads.lstm = LstmGrads::zero_like(params.lstm);
  for (int k = 0; k < kFactorKindCount; ++k) {
    grads.instance_proj[k] = Eigen::MatrixXd::Zero(params.instance_proj[k].rows(),
                                                   params.instance_proj[k].cols());
  }
  grads.attn_m = Eigen::MatrixXd::Zero(params.attn_m.rows(), params.attn_m.cols());
  grads.attn_b = Eigen::VectorXd::Zero(params.attn_b.size());
  grads.attn_q = Eigen::VectorXd::Zero(params.attn_q.size());
  grads.head_w = Eigen::MatrixXd::Zero(params.head_w.rows(), params.head_w.cols());
  grads.head_b = Eigen::VectorXd::Zero(params.head_b.size());
  return grads;
}

void ModelGrads::setZero() {
  for (auto& layer : lstm.layers) {
    layer.w_xf.setZero();
    layer.w_xi.setZero();
    layer.w_xc.setZero();
    layer.w_xo.setZero();
    layer.w_hf.setZero();
    layer.w_hi.setZero();
    layer.w_hc.setZero();
    layer.w_ho.setZero();
    layer.b_f.setZero();
    layer.b_i.setZero();
    layer.b_c.setZero();
    layer.b_o.setZero();
  }
  for (auto& proj : instance_proj) proj.setZero();
  attn_m.setZero();
  attn_b.setZero();
  attn_q.setZero();
  head_w.setZero();
  head_b.setZero();
}

namespace {

template <class Model>
std::vector<TensorRef> tensor_refs_impl(Model& model) {
  std::vector<TensorRef> refs;
  auto add_matrix = [&](const std::string& name, Eigen::MatrixXd& m) {
    if (m.size() > 0) refs.push_back({name, m.data(), m.rows(), m.cols()});
  };
  auto add_vector = [&](const std::string& name, Eigen::VectorXd& v) {
    if (v.size() > 0) refs.push_back({name, v.data(), v.size(), 1});
  };
  for (std::size_t l = 0; l < model.lstm.layers.size(); ++l) {
    auto& layer = model.lstm.layers[l];
    const std::string prefix = "lstm.l" + std::to_string(l) + ".";
    add_matrix(prefix + "w_xf", layer.w_xf);
    add_matrix(prefix + "w_xi", layer.w_xi);
    add_matrix(prefix + "w_xc", layer.w_xc);
    add_matrix(prefix + "w_xo", layer.w_xo);
    add_matrix(prefix + "w_hf", layer.w_hf);
    add_matrix(prefix + "w_hi", layer.w_hi);
    add_matrix(prefix + "w_hc", layer.w_hc);
    add_matrix(prefix + "w_ho", layer.w_ho);
    add_vector(prefix + "b_f", layer.b_f);
    add_vector(prefix + "b_i", layer.b_i);
    add_vector(prefix + "b_c", layer.b_c);
    add_vector(prefix + "b_o", layer.b_o);
  }
  for (int k = 0; k < kFactorKindCount; ++k) {
    add_matrix("proj." + std::string(metapath_name(static_cast<FactorKind>(k))),
               model.instance_proj[k]);
  }
  add_matrix("attn.m", model.attn_m);
  add_vector("attn.b", model.attn_b);
  add_vector("attn.q", model.attn_q);
  add_matrix("head.w", model.head_w);
  add_vector("head.b", model.head_b);
  return refs;
}

}  // namespace

std::vector<TensorRef> tensor_refs(ModelParams& params) { return tensor_refs_impl(params); }
std::vector<TensorRef> tensor_refs(ModelGrads& grads) { return tensor_refs_impl(grads); }

Eigen::VectorXd encode_instance(const Eigen::VectorXd& h_i, const Eigen::VectorXd& m_i,
                                const Eigen::VectorXd& m_j, const Eigen::VectorXd& h_j,
                                const Eigen::MatrixXd& projection) {
  const Eigen::Index d = h_i.size() + m_i.size() + m_j.size() + h_j.size();
  if (projection.cols() != d) {
    throw InputError("encode_instance: projection width " + std::to_string(projection.cols()) +
                     " != concatenated input size " + std::to_string(d));
  }
  Eigen::VectorXd x(d);
  x << h_i, m_i, m_j, h_j;
  return projection * x;
}

Eigen::VectorXd aggregate_intra(const std::vector<WeightedInstance>& instances, int region,
                                const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& features,
                                const Eigen::MatrixXd& projection) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(projection.rows());
  if (instances.empty()) return out;
  for (const auto& instance : instances) {
    out += instance.weight * encode_instance(hidden.col(region), features.col(region),
                                             features.col(instance.peer),
                                             hidden.col(instance.peer), projection);
  }
  return out;
}

Eigen::VectorXd type_summary(const Eigen::MatrixXd& type_embed, const Eigen::MatrixXd& attn_m,
                             const Eigen::VectorXd& attn_b) {
  const Eigen::Index n = type_embed.cols();
  if (n == 0) throw InputError("type_summary: at least one region is required");
  Eigen::MatrixXd transformed =
      ((attn_m * type_embed).colwise() + attn_b).array().tanh();
  return transformed.rowwise().sum() / static_cast<double>(n);
}

FusionResult attention_fuse(const std::array<Eigen::VectorXd, kFactorKindCount>& summaries,
                            const std::array<Eigen::MatrixXd, kFactorKindCount>& type_embed,
                            const Eigen::VectorXd& attn_q) {
  Eigen::VectorXd scores(kFactorKindCount);
  for (int k = 0; k < kFactorKindCount; ++k) scores[k] = attn_q.dot(summaries[k]);
  if (!scores.allFinite()) throw std::runtime_error("attention_fuse: non-finite scores");

  FusionResult result;
  result.beta = softmax(scores);
  result.fused = Eigen::MatrixXd::Zero(type_embed[0].rows(), type_embed[0].cols());
  for (int k = 0; k < kFactorKindCount; ++k) {
    result.fused += result.beta[k] * type_embed[k];
  }
  return result;
}

Eigen::VectorXd predict_head(const Eigen::VectorXd& fused, const Eigen::MatrixXd& head_w,
                             const Eigen::VectorXd& head_b) {
  if (head_w.cols() != fused.size()) {
    throw InputError("predict_head: weight/input shape mismatch");
  }
  return (head_w * fused + head_b).unaryExpr([](double z) { return sigmoid_scalar(z); });
}

PreparedData prepare_inputs(const DatasetBundle& bundle, const Hin& hin,
                            const std::array<SimilarityMatrix, kFactorKindCount>& sims,
                            const NetworkConfig& config) {
  PreparedData data;
  data.tensor = &bundle.tensor;
  data.config = config;

  const int n = static_cast<int>(bundle.profiles.size());
  ModelDims dims;
  dims.categories = bundle.tensor.category_count();
  dims.state_dim = config.state_dim;
  dims.embed_dim = config.embed_dim;
  dims.attention_dim = config.attention_dim;
  dims.lstm_layers = config.lstm_layers;
  dims.window = config.window;
  dims.metapath = config.metapath;

  for (FactorKind kind : kAllFactorKinds) {
    const int k = kind_index(kind);
    const int f = static_cast<int>(bundle.taxonomy.kind(kind).feature_count());
    dims.feature_dims[k] = f;
    Eigen::MatrixXd features(f, n);
    for (int r = 0; r < n; ++r) {
      Eigen::VectorXd vec = bundle.profiles[r].vector(kind);
      if (vec.size() != f) {
        throw InputError(bundle.profiles[r].region_id + ": profile/taxonomy mismatch for " +
                         std::string(factor_name(kind)));
      }
      switch (config.instance_feature_scaling) {
        case FeatureScaling::kNone:
          break;
        case FeatureScaling::kL1: {
          const double total = vec.sum();
          if (total > 0.0) vec /= total;
          break;
        }
        case FeatureScaling::kLog1p:
          vec = vec.array().unaryExpr([](double v) { return std::log1p(v); });
          break;
      }
      features.col(r) = vec;
    }
    data.features[k] = std::move(features);

    auto& kind_instances = data.instances[k];
    kind_instances.resize(n);
    const auto& sim = sims[k].values;
    for (int r = 0; r < n; ++r) {
      std::vector<WeightedInstance> list;
      for (const auto& instance : hin.enumerate_instances(kind, r, config.include_self)) {
        const double weight =
            (instance.target == r) ? 1.0 : sim(instance.source, instance.target);
        list.push_back({instance.target, weight});
      }
      if (config.top_k > 0 && static_cast<int>(list.size()) > config.top_k) {
        std::stable_sort(list.begin(), list.end(),
                         [](const WeightedInstance& a, const WeightedInstance& b) {
                           if (a.weight != b.weight) return a.weight > b.weight;
                           return a.peer < b.peer;
                         });
        list.resize(config.top_k);
      }
      kind_instances[r] = std::move(list);
    }
  }
  data.dims = dims;
  return data;
}

namespace {

struct ForwardCache {
  Eigen::MatrixXd hidden;                                    // d_s x n
  std::vector<LstmTrace> traces;                             // per region
  std::array<Eigen::MatrixXd, kFactorKindCount> type_embed;  // d_e x n
  std::array<Eigen::MatrixXd, kFactorKindCount> tanh_v;      // d_a x n
  std::array<Eigen::VectorXd, kFactorKindCount> summaries;   // d_a
  // Factored aggregation terms per kind (see run_forward).
  std::array<Eigen::VectorXd, kFactorKindCount> weight_sum;    // n
  std::array<Eigen::MatrixXd, kFactorKindCount> peer_feature;  // f x n
  std::array<Eigen::MatrixXd, kFactorKindCount> peer_hidden;   // d_s x n
  Eigen::MatrixXd fused;  // head input x n
  Eigen::VectorXd beta;
  Eigen::MatrixXd probs;  // n x C
};

/// Shared forward pass. `keep_traces` keeps the per-region LSTM activations
/// alive for the backward sweep.
void run_forward(int day, const PreparedData& data, const ModelParams& params,
                 ForwardCache& cache, bool keep_traces) {
  const ModelDims& dims = data.dims;
  const int n = data.region_count();
  if (day + 1 < dims.window) {
    throw InputError("forward: day " + std::to_string(day) + " has fewer than " +
                     std::to_string(dims.window) + " observed days");
  }

  cache.hidden.resize(dims.state_dim, n);
  cache.traces.assign(keep_traces ? n : 0, LstmTrace{});
  for (int r = 0; r < n; ++r) {
    const Eigen::MatrixXd window = data.tensor->window(r, day, dims.window);
    if (keep_traces) {
      cache.hidden.col(r) =
          encode_window_traced(window, params.lstm, data.config.log1p_inputs, cache.traces[r]);
    } else {
      cache.hidden.col(r) = encode_window(window, params.lstm, data.config.log1p_inputs);
    }
  }

  if (!dims.metapath) {
    cache.fused = cache.hidden;
    cache.beta = Eigen::VectorXd::Zero(kFactorKindCount);
  } else {
    for (int k = 0; k < kFactorKindCount; ++k) {
      const Eigen::MatrixXd& proj = params.instance_proj[k];
      const Eigen::MatrixXd& features = data.features[k];
      const int f = dims.feature_dims[k];
      // W_p [h_i; m_i; m_j; h_j] summed over weighted instances factors as
      //   S_i (W1 h_i + W2 m_i) + W3 (sum_j s m_j) + W4 (sum_j s h_j).
      const auto w1 = proj.middleCols(0, dims.state_dim);
      const auto w2 = proj.middleCols(dims.state_dim, f);
      const auto w3 = proj.middleCols(dims.state_dim + f, f);
      const auto w4 = proj.middleCols(dims.state_dim + 2 * f, dims.state_dim);

      Eigen::VectorXd weight_sum = Eigen::VectorXd::Zero(n);
      Eigen::MatrixXd peer_feature = Eigen::MatrixXd::Zero(f, n);
      Eigen::MatrixXd peer_hidden = Eigen::MatrixXd::Zero(dims.state_dim, n);
      for (int r = 0; r < n; ++r) {
        for (const auto& instance : data.instances[k][r]) {
          weight_sum[r] += instance.weight;
          peer_feature.col(r) += instance.weight * features.col(instance.peer);
          peer_hidden.col(r) += instance.weight * cache.hidden.col(instance.peer);
        }
      }
      Eigen::MatrixXd embed = (w1 * cache.hidden + w2 * features) * weight_sum.asDiagonal();
      embed.noalias() += w3 * peer_feature;
      embed.noalias() += w4 * peer_hidden;

      cache.type_embed[k] = std::move(embed);
      cache.weight_sum[k] = std::move(weight_sum);
      cache.peer_feature[k] = std::move(peer_feature);
      cache.peer_hidden[k] = std::move(peer_hidden);

      cache.tanh_v[k] =
          ((params.attn_m * cache.type_embed[k]).colwise() + params.attn_b).array().tanh();
      cache.summaries[k] = cache.tanh_v[k].rowwise().sum() / static_cast<double>(n);
    }

    FusionResult fusion = attention_fuse(cache.summaries, cache.type_embed, params.attn_q);
    cache.fused = std::move(fusion.fused);
    cache.beta = std::move(fusion.beta);
  }

  cache.probs.resize(n, dims.categories);
  for (int r = 0; r < n; ++r) {
    cache.probs.row(r) =
        predict_head(cache.fused.col(r), params.head_w, params.head_b).transpose();
  }
}

}  // namespace

DayOutput forward(int day, const PreparedData& data, const ModelParams& params) {
  ForwardCache cache;
  run_forward(day, data, params, cache, /*keep_traces=*/false);
  return {std::move(cache.probs), std::move(cache.beta)};
}

double bce_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw InputError("bce_loss: prediction/target shape mismatch");
  }
  double loss = 0.0;
  for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
    for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
      const double p = std::clamp(predictions(r, c), kProbabilityClamp, 1.0 - kProbabilityClamp);
      const double y = targets(r, c);
      loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
  }
  return loss;
}

double forward_backward(int day, const PreparedData& data, const ModelParams& params,
                        const Eigen::MatrixXd& targets, ModelGrads& grads, DayOutput* output) {
  const ModelDims& dims = data.dims;
  const int n = data.region_count();
  if (targets.rows() != n || targets.cols() != dims.categories) {
    throw InputError("forward_backward: target shape mismatch");
  }

  ForwardCache cache;
  run_forward(day, data, params, cache, /*keep_traces=*/true);
  const double loss = bce_loss(cache.probs, targets);

  // d(loss)/d(head pre-activation): p - y while the clamp is inactive.
  Eigen::MatrixXd dz(n, dims.categories);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < dims.categories; ++c) {
      const double p = cache.probs(r, c);
      dz(r, c) =
          (p <= kProbabilityClamp || p >= 1.0 - kProbabilityClamp) ? 0.0 : p - targets(r, c);
    }
  }

  // Head.
  grads.head_w.noalias() += dz.transpose() * cache.fused.transpose();
  grads.head_b += dz.colwise().sum().transpose();
  Eigen::MatrixXd d_fused = params.head_w.transpose() * dz.transpose();  // head_input x n

  Eigen::MatrixXd d_hidden = Eigen::MatrixXd::Zero(dims.state_dim, n);

  if (!dims.metapath) {
    d_hidden = d_fused;
  } else {
    // Attention blend: fused = sum_k beta_k T_k.
    Eigen::VectorXd d_beta(kFactorKindCount);
    std::array<Eigen::MatrixXd, kFactorKindCount> d_type;
    for (int k = 0; k < kFactorKindCount; ++k) {
      d_beta[k] = (d_fused.array() * cache.type_embed[k].array()).sum();
      d_type[k] = cache.beta[k] * d_fused;
    }
    // Softmax backward.
    const double mixed = cache.beta.dot(d_beta);
    Eigen::VectorXd d_score =
        cache.beta.array() * (d_beta.array() - mixed);

    // Scores e_k = q . u_k.
    for (int k = 0; k < kFactorKindCount; ++k) {
      grads.attn_q += d_score[k] * cache.summaries[k];
      // u_k = mean_r tanh(M h_r + b): spread the gradient over regions.
      Eigen::VectorXd d_summary = d_score[k] * params.attn_q / static_cast<double>(n);
      Eigen::MatrixXd d_pre =
          (1.0 - cache.tanh_v[k].array().square()).matrix().array().colwise() *
          d_summary.array();
      grads.attn_m.noalias() += d_pre * cache.type_embed[k].transpose();
      grads.attn_b += d_pre.rowwise().sum();
      d_type[k].noalias() += params.attn_m.transpose() * d_pre;
    }

    // Aggregation: T_k.col(r) = S_r (W1 h_r + W2 m_r) + W3 a_r + W4 g_r.
    for (int k = 0; k < kFactorKindCount; ++k) {
      const Eigen::MatrixXd& proj = params.instance_proj[k];
      const int f = dims.feature_dims[k];
      const auto w1 = proj.middleCols(0, dims.state_dim);
      const auto w4 = proj.middleCols(dims.state_dim + 2 * f, dims.state_dim);

      const Eigen::MatrixXd scaled_d = d_type[k] * cache.weight_sum[k].asDiagonal();
      grads.instance_proj[k].middleCols(0, dims.state_dim).noalias() +=
          scaled_d * cache.hidden.transpose();
      grads.instance_proj[k].middleCols(dims.state_dim, f).noalias() +=
          scaled_d * data.features[k].transpose();
      grads.instance_proj[k].middleCols(dims.state_dim + f, f).noalias() +=
          d_type[k] * cache.peer_feature[k].transpose();
      grads.instance_proj[k].middleCols(dims.state_dim + 2 * f, dims.state_dim).noalias() +=
          d_type[k] * cache.peer_hidden[k].transpose();

      d_hidden.noalias() += w1.transpose() * scaled_d;
      const Eigen::MatrixXd back = w4.transpose() * d_type[k];  // d_s x n
      for (int r = 0; r < n; ++r) {
        for (const auto& instance : data.instances[k][r]) {
          d_hidden.col(instance.peer) += instance.weight * back.col(r);
        }
      }
    }
  }

  for (int r = 0; r < n; ++r) {
    lstm_backward(cache.traces[r], params.lstm, d_hidden.col(r), grads.lstm);
  }

  if (output) {
    output->probs = std::move(cache.probs);
    output->beta = std::move(cache.beta);
  }
  return loss;
}

}  // namespace pathcast

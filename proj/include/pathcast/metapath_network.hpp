#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pathcast/feature_model.hpp"
#include "pathcast/hin.hpp"
#include "pathcast/ingest.hpp"
#include "pathcast/similarity.hpp"
#include "pathcast/temporal_encoder.hpp"

namespace pathcast {

enum class FeatureScaling { kNone, kL1, kLog1p };

struct NetworkConfig {
  int window = 28;          // M, days of history per embedding
  int state_dim = 128;      // d_s
  int embed_dim = 64;       // d_e
  int attention_dim = 128;  // d_a
  int lstm_layers = 2;
  /// Per (region, type): keep only the top-K instances by similarity.
  /// 0 disables the cap (exact sum).
  int top_k = 20;
  bool log1p_inputs = true;
  FeatureScaling instance_feature_scaling = FeatureScaling::kL1;
  bool include_self = true;
  bool metapath = true;  // false = temporal embedding straight into the head
};

struct ModelDims {
  int categories = 0;  // C, also the LSTM input width
  int state_dim = 0;
  int embed_dim = 0;
  int attention_dim = 0;
  int lstm_layers = 1;
  int window = 1;
  std::array<int, kFactorKindCount> feature_dims = {};
  bool metapath = true;

  int head_input() const { return metapath ? embed_dim : state_dim; }
  /// Encoder input width for one kind: [h_i; m_i; m_j; h_j].
  int instance_input(int kind) const { return 2 * state_dim + 2 * feature_dims[kind]; }
};

struct ModelParams {
  ModelDims dims;
  LstmParams lstm;
  std::array<Eigen::MatrixXd, kFactorKindCount> instance_proj;  // d_e x d'(kind)
  Eigen::MatrixXd attn_m;  // d_a x d_e
  Eigen::VectorXd attn_b;  // d_a
  Eigen::VectorXd attn_q;  // d_a
  Eigen::MatrixXd head_w;  // C x head_input
  Eigen::VectorXd head_b;  // C

  static ModelParams init(const ModelDims& dims, std::uint64_t seed);
  /// Rounds every parameter to its nearest float32 value, so checkpoints
  /// (stored as f32) reproduce forward outputs bit-exactly.
  void quantize_storage();
};

struct ModelGrads {
  LstmGrads lstm;
  std::array<Eigen::MatrixXd, kFactorKindCount> instance_proj;
  Eigen::MatrixXd attn_m;
  Eigen::VectorXd attn_b;
  Eigen::VectorXd attn_q;
  Eigen::MatrixXd head_w;
  Eigen::VectorXd head_b;

  static ModelGrads zero_like(const ModelParams& params);
  void setZero();
};

/// Flat view of one named parameter (vectors are n x 1).
struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

/// Deterministic, identically ordered tensor lists for params and grads —
/// the backbone of the optimizer, checkpointing, and gradient checks.
std::vector<TensorRef> tensor_refs(ModelParams& params);
std::vector<TensorRef> tensor_refs(ModelGrads& grads);

/// Eq.-style instance embedding: projection * [h_i; m_i; m_j; h_j].
/// Linear, no activation.
Eigen::VectorXd encode_instance(const Eigen::VectorXd& h_i, const Eigen::VectorXd& m_i,
                                const Eigen::VectorXd& m_j, const Eigen::VectorXd& h_j,
                                const Eigen::MatrixXd& projection);

/// One enumerated instance of a type ending at a region, with its
/// similarity weight (self instances carry weight 1).
struct WeightedInstance {
  int peer = 0;
  double weight = 0.0;
};

/// Similarity-weighted sum of encoded instances for one (region, type).
/// `hidden` holds every region's temporal embedding as a column; `features`
/// the kind's (scaled) per-region feature vectors as columns. No instances
/// yields the zero vector.
Eigen::VectorXd aggregate_intra(const std::vector<WeightedInstance>& instances, int region,
                                const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& features,
                                const Eigen::MatrixXd& projection);

/// Mean over regions of tanh(attn_m * h + attn_b); columns of `type_embed`
/// are the regions' aggregated type representations.
Eigen::VectorXd type_summary(const Eigen::MatrixXd& type_embed, const Eigen::MatrixXd& attn_m,
                             const Eigen::VectorXd& attn_b);

struct FusionResult {
  Eigen::MatrixXd fused;   // d_e x |I|
  Eigen::VectorXd beta;    // kFactorKindCount, sums to 1
};

/// Scores each type as q . u, softmaxes the scores into beta (shared by all
/// regions for the day) and blends the per-region type representations.
FusionResult attention_fuse(const std::array<Eigen::VectorXd, kFactorKindCount>& summaries,
                            const std::array<Eigen::MatrixXd, kFactorKindCount>& type_embed,
                            const Eigen::VectorXd& attn_q);

/// sigmoid(head_w * fused + head_b), entries in (0, 1).
Eigen::VectorXd predict_head(const Eigen::VectorXd& fused, const Eigen::MatrixXd& head_w,
                             const Eigen::VectorXd& head_b);

/// Static (per-dataset) model inputs: scaled feature matrices and the
/// per-(kind, region) weighted instance lists, with the top-K cap applied.
struct PreparedData {
  const CrimeTensor* tensor = nullptr;
  ModelDims dims;
  NetworkConfig config;
  std::array<Eigen::MatrixXd, kFactorKindCount> features;  // f_k x |I|
  std::array<std::vector<std::vector<WeightedInstance>>, kFactorKindCount> instances;

  int region_count() const { return tensor ? tensor->region_count() : 0; }
};

PreparedData prepare_inputs(const DatasetBundle& bundle, const Hin& hin,
                            const std::array<SimilarityMatrix, kFactorKindCount>& sims,
                            const NetworkConfig& config);

struct DayOutput {
  Eigen::MatrixXd probs;   // |I| x C
  Eigen::VectorXd beta;    // kFactorKindCount (zero when metapath disabled)
};

/// Full pipeline for one day t (0-based index of the last observed day):
/// window encoding -> instance aggregation -> type summaries -> attention
/// fusion -> prediction head. Requires t+1 >= window.
DayOutput forward(int day, const PreparedData& data, const ModelParams& params);

/// Forward plus analytic backpropagation of the summed binary cross-entropy
/// against `targets` (|I| x C). Gradients accumulate into `grads`; returns
/// the day's loss.
double forward_backward(int day, const PreparedData& data, const ModelParams& params,
                        const Eigen::MatrixXd& targets, ModelGrads& grads,
                        DayOutput* output = nullptr);

/// Binary cross-entropy summed over all entries, predictions clamped to
/// [eps, 1-eps] with eps = 1e-7.
double bce_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

inline constexpr double kProbabilityClamp = 1e-7;

}  // namespace pathcast

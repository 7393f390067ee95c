#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace pathcast {

/// One LSTM layer. Input-to-cell weights are (state_dim x input_dim),
/// recurrent weights (state_dim x state_dim), biases (state_dim).
struct LstmLayerParams {
  Eigen::MatrixXd w_xf, w_xi, w_xc, w_xo;
  Eigen::MatrixXd w_hf, w_hi, w_hc, w_ho;
  Eigen::VectorXd b_f, b_i, b_c, b_o;

  int input_dim() const { return static_cast<int>(w_xf.cols()); }
  int state_dim() const { return static_cast<int>(w_xf.rows()); }
};

/// Stacked LSTM shared across all regions. Layer 0 consumes the input
/// series; layer l consumes layer l-1's hidden states.
struct LstmParams {
  std::vector<LstmLayerParams> layers;

  int input_dim() const { return layers.front().input_dim(); }
  int state_dim() const { return layers.back().state_dim(); }

  /// Uniform init in [-1/sqrt(d_s), +1/sqrt(d_s)] for weights, zero biases.
  static LstmParams init(int input_dim, int state_dim, int layer_count, std::mt19937_64& rng);

  template <class F>
  void for_each_tensor(F&& f) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& p = layers[l];
      const std::string prefix = "lstm.l" + std::to_string(l) + ".";
      f(prefix + "w_xf", p.w_xf);
      f(prefix + "w_xi", p.w_xi);
      f(prefix + "w_xc", p.w_xc);
      f(prefix + "w_xo", p.w_xo);
      f(prefix + "w_hf", p.w_hf);
      f(prefix + "w_hi", p.w_hi);
      f(prefix + "w_hc", p.w_hc);
      f(prefix + "w_ho", p.w_ho);
      f(prefix + "b_f", p.b_f);
      f(prefix + "b_i", p.b_i);
      f(prefix + "b_c", p.b_c);
      f(prefix + "b_o", p.b_o);
    }
  }
};

struct HiddenState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static HiddenState zero(int state_dim) {
    return {Eigen::VectorXd::Zero(state_dim), Eigen::VectorXd::Zero(state_dim)};
  }
};

/// One cell update:
///   f = sigmoid(W_xf x + W_hf h + b_f)      i = sigmoid(W_xi x + W_hi h + b_i)
///   c~ = tanh(W_xc x + W_hc h + b_c)        o = sigmoid(W_xo x + W_ho h + b_o)
///   c' = f .* c + i .* c~                   h' = o .* tanh(c')
/// Shape mismatches and non-finite outputs throw.
HiddenState lstm_cell(const Eigen::VectorXd& x, const HiddenState& state,
                      const LstmLayerParams& params);

/// Runs the stacked LSTM over the window rows (oldest first) from zero
/// states and returns the final top-layer hidden state. `log1p_inputs`
/// applies log(1+x) to the raw count rows first.
Eigen::VectorXd encode_window(const Eigen::MatrixXd& series, const LstmParams& params,
                              bool log1p_inputs = true);

/// Per-step activations kept for backpropagation.
struct LstmStepCache {
  Eigen::VectorXd x, f, i, o, c_bar, c, h, tanh_c;
};

struct LstmTrace {
  // steps[layer][t]
  std::vector<std::vector<LstmStepCache>> steps;

  const Eigen::VectorXd& final_hidden() const { return steps.back().back().h; }
};

Eigen::VectorXd encode_window_traced(const Eigen::MatrixXd& series, const LstmParams& params,
                                     bool log1p_inputs, LstmTrace& trace);

/// Gradient accumulator shaped like LstmParams.
struct LstmGrads {
  std::vector<LstmLayerParams> layers;

  static LstmGrads zero_like(const LstmParams& params);
  void add_scaled(const LstmGrads& other, double scale);
};

/// Backpropagates d(loss)/d(final top-layer h) through the traced window,
/// accumulating into `grads`.
void lstm_backward(const LstmTrace& trace, const LstmParams& params,
                   const Eigen::VectorXd& d_final_hidden, LstmGrads& grads);

}  // namespace pathcast

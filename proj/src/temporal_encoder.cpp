#include "pathcast/temporal_encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

LstmParams LstmParams::init(int input_dim, int state_dim, int layer_count,
                            std::mt19937_64& rng) {
  if (input_dim < 1 || state_dim < 1 || layer_count < 1) {
    throw InputError("LSTM dimensions must be positive");
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(state_dim));
  LstmParams params;
  for (int l = 0; l < layer_count; ++l) {
    const int in = (l == 0) ? input_dim : state_dim;
    LstmLayerParams layer;
    layer.w_xf = uniform_matrix(state_dim, in, bound, rng);
    layer.w_xi = uniform_matrix(state_dim, in, bound, rng);
    layer.w_xc = uniform_matrix(state_dim, in, bound, rng);
    layer.w_xo = uniform_matrix(state_dim, in, bound, rng);
    layer.w_hf = uniform_matrix(state_dim, state_dim, bound, rng);
    layer.w_hi = uniform_matrix(state_dim, state_dim, bound, rng);
    layer.w_hc = uniform_matrix(state_dim, state_dim, bound, rng);
    layer.w_ho = uniform_matrix(state_dim, state_dim, bound, rng);
    layer.b_f = Eigen::VectorXd::Zero(state_dim);
    layer.b_i = Eigen::VectorXd::Zero(state_dim);
    layer.b_c = Eigen::VectorXd::Zero(state_dim);
    layer.b_o = Eigen::VectorXd::Zero(state_dim);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

HiddenState lstm_cell(const Eigen::VectorXd& x, const HiddenState& state,
                      const LstmLayerParams& params) {
  if (x.size() != params.input_dim() || state.h.size() != params.state_dim() ||
      state.c.size() != params.state_dim()) {
    throw InputError("lstm_cell: shape mismatch between input/state and parameters");
  }
  const Eigen::VectorXd f = sigmoid(params.w_xf * x + params.w_hf * state.h + params.b_f);
  const Eigen::VectorXd i = sigmoid(params.w_xi * x + params.w_hi * state.h + params.b_i);
  const Eigen::VectorXd c_bar =
      (params.w_xc * x + params.w_hc * state.h + params.b_c).array().tanh();
  const Eigen::VectorXd o = sigmoid(params.w_xo * x + params.w_ho * state.h + params.b_o);

  HiddenState next;
  next.c = f.cwiseProduct(state.c) + i.cwiseProduct(c_bar);
  next.h = o.cwiseProduct(next.c.array().tanh().matrix());
  if (!next.h.allFinite() || !next.c.allFinite()) {
    throw std::runtime_error("lstm_cell produced non-finite state");
  }
  return next;
}

Eigen::VectorXd encode_window(const Eigen::MatrixXd& series, const LstmParams& params,
                              bool log1p_inputs) {
  LstmTrace trace;
  return encode_window_traced(series, params, log1p_inputs, trace);
}

Eigen::VectorXd encode_window_traced(const Eigen::MatrixXd& series, const LstmParams& params,
                                     bool log1p_inputs, LstmTrace& trace) {
  const int steps = static_cast<int>(series.rows());
  if (steps < 1) throw InputError("encode_window: window must contain at least one step");
  if (series.cols() != params.input_dim()) {
    throw InputError("encode_window: series width does not match the LSTM input dimension");
  }

  const int layer_count = static_cast<int>(params.layers.size());
  trace.steps.assign(layer_count, {});
  for (auto& layer_steps : trace.steps) layer_steps.reserve(steps);

  std::vector<HiddenState> states;
  states.reserve(layer_count);
  for (const auto& layer : params.layers) {
    states.push_back(HiddenState::zero(layer.state_dim()));
  }

  for (int t = 0; t < steps; ++t) {
    Eigen::VectorXd x = series.row(t).transpose();
    if (log1p_inputs) x = x.array().unaryExpr([](double v) { return std::log1p(v); });
    for (int l = 0; l < layer_count; ++l) {
      const auto& p = params.layers[l];
      LstmStepCache cache;
      cache.x = x;
      cache.f = sigmoid(p.w_xf * x + p.w_hf * states[l].h + p.b_f);
      cache.i = sigmoid(p.w_xi * x + p.w_hi * states[l].h + p.b_i);
      cache.c_bar = (p.w_xc * x + p.w_hc * states[l].h + p.b_c).array().tanh();
      cache.o = sigmoid(p.w_xo * x + p.w_ho * states[l].h + p.b_o);
      cache.c = cache.f.cwiseProduct(states[l].c) + cache.i.cwiseProduct(cache.c_bar);
      cache.tanh_c = cache.c.array().tanh();
      cache.h = cache.o.cwiseProduct(cache.tanh_c);
      states[l] = {cache.h, cache.c};
      x = cache.h;
      trace.steps[l].push_back(std::move(cache));
    }
  }
  const Eigen::VectorXd& out = trace.final_hidden();
  if (!out.allFinite()) throw std::runtime_error("encode_window produced non-finite embedding");
  return out;
}

LstmGrads LstmGrads::zero_like(const LstmParams& params) {
  LstmGrads grads;
  for (const auto& layer : params.layers) {
    LstmLayerParams g;
    g.w_xf = Eigen::MatrixXd::Zero(layer.w_xf.rows(), layer.w_xf.cols());
    g.w_xi = Eigen::MatrixXd::Zero(layer.w_xi.rows(), layer.w_xi.cols());
    g.w_xc = Eigen::MatrixXd::Zero(layer.w_xc.rows(), layer.w_xc.cols());
    g.w_xo = Eigen::MatrixXd::Zero(layer.w_xo.rows(), layer.w_xo.cols());
    g.w_hf = Eigen::MatrixXd::Zero(layer.w_hf.rows(), layer.w_hf.cols());
    g.w_hi = Eigen::MatrixXd::Zero(layer.w_hi.rows(), layer.w_hi.cols());
    g.w_hc = Eigen::MatrixXd::Zero(layer.w_hc.rows(), layer.w_hc.cols());
    g.w_ho = Eigen::MatrixXd::Zero(layer.w_ho.rows(), layer.w_ho.cols());
    g.b_f = Eigen::VectorXd::Zero(layer.b_f.size());
    g.b_i = Eigen::VectorXd::Zero(layer.b_i.size());
    g.b_c = Eigen::VectorXd::Zero(layer.b_c.size());
    g.b_o = Eigen::VectorXd::Zero(layer.b_o.size());
    grads.layers.push_back(std::move(g));
  }
  return grads;
}

void LstmGrads::add_scaled(const LstmGrads& other, double scale) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].w_xf += scale * other.layers[l].w_xf;
    layers[l].w_xi += scale * other.layers[l].w_xi;
    layers[l].w_xc += scale * other.layers[l].w_xc;
    layers[l].w_xo += scale * other.layers[l].w_xo;
    layers[l].w_hf += scale * other.layers[l].w_hf;
    layers[l].w_hi += scale * other.layers[l].w_hi;
    layers[l].w_hc += scale * other.layers[l].w_hc;
    layers[l].w_ho += scale * other.layers[l].w_ho;
    layers[l].b_f += scale * other.layers[l].b_f;
    layers[l].b_i += scale * other.layers[l].b_i;
    layers[l].b_c += scale * other.layers[l].b_c;
    layers[l].b_o += scale * other.layers[l].b_o;
  }
}

void lstm_backward(const LstmTrace& trace, const LstmParams& params,
                   const Eigen::VectorXd& d_final_hidden, LstmGrads& grads) {
  const int layer_count = static_cast<int>(params.layers.size());
  const int steps = static_cast<int>(trace.steps.front().size());

  // d(loss)/d(h_t) of the layer below, produced while walking the layer
  // above (the lower layer's h feeds the upper layer's x at the same step).
  std::vector<Eigen::VectorXd> dh_from_above(steps);
  for (auto& v : dh_from_above) v = Eigen::VectorXd();

  for (int l = layer_count - 1; l >= 0; --l) {
    const auto& p = params.layers[l];
    auto& g = grads.layers[l];
    const auto& layer_steps = trace.steps[l];
    const int d = p.state_dim();

    Eigen::VectorXd dh = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(d);
    if (l == layer_count - 1) dh = d_final_hidden;

    std::vector<Eigen::VectorXd> dx_below(steps);

    for (int t = steps - 1; t >= 0; --t) {
      const auto& s = layer_steps[t];
      if (l < layer_count - 1 && dh_from_above[t].size() > 0) dh += dh_from_above[t];

      const Eigen::VectorXd d_o = dh.cwiseProduct(s.tanh_c);
      dc += dh.cwiseProduct(s.o).cwiseProduct(
          (1.0 - s.tanh_c.array().square()).matrix());

      const Eigen::VectorXd c_prev =
          (t > 0) ? layer_steps[t - 1].c : Eigen::VectorXd::Zero(d);
      const Eigen::VectorXd h_prev =
          (t > 0) ? layer_steps[t - 1].h : Eigen::VectorXd::Zero(d);

      const Eigen::VectorXd d_f = dc.cwiseProduct(c_prev);
      const Eigen::VectorXd d_i = dc.cwiseProduct(s.c_bar);
      const Eigen::VectorXd d_c_bar = dc.cwiseProduct(s.i);
      const Eigen::VectorXd dc_prev = dc.cwiseProduct(s.f);

      // Pre-activation gradients through the gate nonlinearities.
      const Eigen::VectorXd dz_f =
          d_f.cwiseProduct(s.f).cwiseProduct((1.0 - s.f.array()).matrix());
      const Eigen::VectorXd dz_i =
          d_i.cwiseProduct(s.i).cwiseProduct((1.0 - s.i.array()).matrix());
      const Eigen::VectorXd dz_o =
          d_o.cwiseProduct(s.o).cwiseProduct((1.0 - s.o.array()).matrix());
      const Eigen::VectorXd dz_c =
          d_c_bar.cwiseProduct((1.0 - s.c_bar.array().square()).matrix());

      g.w_xf.noalias() += dz_f * s.x.transpose();
      g.w_xi.noalias() += dz_i * s.x.transpose();
      g.w_xc.noalias() += dz_c * s.x.transpose();
      g.w_xo.noalias() += dz_o * s.x.transpose();
      g.w_hf.noalias() += dz_f * h_prev.transpose();
      g.w_hi.noalias() += dz_i * h_prev.transpose();
      g.w_hc.noalias() += dz_c * h_prev.transpose();
      g.w_ho.noalias() += dz_o * h_prev.transpose();
      g.b_f += dz_f;
      g.b_i += dz_i;
      g.b_c += dz_c;
      g.b_o += dz_o;

      dx_below[t] = p.w_xf.transpose() * dz_f + p.w_xi.transpose() * dz_i +
                    p.w_xc.transpose() * dz_c + p.w_xo.transpose() * dz_o;
      dh = p.w_hf.transpose() * dz_f + p.w_hi.transpose() * dz_i +
           p.w_hc.transpose() * dz_c + p.w_ho.transpose() * dz_o;
      dc = dc_prev;
    }
    dh_from_above = std::move(dx_below);
  }
}

}  // namespace pathcast

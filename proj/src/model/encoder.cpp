#include "ran/model/encoder.hpp"

#include <cmath>
#include <string>

#include "ran/error.hpp"

namespace ran {

BatchInput prepare_batch(std::span<const ObservationWindow> windows, const ModelConfig& config) {
  const int t_obs = config.t_obs;
  const int t_pred = config.t_pred;
  const int a = config.a_max;
  const int b = int(windows.size());
  BatchInput in;
  in.batch = b;
  in.points.assign(std::size_t(t_obs), Mat::Zero(b, 2));
  in.neighbors.assign(std::size_t(t_obs), Mat::Zero(Eigen::Index(b) * a, 2));
  in.mask.assign(std::size_t(t_obs), Mat::Zero(b, a));
  in.future = Mat::Zero(b, 2 * t_pred);
  in.origin.resize(std::size_t(b));
  for (int i = 0; i < b; ++i) {
    const ObservationWindow& w = windows[std::size_t(i)];
    // Observation-only windows (inference input) carry no future.
    w.validate(std::size_t(t_obs), w.future.empty() ? 0 : std::size_t(t_pred));
    const Point2 o = w.observed.back();
    in.origin[std::size_t(i)] = o;
    const PaddedNeighbors padded = neighbor_mask(w, a);
    for (int t = 0; t < t_obs; ++t) {
      const Point2 p = w.observed[std::size_t(t)];
      in.points[std::size_t(t)](i, 0) = p.x - o.x;
      in.points[std::size_t(t)](i, 1) = p.y - o.y;
      for (int j = 0; j < a; ++j) {
        if (!padded.real(std::size_t(t), std::size_t(j))) continue;
        const Point2 n = padded.at(std::size_t(t), std::size_t(j));
        in.neighbors[std::size_t(t)](Eigen::Index(i) * a + j, 0) = n.x - o.x;
        in.neighbors[std::size_t(t)](Eigen::Index(i) * a + j, 1) = n.y - o.y;
        in.mask[std::size_t(t)](i, j) = 1.0;
      }
    }
    for (int t = 0; t < t_pred && !w.future.empty(); ++t) {
      in.future(i, 2 * t) = w.future[std::size_t(t)].x - o.x;
      in.future(i, 2 * t + 1) = w.future[std::size_t(t)].y - o.y;
    }
  }
  return in;
}

namespace {

Var perceptron(const diff::BoundParams& p, const std::string& prefix, Var x) {
  Var h = diff::sigmoid(diff::add_row(diff::matmul(x, p[prefix + ".w1"]), p[prefix + ".b1"]));
  return diff::sigmoid(diff::add_row(diff::matmul(h, p[prefix + ".w2"]), p[prefix + ".b2"]));
}

Var linear(const diff::BoundParams& p, const std::string& w, const std::string& b, Var x) {
  return diff::add_row(diff::matmul(x, p[w]), p[b]);
}

}  // namespace

StepEmbedding embed_step(const diff::BoundParams& params, Var points, Var neighbors) {
  StepEmbedding e;
  e.own = perceptron(params, "f_o", points);
  e.neighbors = perceptron(params, "f_b", neighbors);
  return e;
}

AttentionOutput stepwise_attention(const diff::BoundParams& params, const ModelConfig& config,
                                   const StepEmbedding& embedding, const Mat& mask) {
  Tape& tape = params.tape();
  AttentionOutput out;
  out.query = diff::matmul(embedding.own, params["attn.w_q"]);
  const Eigen::Index batch = out.query.rows();
  if (config.a_max == 0) {
    out.context = tape.constant(Mat::Zero(batch, config.d));
    return out;
  }
  Var keys = diff::matmul(embedding.neighbors, params["attn.w_k"]);
  Var values = diff::matmul(embedding.neighbors, params["attn.w_v"]);
  const int dk = config.d / config.heads;
  const double inv_scale = 1.0 / std::sqrt(double(dk));
  std::vector<Var> per_head;
  for (int h = 0; h < config.heads; ++h) {
    Var q = out.query;
    Var k = keys;
    Var v = values;
    if (config.heads > 1) {
      q = diff::slice_cols(q, h * dk, dk);
      k = diff::slice_cols(k, h * dk, dk);
      v = diff::slice_cols(v, h * dk, dk);
    }
    Var weights = diff::masked_softmax(diff::scale(diff::group_dot(q, k), inv_scale), mask);
    per_head.push_back(diff::group_weighted_sum(weights, v));
  }
  out.context = per_head.size() == 1 ? per_head.front() : diff::concat_cols(per_head);
  return out;
}

Var step_representation(Var query, Var context) {
  if (query.rows() != context.rows() || query.cols() != context.cols()) {
    throw ShapeError("step_representation: query and context must have equal shapes");
  }
  return diff::concat_cols({query, context});
}

Var gru_cell(const diff::BoundParams& params, int layer, Var x, Var h_prev) {
  using namespace diff;
  const std::string p = "gru" + std::to_string(layer);
  Var r = sigmoid(add_row(add(matmul(x, params[p + ".w_xr"]), matmul(h_prev, params[p + ".w_hr"])),
                          params[p + ".b_r"]));
  Var z = sigmoid(add_row(add(matmul(x, params[p + ".w_xz"]), matmul(h_prev, params[p + ".w_hz"])),
                          params[p + ".b_z"]));
  Var g = tanh(add_row(add(matmul(x, params[p + ".w_xg"]), mul(r, matmul(h_prev, params[p + ".w_hg"]))),
                       params[p + ".b_g"]));
  return add(mul(add_scalar(scale(z, -1.0), 1.0), g), mul(z, h_prev));
}

Var initial_hidden(const diff::BoundParams& params, int layer, Var neighbor_embedding,
                   const Mat& mask) {
  Tape& tape = params.tape();
  Mat weights = mask;
  for (Eigen::Index b = 0; b < weights.rows(); ++b) {
    const double count = weights.row(b).sum();
    if (count > 0) weights.row(b) /= count;
  }
  Var summary = weights.cols() == 0
                    ? tape.constant(Mat::Zero(mask.rows(), neighbor_embedding.cols()))
                    : diff::group_weighted_sum(tape.constant(weights), neighbor_embedding);
  const std::string p = "gru" + std::to_string(layer);
  return linear(params, p + ".h0_w", p + ".h0_b", summary);
}

BatchEncoding encode_batch(const diff::BoundParams& params, const ModelConfig& config,
                           const BatchInput& input) {
  Tape& tape = params.tape();
  if (input.batch < 1) throw ShapeError("encode_batch: empty batch");
  if (int(input.points.size()) != config.t_obs) throw ShapeError("encode_batch: t_obs mismatch");
  BatchEncoding enc;
  std::vector<Var> h(std::size_t(config.layers));
  for (int t = 0; t < config.t_obs; ++t) {
    Var pts = tape.constant(input.points[std::size_t(t)]);
    Var nbr = tape.constant(input.neighbors[std::size_t(t)]);
    const Mat& mask = input.mask[std::size_t(t)];
    StepEmbedding e = embed_step(params, pts, nbr);
    if (t == 0) {
      for (int l = 0; l < config.layers; ++l) {
        h[std::size_t(l)] = initial_hidden(params, l, e.neighbors, mask);
      }
    }
    AttentionOutput att = stepwise_attention(params, config, e, mask);
    Var x = step_representation(att.query, att.context);
    for (int l = 0; l < config.layers; ++l) {
      h[std::size_t(l)] = gru_cell(params, l, l == 0 ? x : h[std::size_t(l - 1)], h[std::size_t(l)]);
    }
    enc.contexts.push_back(att.context);
    enc.steps.push_back(x);
    enc.hidden.push_back(h.back());
  }
  return enc;
}

EncodedWindow encode_window(const ObservationWindow& window, const diff::ParamSet& params,
                            const ModelConfig& config) {
  Tape tape;
  diff::BoundParams bound(tape, params, false);
  const BatchInput input = prepare_batch(std::span(&window, 1), config);
  const BatchEncoding enc = encode_batch(bound, config, input);
  EncodedWindow out;
  for (const Var& h : enc.hidden) out.hidden_per_step.push_back(h.value());
  out.final_hidden = out.hidden_per_step.back();
  return out;
}

DomainFeature domain_feature(std::span<const EncodedWindow> batch, Aggregation aggregation) {
  if (batch.empty()) throw ShapeError("domain_feature: empty batch");
  const std::size_t steps = batch.front().hidden_per_step.size();
  DomainFeature f;
  for (std::size_t t = 0; t < steps; ++t) {
    Mat s = Mat::Zero(1, batch.front().hidden_per_step[t].cols());
    for (const EncodedWindow& w : batch) {
      if (w.hidden_per_step.size() != steps) throw ShapeError("domain_feature: unequal T_obs");
      s += w.hidden_per_step[t];
    }
    if (aggregation == Aggregation::Mean) s /= double(batch.size());
    f.s_per_step.push_back(std::move(s));
  }
  return f;
}

}  // namespace ran

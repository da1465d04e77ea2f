// Stepwise social attention and recurrent encoding of observation windows.
//
// Per observed step t of a window:
//   F_o = f_o(o_t), F_b = f_b(B_t)               two-layer sigmoid perceptrons
//   q = F_o W_q, K = F_b W_k, V = F_b W_v
//   a = masked_softmax(q K^T / sqrt(d_k)) V       zero when no neighbors
//   x_t = [q, a]
//   h_t = GRU(x_t, h_{t-1})
// h_0 is a linear map of the masked mean of the first step's neighbor
// embeddings (zeros without neighbors).
//
// Coordinates are expressed relative to the window's last observed point.

#pragma once

#include <span>
#include <vector>

#include "ran/core/trajectory.hpp"
#include "ran/diff/ops.hpp"
#include "ran/model/config.hpp"

namespace ran {

using diff::Mat;
using diff::Tape;
using diff::Var;

// Tensors for a batch of windows, ready to be placed on a tape.
struct BatchInput {
  int batch = 0;
  std::vector<Mat> points;     // per step, B x 2
  std::vector<Mat> neighbors;  // per step, (B * a_max) x 2, padding rows zero
  std::vector<Mat> mask;       // per step, B x a_max, 1 for real neighbors
  Mat future;                  // B x (2 * t_pred), x/y interleaved per step
  std::vector<Point2> origin;  // per window, subtracted from all coordinates
};

BatchInput prepare_batch(std::span<const ObservationWindow> windows, const ModelConfig& config);

struct StepEmbedding {
  Var own;        // B x embed_out
  Var neighbors;  // (B * a_max) x embed_out
};

StepEmbedding embed_step(const diff::BoundParams& params, Var points, Var neighbors);

struct AttentionOutput {
  Var query;    // B x d
  Var context;  // B x d
};

AttentionOutput stepwise_attention(const diff::BoundParams& params, const ModelConfig& config,
                                   const StepEmbedding& embedding, const Mat& mask);

// Concatenation [q, a]; both must be B x d.
Var step_representation(Var query, Var context);

Var gru_cell(const diff::BoundParams& params, int layer, Var x, Var h_prev);

Var initial_hidden(const diff::BoundParams& params, int layer, Var neighbor_embedding,
                   const Mat& mask);

struct BatchEncoding {
  std::vector<Var> contexts;  // per step, B x d (attention output a)
  std::vector<Var> steps;     // per step, B x 2d (x = [q, a])
  std::vector<Var> hidden;    // per step, B x hidden (top GRU layer)

  Var final_hidden() const { return hidden.back(); }
};

BatchEncoding encode_batch(const diff::BoundParams& params, const ModelConfig& config,
                           const BatchInput& input);

// Value-level encoding of a single window.
struct EncodedWindow {
  std::vector<Mat> hidden_per_step;  // each 1 x hidden
  Mat final_hidden;
};

EncodedWindow encode_window(const ObservationWindow& window, const diff::ParamSet& params,
                            const ModelConfig& config);

struct DomainFeature {
  std::vector<Mat> s_per_step;  // each 1 x hidden
};

// S_t = sum (or mean) over the batch of h_t. Throws ShapeError on an empty
// batch or unequal sequence lengths.
DomainFeature domain_feature(std::span<const EncodedWindow> batch,
                             Aggregation aggregation = Aggregation::Sum);

}  // namespace ran

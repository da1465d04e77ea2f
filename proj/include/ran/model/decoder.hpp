// Mixture-of-experts trajectory decoder and winner-take-all prediction loss.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ran/model/encoder.hpp"

namespace ran {

// K independent heads, each tanh(h W1 + b1) W2 + b2. Head outputs are
// B x (2 * t_pred) offsets from the window origin, x/y interleaved per step.
std::vector<Var> moe_decode(const diff::BoundParams& params, const ModelConfig& config,
                            Var final_hidden);

struct PredictionSet {
  std::vector<std::vector<Point2>> trajectories;  // K x t_pred
  std::optional<int> best_index;
};

struct PredictionLoss {
  Var per_window;             // B x 1: min over heads of the mean point distance
  std::vector<int> best_head;  // argmin per window, lowest index on ties
};

// `truth` is B x (2 * t_pred) in the same layout as the head outputs.
PredictionLoss prediction_loss(const std::vector<Var>& heads, Var truth);

// Value-level contribution of one window: min over heads of the mean
// Euclidean point distance. Sets preds.best_index when `preds` is non-const.
double prediction_loss(const PredictionSet& preds, std::span<const Point2> truth);
double prediction_loss(PredictionSet& preds, std::span<const Point2> truth);

// Inference through the single shared encoder/decoder; coordinates absolute.
PredictionSet predict(const ObservationWindow& window, const diff::ParamSet& params,
                      const ModelConfig& config);
std::vector<PredictionSet> predict_batch(std::span<const ObservationWindow> windows,
                                         const diff::ParamSet& params, const ModelConfig& config);

}  // namespace ran

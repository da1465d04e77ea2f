#include "ran/model/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ran/error.hpp"

namespace ran {

std::vector<Var> moe_decode(const diff::BoundParams& params, const ModelConfig& config,
                            Var final_hidden) {
  using namespace diff;
  if (final_hidden.cols() != config.hidden) {
    throw ShapeError("moe_decode: hidden width " + std::to_string(final_hidden.cols()) +
                     " != " + std::to_string(config.hidden));
  }
  std::vector<Var> heads;
  heads.reserve(std::size_t(config.k));
  for (int k = 0; k < config.k; ++k) {
    const std::string p = "dec" + std::to_string(k);
    Var h = tanh(add_row(matmul(final_hidden, params[p + ".w1"]), params[p + ".b1"]));
    heads.push_back(add_row(matmul(h, params[p + ".w2"]), params[p + ".b2"]));
  }
  return heads;
}

PredictionLoss prediction_loss(const std::vector<Var>& heads, Var truth) {
  using namespace diff;
  if (heads.empty()) throw ShapeError("prediction_loss: no heads");
  const Eigen::Index b = truth.rows();
  const Eigen::Index steps = truth.cols() / 2;
  if (truth.cols() % 2 != 0) throw ShapeError("prediction_loss: truth width must be even");
  std::vector<Var> errors;
  errors.reserve(heads.size());
  for (const Var& head : heads) {
    Var diff_pts = reshape(sub(head, truth), b * steps, 2);
    errors.push_back(row_means(reshape(row_norms(diff_pts), b, steps)));
  }
  MinSelection sel = rowwise_min(errors);
  return PredictionLoss{sel.value, std::move(sel.argmin)};
}

namespace {

double mean_distance(const std::vector<Point2>& pred, std::span<const Point2> truth) {
  if (pred.size() != truth.size() || truth.empty()) {
    throw ShapeError("prediction_loss: trajectory length mismatch");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    total += std::hypot(pred[t].x - truth[t].x, pred[t].y - truth[t].y);
  }
  return total / double(truth.size());
}

std::pair<double, int> best_head(const PredictionSet& preds, std::span<const Point2> truth) {
  if (preds.trajectories.empty()) throw ShapeError("prediction_loss: empty prediction set");
  double best = std::numeric_limits<double>::infinity();
  int index = 0;
  for (std::size_t k = 0; k < preds.trajectories.size(); ++k) {
    const double e = mean_distance(preds.trajectories[k], truth);
    if (e < best) {
      best = e;
      index = int(k);
    }
  }
  return {best, index};
}

}  // namespace

double prediction_loss(const PredictionSet& preds, std::span<const Point2> truth) {
  return best_head(preds, truth).first;
}

double prediction_loss(PredictionSet& preds, std::span<const Point2> truth) {
  const auto [value, index] = best_head(preds, truth);
  preds.best_index = index;
  return value;
}

std::vector<PredictionSet> predict_batch(std::span<const ObservationWindow> windows,
                                         const diff::ParamSet& params, const ModelConfig& config) {
  constexpr std::size_t kChunk = 256;
  std::vector<PredictionSet> out;
  out.reserve(windows.size());
  for (std::size_t start = 0; start < windows.size(); start += kChunk) {
    const auto chunk = windows.subspan(start, std::min(kChunk, windows.size() - start));
    Tape tape;
    diff::BoundParams bound(tape, params, false);
    const BatchInput input = prepare_batch(chunk, config);
    const BatchEncoding enc = encode_batch(bound, config, input);
    const std::vector<Var> heads = moe_decode(bound, config, enc.final_hidden());
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      PredictionSet set;
      const Point2 o = input.origin[i];
      for (const Var& head : heads) {
        const Mat& v = head.value();
        std::vector<Point2> traj(std::size_t(config.t_pred));
        for (int t = 0; t < config.t_pred; ++t) {
          traj[std::size_t(t)] = {v(Eigen::Index(i), 2 * t) + o.x, v(Eigen::Index(i), 2 * t + 1) + o.y};
        }
        set.trajectories.push_back(std::move(traj));
      }
      out.push_back(std::move(set));
    }
  }
  return out;
}

PredictionSet predict(const ObservationWindow& window, const diff::ParamSet& params,
                      const ModelConfig& config) {
  return std::move(predict_batch(std::span(&window, 1), params, config).front());
}

}  // namespace ran

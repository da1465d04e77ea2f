// Joint training on several source domains through one shared network.
//
// Every step draws one equal-size batch per source domain, runs each batch
// through the same bound parameter set, and minimizes
//   L = lambda1 * L_align + lambda2 * L_pre
// with a single Adam step. L_align follows AlignmentConfig::strategy; with
// more than two sources the pairwise form averaged by 1/m^2 is used.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ran/align/alignment.hpp"
#include "ran/model/decoder.hpp"

namespace ran {

struct LossBreakdown {
  double l_rec = 0.0;
  double l_pre = 0.0;
  double total = 0.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

LossBreakdown total_loss(double l_rec, double l_pre, double lambda1, double lambda2);

struct TrainConfig {
  int epochs = 100;
  double lr = 1e-3;
  int batch_size = 64;
  double decay = 0.5;
  int interval = 50;
  std::uint64_t seed = 0;
  AlignmentConfig alignment;
  // Write a checkpoint every N epochs (0: never) to checkpoint_path.
  int checkpoint_interval = 0;
  std::filesystem::path checkpoint_path;

  // 300 epochs, lr 0.001, batch 512, decay 0.5 every 50 epochs.
  static TrainConfig paper_scale();
  static TrainConfig desk_scale();

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  LossBreakdown loss;  // means over the epoch's steps
  double lr = 0.0;
};

// Forward graph of one training step.
struct SourceForward {
  BatchEncoding encoding;
  std::vector<Var> heads;
  PredictionLoss prediction;
};

struct StepForward {
  std::vector<SourceForward> sources;
  Var l_rec;
  Var l_pre;
  Var total;
};

// Alignment loss over the encodings of all sources for config.strategy.
Var alignment_loss(const std::vector<const BatchEncoding*>& encodings,
                   const AlignmentConfig& config);

// Builds the full loss graph on params.tape(). Throws ShapeError when batch
// sizes differ between sources.
StepForward forward_step(const diff::BoundParams& params, const ModelConfig& model,
                         const AlignmentConfig& alignment, const std::vector<BatchInput>& batches);

struct TrainResult {
  diff::ParamSet params;
  std::vector<EpochLog> log;
};

// Called after each epoch with the epoch entry and current parameters.
using EpochCallback = std::function<void(const EpochLog&, const diff::ParamSet&)>;

// `sources` holds the training windows of each source domain. Each epoch
// shuffles every source independently and pairs up full batches; the epoch
// length is the smallest source's batch count. Throws NumericError if the
// loss diverges.
TrainResult train(const std::vector<std::vector<ObservationWindow>>& sources,
                  const ModelConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch = nullptr);

// CSV with header "epoch,l_rec,l_pre,total,lr".
void write_training_log(std::ostream& out, const std::vector<EpochLog>& log);

}  // namespace ran

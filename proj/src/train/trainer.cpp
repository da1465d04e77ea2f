#include "ran/train/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "ran/diff/checkpoint.hpp"
#include "ran/diff/optim.hpp"
#include "ran/error.hpp"

namespace ran {

LossBreakdown total_loss(double l_rec, double l_pre, double lambda1, double lambda2) {
  if (lambda1 < 0 || lambda2 < 0) throw ConfigError("loss coefficients must be >= 0");
  return LossBreakdown{l_rec, l_pre, lambda1 * l_rec + lambda2 * l_pre, lambda1, lambda2};
}

TrainConfig TrainConfig::paper_scale() {
  TrainConfig c;
  c.epochs = 300;
  c.lr = 1e-3;
  c.batch_size = 512;
  c.decay = 0.5;
  c.interval = 50;
  return c;
}

TrainConfig TrainConfig::desk_scale() { return TrainConfig{}; }

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr > 0)) throw ConfigError("lr must be > 0");
  if (batch_size < 1) throw ConfigError("batch must be >= 1");
  if (!(decay > 0)) throw ConfigError("decay must be > 0");
  if (interval < 1) throw ConfigError("interval must be >= 1");
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be >= 0");
  alignment.validate();
}

Var alignment_loss(const std::vector<const BatchEncoding*>& encodings,
                   const AlignmentConfig& config) {
  if (encodings.empty()) throw ShapeError("alignment_loss: no sources");
  auto sets_of = [&](const BatchEncoding& e) -> StepSets {
    switch (config.strategy) {
      case AlignmentStrategy::State: return e.contexts;
      case AlignmentStrategy::Sequence: return StepSets{e.hidden.back()};
      case AlignmentStrategy::Recurrent: break;
    }
    return e.hidden;
  };
  if (encodings.size() == 2) {
    const BatchEncoding& a = *encodings[0];
    const BatchEncoding& b = *encodings[1];
    switch (config.strategy) {
      case AlignmentStrategy::Recurrent: return recurrent_alignment_loss(a.hidden, b.hidden, config);
      case AlignmentStrategy::State: return state_alignment_loss(a.contexts, b.contexts, config);
      case AlignmentStrategy::Sequence: return sequence_alignment_loss(a.hidden, b.hidden, config);
    }
  }
  std::vector<StepSets> domains;
  for (const BatchEncoding* e : encodings) domains.push_back(sets_of(*e));
  return multi_source_loss(domains, config);
}

StepForward forward_step(const diff::BoundParams& params, const ModelConfig& model,
                         const AlignmentConfig& alignment, const std::vector<BatchInput>& batches) {
  if (batches.empty()) throw ShapeError("forward_step: no source batches");
  for (const BatchInput& b : batches) {
    if (b.batch != batches.front().batch) {
      throw ShapeError("forward_step: source batch sizes differ (" +
                       std::to_string(batches.front().batch) + " vs " + std::to_string(b.batch) +
                       ")");
    }
  }
  Tape& tape = params.tape();
  StepForward fwd;
  std::vector<Var> per_window;
  for (const BatchInput& batch : batches) {
    SourceForward src;
    src.encoding = encode_batch(params, model, batch);
    src.heads = moe_decode(params, model, src.encoding.final_hidden());
    src.prediction = prediction_loss(src.heads, tape.constant(batch.future));
    per_window.push_back(src.prediction.per_window);
    fwd.sources.push_back(std::move(src));
  }
  fwd.l_pre = diff::mean(diff::concat_rows(per_window));
  if (batches.size() >= 2) {
    std::vector<const BatchEncoding*> encs;
    for (const SourceForward& s : fwd.sources) encs.push_back(&s.encoding);
    fwd.l_rec = alignment_loss(encs, alignment);
  } else {
    fwd.l_rec = tape.constant(Mat::Zero(1, 1));
  }
  fwd.total = diff::add(diff::scale(fwd.l_rec, alignment.lambda1),
                        diff::scale(fwd.l_pre, alignment.lambda2));
  return fwd;
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void write_number(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

TrainResult train(const std::vector<std::vector<ObservationWindow>>& sources,
                  const ModelConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  model.validate();
  config.validate();
  if (sources.empty()) throw ConfigError("train: no source domains");
  for (std::size_t s = 0; s < sources.size(); ++s) {
    if (sources[s].size() < std::size_t(config.batch_size)) {
      throw ConfigError("train: source " + std::to_string(s) + " has " +
                        std::to_string(sources[s].size()) + " windows, fewer than batch size " +
                        std::to_string(config.batch_size));
    }
  }
  const std::size_t batch = std::size_t(config.batch_size);
  std::size_t steps_per_epoch = sources.front().size() / batch;
  for (const auto& s : sources) steps_per_epoch = std::min(steps_per_epoch, s.size() / batch);

  TrainResult result;
  result.params = init_model_params(model, config.seed);
  diff::AdamState adam = diff::make_adam_state(result.params, config.lr);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    adam.lr = diff::lr_schedule(epoch, config.lr, config.decay, config.interval);
    std::vector<std::vector<std::size_t>> order(sources.size());
    for (std::size_t s = 0; s < sources.size(); ++s) {
      order[s].resize(sources[s].size());
      std::iota(order[s].begin(), order[s].end(), std::size_t{0});
      std::mt19937_64 rng(mix(mix(config.seed, std::uint64_t(epoch)), s + 1));
      std::shuffle(order[s].begin(), order[s].end(), rng);
    }
    double sum_rec = 0.0;
    double sum_pre = 0.0;
    double sum_total = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<BatchInput> inputs;
      for (std::size_t s = 0; s < sources.size(); ++s) {
        std::vector<ObservationWindow> chosen;
        chosen.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) chosen.push_back(sources[s][order[s][step * batch + i]]);
        inputs.push_back(prepare_batch(chosen, model));
      }
      try {
        Tape tape;
        diff::BoundParams bound(tape, result.params);
        StepForward fwd = forward_step(bound, model, config.alignment, inputs);
        tape.backward(fwd.total);
        diff::adam_step(result.params, bound.gradients(), adam);
        sum_rec += fwd.l_rec.scalar();
        sum_pre += fwd.l_pre.scalar();
        sum_total += fwd.total.scalar();
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step) + ": " + e.what());
      }
    }
    const double n = double(std::max<std::size_t>(steps_per_epoch, 1));
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = adam.lr;
    entry.loss = LossBreakdown{sum_rec / n, sum_pre / n, sum_total / n, config.alignment.lambda1,
                               config.alignment.lambda2};
    result.log.push_back(entry);
    if (config.checkpoint_interval > 0 && (epoch + 1) % config.checkpoint_interval == 0 &&
        !config.checkpoint_path.empty()) {
      diff::save_checkpoint(config.checkpoint_path, result.params);
    }
    if (on_epoch) on_epoch(entry, result.params);
  }
  return result;
}

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,l_rec,l_pre,total,lr\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',';
    write_number(out, e.loss.l_rec);
    out << ',';
    write_number(out, e.loss.l_pre);
    out << ',';
    write_number(out, e.loss.total);
    out << ',';
    write_number(out, e.lr);
    out << '\n';
  }
}

}  // namespace ran

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "ran/diff/ops.hpp"
#include "ran/error.hpp"
#include "ran/ingest/ingest.hpp"
#include "ran/train/trainer.hpp"
#include "test_util.hpp"

using namespace ran;
using diff::BoundParams;
using ran::testing::dense_params;
using ran::testing::random_mat;
using ran::testing::random_windows;
using ran::testing::tiny_config;

namespace {

PredictionSet fixed_set(std::vector<std::vector<Point2>> heads) {
  PredictionSet s;
  s.trajectories = std::move(heads);
  return s;
}

std::vector<Point2> shifted(const std::vector<Point2>& t, double dx, double dy) {
  std::vector<Point2> out;
  for (auto p : t) out.push_back({p.x + dx, p.y + dy});
  return out;
}

std::vector<ObservationWindow> synth_windows(const ModelConfig& c, int n_agents,
                                             std::uint64_t seed, int domain_id = 0) {
  SynthDomainConfig s;
  s.n_agents = n_agents;
  s.n_frames = 40;
  s.seed = seed;
  return build_windows(synth_domain(s), c.t_obs, c.t_pred, 2, domain_id);
}

}  // namespace

TEST(MoeDecode, SingleHeadShape) {
  ModelConfig c = tiny_config();
  c.k = 1;
  const diff::ParamSet p = dense_params(c, 1);
  Tape t;
  BoundParams b(t, p, false);
  std::mt19937_64 rng(1);
  const auto heads = moe_decode(b, c, t.constant(random_mat(rng, 2, c.hidden)));
  ASSERT_EQ(heads.size(), 1u);
  EXPECT_EQ(heads[0].rows(), 2);
  EXPECT_EQ(heads[0].cols(), 2 * c.t_pred);
}

TEST(MoeDecode, ZeroWeightsEmitBiases) {
  const ModelConfig c = tiny_config();
  diff::ParamSet p = ran::testing::zero_params(c);
  std::mt19937_64 rng(2);
  for (int k = 0; k < c.k; ++k) {
    p.at("dec" + std::to_string(k) + ".b1") = random_mat(rng, 1, c.dec_hidden);
    p.at("dec" + std::to_string(k) + ".b2") = Mat::Constant(1, 2 * c.t_pred, double(k + 1));
  }
  Tape t;
  BoundParams b(t, p, false);
  const auto heads = moe_decode(b, c, t.constant(random_mat(rng, 3, c.hidden)));
  for (int k = 0; k < c.k; ++k) {
    EXPECT_TRUE((heads[std::size_t(k)].value().array() == double(k + 1)).all());
  }
}

TEST(MoeDecode, HeadsAreIndependent) {
  const ModelConfig c = tiny_config();
  diff::ParamSet p = dense_params(c, 3);
  std::mt19937_64 rng(3);
  const Mat h = random_mat(rng, 2, c.hidden);
  auto run = [&](const diff::ParamSet& ps) {
    Tape t;
    BoundParams b(t, ps, false);
    std::vector<Mat> out;
    for (const Var& v : moe_decode(b, c, t.constant(h))) out.push_back(v.value());
    return out;
  };
  const auto base = run(p);
  p.at("dec1.w1") *= 3.0;
  const auto changed = run(p);
  EXPECT_EQ(changed[0], base[0]);
  EXPECT_EQ(changed[2], base[2]);
  EXPECT_NE(changed[1], base[1]);
}

TEST(MoeDecode, DefaultsAndErrors) {
  EXPECT_EQ(ModelConfig{}.k, 20);
  EXPECT_EQ(ModelConfig::desk_scale().k, 20);
  const ModelConfig c = tiny_config();
  const diff::ParamSet p = dense_params(c, 4);
  Tape t;
  BoundParams b(t, p, false);
  EXPECT_THROW(moe_decode(b, c, t.constant(Mat::Zero(1, c.hidden + 1))), ShapeError);
}

TEST(PredictionLoss, PerfectHeadIsZero) {
  const std::vector<Point2> truth = {{1, 2}, {3, 4}};
  PredictionSet s = fixed_set({shifted(truth, 5, 0), truth});
  EXPECT_EQ(prediction_loss(s, truth), 0.0);
  EXPECT_EQ(s.best_index, 1);
}

TEST(PredictionLoss, MinimumOverHeads) {
  const std::vector<Point2> truth = {{0, 0}, {1, 1}, {2, 0}};
  const PredictionSet s = fixed_set({shifted(truth, 0, 1.0), shifted(truth, 3.0, 0)});
  EXPECT_EQ(prediction_loss(s, truth), 1.0);
  EXPECT_THROW(prediction_loss(s, std::vector<Point2>{{0, 0}}), ShapeError);
}

TEST(PredictionLossProperty, WorseHeadNeverIncreases) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    std::vector<Point2> truth;
    for (int t = 0; t < 6; ++t) truth.push_back({n(rng), n(rng)});
    PredictionSet s;
    for (int k = 0; k < 3; ++k) s.trajectories.push_back(shifted(truth, n(rng), n(rng)));
    const double before = prediction_loss(std::as_const(s), truth);
    s.trajectories.push_back(shifted(truth, 10 + n(rng), 0));
    EXPECT_LE(prediction_loss(std::as_const(s), truth), before);
    s.trajectories.insert(s.trajectories.begin(), shifted(truth, n(rng), n(rng)));
    EXPECT_LE(prediction_loss(std::as_const(s), truth), before);
  }
}

TEST(PredictionLoss, GraphMatchesValueLevel) {
  const ModelConfig c = tiny_config();
  std::mt19937_64 rng(6);
  Tape t;
  std::vector<Var> heads;
  for (int k = 0; k < c.k; ++k) heads.push_back(t.constant(random_mat(rng, 4, 2 * c.t_pred)));
  const Mat truth = random_mat(rng, 4, 2 * c.t_pred);
  const PredictionLoss loss = prediction_loss(heads, t.constant(truth));
  for (Eigen::Index b = 0; b < 4; ++b) {
    PredictionSet s;
    std::vector<Point2> tr;
    for (int k = 0; k < c.k; ++k) {
      std::vector<Point2> traj;
      for (int s2 = 0; s2 < c.t_pred; ++s2) {
        traj.push_back({heads[std::size_t(k)].value()(b, 2 * s2), heads[std::size_t(k)].value()(b, 2 * s2 + 1)});
      }
      s.trajectories.push_back(traj);
    }
    for (int s2 = 0; s2 < c.t_pred; ++s2) tr.push_back({truth(b, 2 * s2), truth(b, 2 * s2 + 1)});
    EXPECT_NEAR(loss.per_window.value()(b, 0), prediction_loss(s, tr), 1e-12);
    EXPECT_EQ(loss.best_head[std::size_t(b)], *s.best_index);
  }
}

TEST(PredictionLossProperty, HeadPermutationInvariant) {
  std::mt19937_64 rng(7);
  for (int c = 0; c < 20; ++c) {
    Tape t;
    std::vector<Var> heads;
    for (int k = 0; k < 5; ++k) heads.push_back(t.constant(random_mat(rng, 3, 8)));
    const Var truth = t.constant(random_mat(rng, 3, 8));
    const double a = diff::mean(prediction_loss(heads, truth).per_window).scalar();
    std::shuffle(heads.begin(), heads.end(), rng);
    EXPECT_EQ(diff::mean(prediction_loss(heads, truth).per_window).scalar(), a);
  }
}

TEST(TotalLoss, Examples) {
  EXPECT_EQ(total_loss(0.3, 0.7, 0.0, 1.0).total, 0.7);
  EXPECT_NEAR(total_loss(0.3, 0.7, 1.0, 1.0).total, 1.0, 1e-15);
  const LossBreakdown a = total_loss(0.3, 0.7, 0.4, 2.5);
  const LossBreakdown b = total_loss(0.3, 0.7, 0.8, 5.0);
  EXPECT_NEAR(b.total, 2.0 * a.total, 1e-12);
  EXPECT_NEAR(a.total, a.lambda1 * a.l_rec + a.lambda2 * a.l_pre, 1e-9);
  EXPECT_THROW(total_loss(1, 1, -1, 1), ConfigError);
}

TEST(TrainConfig, Presets) {
  const TrainConfig p = TrainConfig::paper_scale();
  EXPECT_EQ(p.epochs, 300);
  EXPECT_EQ(p.lr, 0.001);
  EXPECT_EQ(p.batch_size, 512);
  EXPECT_EQ(p.decay, 0.5);
  EXPECT_EQ(p.interval, 50);
  const TrainConfig d = TrainConfig::desk_scale();
  EXPECT_EQ(d.epochs, 100);
  EXPECT_EQ(d.batch_size, 64);
  const ModelConfig m = ModelConfig::desk_scale();
  EXPECT_EQ(m.hidden, 32);
  EXPECT_EQ(m.d, 32);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ForwardStep, LossComposition) {
  const ModelConfig c = tiny_config();
  const diff::ParamSet p = dense_params(c, 8);
  std::mt19937_64 rng(8);
  const BatchInput b1 = prepare_batch(random_windows(rng, 3, c.t_obs, c.t_pred, 3), c);
  const BatchInput b2 = prepare_batch(random_windows(rng, 3, c.t_obs, c.t_pred, 3), c);
  AlignmentConfig align;
  align.lambda1 = 0.25;
  align.lambda2 = 2.0;
  Tape t;
  BoundParams b(t, p, false);
  const StepForward f = forward_step(b, c, align, {b1, b2});
  // Mean over all 2 * B windows.
  const double pre = (f.sources[0].prediction.per_window.value().sum() +
                      f.sources[1].prediction.per_window.value().sum()) / 6.0;
  EXPECT_NEAR(f.l_pre.scalar(), pre, 1e-12);
  const double rec = recurrent_alignment_loss(f.sources[0].encoding.hidden,
                                              f.sources[1].encoding.hidden, align).scalar();
  EXPECT_EQ(f.l_rec.scalar(), rec);
  EXPECT_NEAR(f.total.scalar(), 0.25 * rec + 2.0 * pre, 1e-12);
}

TEST(ForwardStep, StrategyDispatch) {
  const ModelConfig c = tiny_config();
  const diff::ParamSet p = dense_params(c, 9);
  std::mt19937_64 rng(9);
  std::vector<BatchInput> in;
  for (int s = 0; s < 3; ++s) in.push_back(prepare_batch(random_windows(rng, 2, c.t_obs, c.t_pred, 2), c));
  Tape t;
  BoundParams b(t, p, false);
  AlignmentConfig align;
  const StepForward two = forward_step(b, c, align, {in[0], in[1]});
  align.strategy = AlignmentStrategy::Sequence;
  const StepForward seq = forward_step(b, c, align, {in[0], in[1]});
  EXPECT_EQ(seq.l_rec.scalar(), sequence_alignment_loss(two.sources[0].encoding.hidden,
                                                        two.sources[1].encoding.hidden, align)
                                    .scalar());
  align.strategy = AlignmentStrategy::State;
  const StepForward st = forward_step(b, c, align, {in[0], in[1]});
  EXPECT_EQ(st.l_rec.scalar(), state_alignment_loss(two.sources[0].encoding.contexts,
                                                    two.sources[1].encoding.contexts, align)
                                   .scalar());
  align.strategy = AlignmentStrategy::Recurrent;
  align.m = 3;
  const StepForward three = forward_step(b, c, align, in);
  std::vector<StepSets> doms;
  for (const auto& s : three.sources) doms.push_back(s.encoding.hidden);
  EXPECT_EQ(three.l_rec.scalar(), multi_source_loss(doms, align).scalar());
}

TEST(ForwardStep, UnequalBatchSizes) {
  const ModelConfig c = tiny_config();
  const diff::ParamSet p = dense_params(c, 10);
  std::mt19937_64 rng(10);
  Tape t;
  BoundParams b(t, p, false);
  EXPECT_THROW(forward_step(b, c, AlignmentConfig{},
                            {prepare_batch(random_windows(rng, 3, c.t_obs, c.t_pred, 1), c),
                             prepare_batch(random_windows(rng, 2, c.t_obs, c.t_pred, 1), c)}),
               ShapeError);
}

TEST(WeightSharing, BothSlotsBitIdentical) {
  const ModelConfig c = tiny_config();
  const diff::ParamSet p = dense_params(c, 11);
  std::mt19937_64 rng(11);
  const BatchInput in = prepare_batch(random_windows(rng, 4, c.t_obs, c.t_pred, 3), c);
  Tape t;
  BoundParams b(t, p, false);
  const StepForward f = forward_step(b, c, AlignmentConfig{}, {in, in});
  for (int s = 0; s < c.t_obs; ++s) {
    EXPECT_EQ(f.sources[0].encoding.hidden[std::size_t(s)].value(),
              f.sources[1].encoding.hidden[std::size_t(s)].value());
  }
  for (int k = 0; k < c.k; ++k) {
    EXPECT_EQ(f.sources[0].heads[std::size_t(k)].value(), f.sources[1].heads[std::size_t(k)].value());
  }
  EXPECT_EQ(f.l_rec.scalar(), 0.0);
}

TEST(WeightSharing, GradientsAccumulateIntoOneStore) {
  // With no alignment term the joint gradient is the sum of each pipeline's
  // gradient, which only holds if both pipelines read the same leaves.
  const ModelConfig c = tiny_config();
  const diff::ParamSet p = dense_params(c, 12);
  std::mt19937_64 rng(12);
  const BatchInput b1 = prepare_batch(random_windows(rng, 3, c.t_obs, c.t_pred, 3), c);
  const BatchInput b2 = prepare_batch(random_windows(rng, 3, c.t_obs, c.t_pred, 3), c);
  AlignmentConfig align;
  align.lambda1 = 0.0;
  auto grads = [&](const std::vector<BatchInput>& in, double scale) {
    Tape t;
    BoundParams b(t, p);
    const StepForward f = forward_step(b, c, align, in);
    t.backward(diff::scale(f.total, scale));
    return b.gradients();
  };
  const auto joint = grads({b1, b2}, 1.0);
  const auto g1 = grads({b1}, 0.5);
  const auto g2 = grads({b2}, 0.5);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    EXPECT_TRUE(joint[i].isApprox(g1[i] + g2[i], 1e-10) || joint[i].norm() < 1e-14) << p.name(i);
  }
}

TEST(EndToEndGradient, TinyConfigMatchesFiniteDifferences) {
  const ModelConfig c = tiny_config();
  diff::ParamSet p = dense_params(c, 13);
  std::mt19937_64 rng(13);
  const BatchInput b1 = prepare_batch(random_windows(rng, 3, c.t_obs, c.t_pred, 3), c);
  const BatchInput b2 = prepare_batch(random_windows(rng, 3, c.t_obs, c.t_pred, 3), c);
  const auto errors = ran::testing::param_gradient_errors(p, [&](const BoundParams& b) {
    return forward_step(b, c, AlignmentConfig{}, {b1, b2}).total;
  });
  for (std::size_t i = 0; i < errors.size(); ++i) EXPECT_LT(errors[i], 1e-4) << p.name(i);
}

TEST(Predict, ShapeAndDeterminism) {
  const ModelConfig c = tiny_config();
  const diff::ParamSet p = dense_params(c, 14);
  std::mt19937_64 rng(14);
  const auto ws = random_windows(rng, 3, c.t_obs, c.t_pred, 2);
  const PredictionSet a = predict(ws[0], p, c);
  ASSERT_EQ(a.trajectories.size(), std::size_t(c.k));
  for (const auto& traj : a.trajectories) EXPECT_EQ(traj.size(), std::size_t(c.t_pred));
  EXPECT_EQ(predict(ws[0], p, c).trajectories, a.trajectories);
  const auto batch = predict_batch(ws, p, c);
  ASSERT_EQ(batch.size(), 3u);
  for (int k = 0; k < c.k; ++k) {
    for (int s = 0; s < c.t_pred; ++s) {
      EXPECT_NEAR(batch[0].trajectories[k][s].x, a.trajectories[k][s].x, 1e-12);
    }
  }
}

TEST(Predict, ObservationOnlyWindow) {
  const ModelConfig c = tiny_config();
  std::mt19937_64 rng(15);
  auto w = ran::testing::random_window(rng, c.t_obs, c.t_pred, 2);
  const auto full = predict(w, dense_params(c, 15), c);
  w.future.clear();
  EXPECT_EQ(predict(w, dense_params(c, 15), c).trajectories, full.trajectories);
}

TEST(Predict, AbsoluteCoordinates) {
  // Shifting the whole window shifts every prediction by the same offset.
  const ModelConfig c = tiny_config();
  const diff::ParamSet p = dense_params(c, 16);
  std::mt19937_64 rng(16);
  auto w = ran::testing::random_window(rng, c.t_obs, c.t_pred, 2);
  const auto base = predict(w, p, c);
  for (auto& o : w.observed) o = {o.x + 8.0, o.y - 4.0};
  for (auto& step : w.neighbors) {
    for (auto& n : step) n.position = {n.position.x + 8.0, n.position.y - 4.0};
  }
  const auto moved = predict(w, p, c);
  EXPECT_NEAR(moved.trajectories[1][2].x, base.trajectories[1][2].x + 8.0, 1e-9);
  EXPECT_NEAR(moved.trajectories[1][2].y, base.trajectories[1][2].y - 4.0, 1e-9);
}

TEST(Train, DuplicatedDomainSupervisedLossHalves) {
  ModelConfig c = ModelConfig::desk_scale();
  c.a_max = 4;
  const auto windows = synth_windows(c, 16, 21);
  TrainConfig cfg = TrainConfig::desk_scale();
  cfg.epochs = 50;
  cfg.alignment.lambda1 = 0.0;
  ASSERT_GE(windows.size(), std::size_t(cfg.batch_size));
  const TrainResult r = train({windows, windows}, c, cfg);
  ASSERT_EQ(r.log.size(), 50u);
  EXPECT_LE(r.log.back().loss.l_pre, 0.5 * r.log.front().loss.l_pre);
  EXPECT_EQ(r.log.back().loss.total, r.log.back().loss.l_pre);
}

TEST(Train, DeterministicLogs) {
  const ModelConfig c = tiny_config();
  const auto a = synth_windows(c, 6, 1, 0), b = synth_windows(c, 6, 2, 1);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 99;
  std::ostringstream l1, l2;
  write_training_log(l1, train({a, b}, c, cfg).log);
  write_training_log(l2, train({a, b}, c, cfg).log);
  EXPECT_EQ(l1.str(), l2.str());
  cfg.seed = 100;
  std::ostringstream l3;
  write_training_log(l3, train({a, b}, c, cfg).log);
  EXPECT_NE(l1.str(), l3.str());
}

TEST(Train, LogFormatAndSchedule) {
  const ModelConfig c = tiny_config();
  const auto a = synth_windows(c, 4, 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.interval = 2;
  cfg.decay = 0.5;
  cfg.lr = 0.01;
  const TrainResult r = train({a, a}, c, cfg);
  std::ostringstream out;
  write_training_log(out, r.log);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,l_rec,l_pre,total,lr");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3u);
  EXPECT_EQ(r.log[1].lr, 0.01);
  EXPECT_EQ(r.log[2].lr, 0.005);
  EXPECT_EQ(r.log[0].epoch, 0);
}

TEST(Train, CallbackSeesSingleParameterStore) {
  const ModelConfig c = tiny_config();
  const auto a = synth_windows(c, 4, 4), b = synth_windows(c, 4, 5, 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  const diff::ParamSet* seen = nullptr;
  diff::ParamSet last;
  const TrainResult r = train({a, b}, c, cfg, [&](const EpochLog&, const diff::ParamSet& p) {
    if (seen) EXPECT_EQ(seen, &p);
    seen = &p;
    last = p;
  });
  EXPECT_EQ(last, r.params);
}

TEST(Train, WritesCheckpoints) {
  const ModelConfig c = tiny_config();
  const auto a = synth_windows(c, 4, 6);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.checkpoint_interval = 1;
  cfg.checkpoint_path = std::filesystem::temp_directory_path() / "ran_train_ckpt.bin";
  std::filesystem::remove(cfg.checkpoint_path);
  train({a, a}, c, cfg);
  EXPECT_TRUE(std::filesystem::exists(cfg.checkpoint_path));
  std::filesystem::remove(cfg.checkpoint_path);
}

TEST(Train, Errors) {
  const ModelConfig c = tiny_config();
  const auto a = synth_windows(c, 2, 7);
  TrainConfig cfg;
  cfg.batch_size = int(a.size()) + 1;
  EXPECT_THROW(train({a, a}, c, cfg), ConfigError);
  EXPECT_THROW(train({}, c, cfg), ConfigError);

  auto huge = a;
  for (auto& w : huge) {
    for (auto& p : w.future) p.x = 1e300;
  }
  cfg.batch_size = 2;
  cfg.epochs = 1;
  try {
    train({huge, huge}, c, cfg);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
  }
}

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ran/cli/commands.hpp"
#include "ran/diff/checkpoint.hpp"
#include "ran/error.hpp"
#include "ran/ingest/ingest.hpp"

using namespace ran;
namespace fs = std::filesystem;

namespace {

// Small model so every CLI run finishes in well under a second.
constexpr const char* kSmall =
    "t_obs = 4\nt_pred = 3\nK = 3\nd = 6\nhidden = 8\nembed_hidden = 6\nembed_out = 5\n"
    "dec_hidden = 6\na_max = 2\nbatch = 8\n";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ran_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path config(const std::string& extra, const std::string& name = "run.cfg") {
    return write(name, std::string(kSmall) + "epochs = 2\nsources = a, b\ntarget = c\nout_dir = out\n" +
                           "domain.a.n_agents = 6\ndomain.b.n_agents = 6\ndomain.b.speed_mean = 1.6\n"
                           "domain.c.n_agents = 6\n" + extra);
  }

  int run(std::vector<std::string> args) {
    std::vector<const char*> argv = {"ran"};
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(int(argv.size()), argv.data(), out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return RunConfig::parse(in);
}

}  // namespace

TEST(RunConfigParse, KeysAndComments) {
  const RunConfig c = parse(
      "# comment\npreset = desk\nsources = a , b\ntarget = c\nseed = 7 # trailing\n"
      "lambda1 = 0.5\nmeasure = coral\nstrategy = state\nK = 5\ndomain.a.speed_mean = 0.3\n");
  EXPECT_EQ(c.sources, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c.target, "c");
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.train.alignment.lambda1, 0.5);
  EXPECT_EQ(c.train.alignment.measure, DiscrepancyKind::CORAL);
  EXPECT_EQ(c.train.alignment.strategy, AlignmentStrategy::State);
  EXPECT_EQ(c.train.alignment.m, 2);
  EXPECT_EQ(c.model.k, 5);
  EXPECT_EQ(c.domain("a").synth.speed_mean, 0.3);
  EXPECT_TRUE(c.domain("a").synthetic);
  // Sources need at least one domain key.
  EXPECT_THROW(c.domain("b"), ConfigError);
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfigParse, Presets) {
  const RunConfig paper = parse("preset = paper\nsources = a, b\n");
  EXPECT_EQ(paper.train.epochs, 300);
  EXPECT_EQ(paper.train.batch_size, 512);
  EXPECT_EQ(paper.model.k, 20);
  const RunConfig over = parse("epochs = 3\npreset = paper\nsources = a, b\n");
  EXPECT_EQ(over.train.epochs, 3);
  EXPECT_EQ(parse("sources = a, b\n").train.epochs, TrainConfig::desk_scale().epochs);
  EXPECT_THROW(parse("preset = huge\n"), ConfigError);
}

TEST(RunConfigParse, Errors) {
  EXPECT_THROW(parse("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse("epochs = 1\nepochs = 2\n"), ConfigError);
  EXPECT_THROW(parse("epochs\n"), ConfigError);
  EXPECT_THROW(parse("epochs = many\n"), ConfigError);
  EXPECT_THROW(parse("measure = euclid\n"), ConfigError);
  EXPECT_THROW(parse("domain.a.path = x.txt\ndomain.a.speed_mean = 1\n"), ConfigError);
  EXPECT_THROW(parse("sources = a, a\n").validate(), ConfigError);
  try {
    parse("bogus = 1\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
}

TEST_F(CliTest, RelativePathsResolveAgainstConfig) {
  fs::create_directories(dir_ / "data");
  write("data/eth.txt", "0 1 0.0 0.0\n");
  const fs::path cfg = write("run.cfg", "sources = eth, b\ndomain.eth.path = data/eth.txt\n");
  const RunConfig c = RunConfig::load(cfg);
  EXPECT_FALSE(c.domain("eth").synthetic);
  EXPECT_EQ(fs::weakly_canonical(c.domain("eth").dataset.path),
            fs::weakly_canonical(dir_ / "data/eth.txt"));
  const fs::path missing = write("bad.cfg", "sources = eth, b\ndomain.eth.path = nope.txt\n");
  EXPECT_THROW(RunConfig::load(missing).validate(), ConfigError);
}

TEST_F(CliTest, UnknownKeyExitsWithOne) {
  const fs::path cfg = config("bogus = 1\n");
  EXPECT_EQ(run({"train", "-c", cfg.string(), "-q"}), 1);
  EXPECT_NE(err_.str().find("bogus"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"fly"}), 1);
  EXPECT_EQ(run({"train"}), 1);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(CliTest, TrainNeedsTwoSources) {
  const fs::path cfg = write("one.cfg", std::string(kSmall) + "sources = a\n");
  try {
    cmd_train(RunConfig::load(cfg));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2 source domains"), std::string::npos);
  }
  EXPECT_EQ(run({"train", "-c", cfg.string(), "-q"}), 1);
}

TEST_F(CliTest, TrainWritesCheckpointAndLog) {
  const fs::path cfg = config("");
  ASSERT_EQ(run({"train", "-c", cfg.string(), "-q"}), 0) << err_.str();
  const fs::path ckpt = dir_ / "out/model.ckpt";
  ASSERT_TRUE(fs::exists(ckpt));
  const RunConfig rc = RunConfig::load(cfg);
  const diff::ParamSet p = load_model(rc, ckpt);
  EXPECT_EQ(p.size(), init_model_params(rc.model, 0).size());
  const auto log = lines(dir_ / "out/train_log.csv");
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0], "epoch,l_rec,l_pre,total,lr");
  EXPECT_EQ(log[1].rfind("0,", 0), 0u);
}

TEST_F(CliTest, TrainIsDeterministic) {
  const fs::path cfg = config("");
  ASSERT_EQ(run({"train", "-c", cfg.string(), "-q"}), 0);
  const std::string log1 = slurp(dir_ / "out/train_log.csv");
  const std::string ckpt1 = slurp(dir_ / "out/model.ckpt");
  ASSERT_EQ(run({"train", "-c", cfg.string(), "-q"}), 0);
  EXPECT_EQ(slurp(dir_ / "out/train_log.csv"), log1);
  EXPECT_EQ(slurp(dir_ / "out/model.ckpt"), ckpt1);
}

TEST_F(CliTest, EvalMemorizesStationaryDomain) {
  const std::string still =
      "speed_mean = 0\nspeed_std = 0\nnoise_std = 0\n";
  std::string extra = "epochs = 150\nlr = 0.01\n";
  for (const char* d : {"a", "b", "c"}) {
    std::istringstream in(still);
    for (std::string l; std::getline(in, l);) extra += std::string("domain.") + d + "." + l + "\n";
  }
  const fs::path cfg = write("still.cfg", std::string(kSmall) + "sources = a, b\ntarget = c\n" +
                                              "out_dir = out\n" + extra);
  ASSERT_EQ(run({"train", "-c", cfg.string(), "-q"}), 0) << err_.str();
  ASSERT_EQ(run({"eval", "-c", cfg.string(), "-m", (dir_ / "out/model.ckpt").string()}), 0)
      << err_.str();
  const auto report = lines(dir_ / "out/eval_report.csv");
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0], "domain,subset,n_windows,ade,fde");
  const MetricReport r = cmd_eval(RunConfig::load(cfg), dir_ / "out/model.ckpt");
  EXPECT_LT(r.ade, 0.05);
  EXPECT_EQ(r.domain_name, "c");
}

TEST_F(CliTest, EvalMissingCheckpointExitsWithTwo) {
  const fs::path cfg = config("");
  EXPECT_EQ(run({"eval", "-c", cfg.string(), "-m", (dir_ / "none.ckpt").string()}), 2);
  EXPECT_EQ(run({"export-features", "-c", cfg.string(), "-m", (dir_ / "none.ckpt").string()}), 2);
}

TEST_F(CliTest, EvalRejectsMismatchedCheckpoint) {
  const fs::path cfg = config("");
  ASSERT_EQ(run({"train", "-c", cfg.string(), "-q"}), 0);
  const fs::path other = config("hidden = 9\n", "other.cfg");
  EXPECT_NE(run({"eval", "-c", other.string(), "-m", (dir_ / "out/model.ckpt").string()}), 0);
}

TEST_F(CliTest, PredictOneWindow) {
  // Default horizon and head count with a reduced width.
  const fs::path cfg = write(
      "pred.cfg",
      "sources = a, b\nout_dir = out\nepochs = 1\nbatch = 4\nhidden = 8\nd = 6\n"
      "embed_hidden = 6\nembed_out = 5\ndec_hidden = 6\ndomain.a.n_agents = 4\n"
      "domain.b.n_agents = 4\n");
  ASSERT_EQ(run({"train", "-c", cfg.string(), "-q"}), 0) << err_.str();
  std::string obs;
  for (int f = 0; f < 8; ++f) {
    obs += std::to_string(10 * f) + "\t7\t" + std::to_string(0.4 * f) + "\t1.5\n";
  }
  const fs::path input = write("obs.txt", obs);
  const fs::path out = dir_ / "pred.csv";
  ASSERT_EQ(run({"predict", "-c", cfg.string(), "-m", (dir_ / "out/model.ckpt").string(), "-i",
                 input.string(), "-o", out.string()}),
            0)
      << err_.str();
  const auto rows = lines(out);
  ASSERT_EQ(rows.size(), 1u + 20u * 12u);
  EXPECT_EQ(rows[0], "window_id,head,t,x,y");
  EXPECT_EQ(rows[1].rfind("0,0,0,", 0), 0u);
  EXPECT_EQ(rows.back().rfind("0,19,11,", 0), 0u);
  const std::string first = slurp(out);
  ASSERT_EQ(run({"predict", "-c", cfg.string(), "-m", (dir_ / "out/model.ckpt").string(), "-i",
                 input.string(), "-o", out.string()}),
            0);
  EXPECT_EQ(slurp(out), first);

  // Too short for a window: header only.
  const fs::path short_input = write("short.txt", "0 1 0 0\n10 1 1 0\n");
  EXPECT_EQ(cmd_predict(RunConfig::load(cfg), dir_ / "out/model.ckpt", short_input, out), 0u);
  EXPECT_EQ(lines(out), (std::vector<std::string>{"window_id,head,t,x,y"}));
}

TEST_F(CliTest, SynthWritesReparseableFiles) {
  const fs::path cfg = config("");
  ASSERT_EQ(run({"synth", "-c", cfg.string()}), 0) << err_.str();
  const RunConfig rc = RunConfig::load(cfg);
  for (const char* d : {"a", "b", "c"}) {
    const fs::path p = dir_ / "out" / (std::string(d) + ".txt");
    ASSERT_TRUE(fs::exists(p)) << d;
    DatasetConfig dc;
    dc.path = p;
    EXPECT_EQ(load_trajectory_file(dc), synth_domain(rc.domain(d).synth)) << d;
  }
  const std::string a1 = slurp(dir_ / "out/a.txt");
  ASSERT_EQ(run({"synth", "-c", cfg.string()}), 0);
  EXPECT_EQ(slurp(dir_ / "out/a.txt"), a1);
  EXPECT_NE(slurp(dir_ / "out/b.txt"), a1);
}

TEST_F(CliTest, SynthNeedsSyntheticDomains) {
  write("t.txt", "0 1 0 0\n");
  const fs::path cfg = write("files.cfg", "sources = x, y\ndomain.x.path = t.txt\ndomain.y.path = t.txt\n");
  EXPECT_EQ(run({"synth", "-c", cfg.string()}), 1);
}

TEST_F(CliTest, ExportFeatures) {
  const fs::path cfg = write(
      "exp.cfg", std::string(kSmall) +
                     "epochs = 2\nsources = a, b\nout_dir = out\nexport_max_windows = 10\n"
                     "domain.a.n_agents = 6\ndomain.b.n_agents = 6\ndomain.b.speed_mean = 1.6\n");
  ASSERT_EQ(run({"train", "-c", cfg.string(), "-q"}), 0) << err_.str();
  ASSERT_EQ(run({"export-features", "-c", cfg.string(), "-m", (dir_ / "out/model.ckpt").string()}),
            0)
      << err_.str();
  const auto csv = lines(dir_ / "out/features.csv");
  ASSERT_EQ(csv.size(), 21u);
  EXPECT_EQ(csv[0].rfind("domain_id,window_id,f0,", 0), 0u);
  const std::string svg = slurp(dir_ / "out/features.svg");
  EXPECT_NE(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\""), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("0.3"), std::string::npos);
}

TEST_F(CliTest, DomainIds) {
  const RunConfig rc = RunConfig::load(config(""));
  EXPECT_EQ(domain_id_of(rc, "a"), 0);
  EXPECT_EQ(domain_id_of(rc, "b"), 1);
  EXPECT_EQ(domain_id_of(rc, "c"), 2);
  const auto train = source_training_windows(rc);
  ASSERT_EQ(train.size(), 2u);
  for (const auto& w : train[1]) EXPECT_EQ(w.domain_id, 1);
  for (const auto& w : test_windows(rc, "c")) {
    EXPECT_EQ(w.domain_id, 2);
    EXPECT_EQ(w.future.size(), 3u);
  }
}

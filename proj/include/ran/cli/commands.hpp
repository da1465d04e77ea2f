// Subcommands of the `ran` tool. Each writes into RunConfig::out_dir unless
// an explicit output path is given.
//
//   train            model.ckpt, train_log.csv
//   eval             eval_report.csv (target test split)
//   predict          predictions.csv "window_id,head,t,x,y"
//   synth            <domain>.txt per synthetic domain
//   export-features  features.csv, features.svg

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ran/cli/run_config.hpp"
#include "ran/eval/features.hpp"
#include "ran/eval/metrics.hpp"

namespace ran {

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  TrainResult result;
};

// Domain ids follow the order of `sources`; the target gets the next id.
int domain_id_of(const RunConfig& config, const std::string& name);

// Train-split windows of every source, in `sources` order.
std::vector<std::vector<ObservationWindow>> source_training_windows(const RunConfig& config);
// Test-split windows of `name`, built with the eval stride.
std::vector<ObservationWindow> test_windows(const RunConfig& config, const std::string& name);

// Loads a checkpoint and checks it against the configured model dims.
diff::ParamSet load_model(const RunConfig& config, const std::filesystem::path& checkpoint);

TrainOutputs cmd_train(const RunConfig& config, std::ostream* progress = nullptr);

MetricReport cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint,
                      const std::optional<std::filesystem::path>& out = std::nullopt);

// Returns the number of prediction rows written.
std::size_t cmd_predict(const RunConfig& config, const std::filesystem::path& checkpoint,
                        const std::filesystem::path& input,
                        const std::optional<std::filesystem::path>& out = std::nullopt);
void write_predictions(std::ostream& out, const std::vector<PredictionSet>& predictions);

std::vector<std::filesystem::path> cmd_synth(const RunConfig& config);

FeatureDump cmd_export_features(const RunConfig& config, const std::filesystem::path& checkpoint);

// Entry point of the executable. Exit codes: 0 success, 1 usage or config
// error, 2 runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ran

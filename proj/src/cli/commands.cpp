#include "ran/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>

#include "ran/diff/checkpoint.hpp"
#include "ran/error.hpp"

namespace ran {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void require_sources(const RunConfig& config) {
  if (config.sources.size() < 2) throw ConfigError("need ≥2 source domains");
}

void require_target(const RunConfig& config) {
  if (config.target.empty()) throw ConfigError("missing key 'target'");
}

}  // namespace

int domain_id_of(const RunConfig& config, const std::string& name) {
  auto it = std::find(config.sources.begin(), config.sources.end(), name);
  if (it != config.sources.end()) return int(it - config.sources.begin());
  if (name == config.target) return int(config.sources.size());
  throw ConfigError("domain '" + name + "' is neither a source nor the target");
}

std::vector<std::vector<ObservationWindow>> source_training_windows(const RunConfig& config) {
  std::vector<std::vector<ObservationWindow>> out;
  for (const std::string& name : config.sources) {
    SceneSplit split = load_domain_split(config.domain(name), config.train.seed);
    out.push_back(build_windows(split.train, config.model.t_obs, config.model.t_pred,
                                config.stride, domain_id_of(config, name)));
  }
  return out;
}

std::vector<ObservationWindow> test_windows(const RunConfig& config, const std::string& name) {
  SceneSplit split = load_domain_split(config.domain(name), config.train.seed);
  return build_windows(split.test, config.model.t_obs, config.model.t_pred,
                       config.effective_eval_stride(), domain_id_of(config, name));
}

diff::ParamSet load_model(const RunConfig& config, const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw IoError("checkpoint not found: " + checkpoint.string());
  diff::ParamSet params = diff::load_checkpoint(checkpoint);
  check_compatible(params, config.model);
  return params;
}

TrainOutputs cmd_train(const RunConfig& config, std::ostream* progress) {
  require_sources(config);
  config.validate();
  TrainOutputs outputs;
  outputs.checkpoint = config.out_dir / "model.ckpt";
  outputs.log = config.out_dir / "train_log.csv";

  TrainConfig train_cfg = config.train;
  train_cfg.alignment.m = int(config.sources.size());
  if (train_cfg.checkpoint_interval > 0 && train_cfg.checkpoint_path.empty()) {
    train_cfg.checkpoint_path = outputs.checkpoint;
  }
  const auto sources = source_training_windows(config);
  EpochCallback cb;
  if (progress) {
    cb = [progress](const EpochLog& e, const diff::ParamSet&) {
      *progress << "epoch " << e.epoch << " l_rec=" << e.loss.l_rec << " l_pre=" << e.loss.l_pre
                << " total=" << e.loss.total << " lr=" << e.lr << '\n';
    };
  }
  outputs.result = train(sources, config.model, train_cfg, cb);

  fs::create_directories(config.out_dir);
  diff::save_checkpoint(outputs.checkpoint, outputs.result.params);
  std::ofstream log = open_output(outputs.log);
  write_training_log(log, outputs.result.log);
  finish(log, outputs.log);
  return outputs;
}

MetricReport cmd_eval(const RunConfig& config, const fs::path& checkpoint,
                      const std::optional<fs::path>& out) {
  require_target(config);
  config.validate();
  const diff::ParamSet params = load_model(config, checkpoint);
  const auto windows = test_windows(config, config.target);
  MetricReport report = evaluate(params, config.model, windows, config.target);
  const fs::path path = out.value_or(config.out_dir / "eval_report.csv");
  std::ofstream f = open_output(path);
  write_metric_report(f, {report});
  finish(f, path);
  return report;
}

void write_predictions(std::ostream& out, const std::vector<PredictionSet>& predictions) {
  out << "window_id,head,t,x,y\n";
  for (std::size_t w = 0; w < predictions.size(); ++w) {
    const auto& trajs = predictions[w].trajectories;
    for (std::size_t k = 0; k < trajs.size(); ++k) {
      for (std::size_t t = 0; t < trajs[k].size(); ++t) {
        out << w << ',' << k << ',' << t << ',' << format_number(trajs[k][t].x) << ','
            << format_number(trajs[k][t].y) << '\n';
      }
    }
  }
}

std::size_t cmd_predict(const RunConfig& config, const fs::path& checkpoint, const fs::path& input,
                        const std::optional<fs::path>& out) {
  config.model.validate();
  const diff::ParamSet params = load_model(config, checkpoint);
  DatasetConfig ds;
  ds.path = input;
  ds.name = input.stem().string();
  const SceneTable table = load_trajectory_file(ds);
  const auto windows =
      build_observation_windows(table, config.model.t_obs, config.effective_eval_stride());
  const auto predictions = predict_batch(windows, params, config.model);
  const fs::path path = out.value_or(config.out_dir / "predictions.csv");
  std::ofstream f = open_output(path);
  write_predictions(f, predictions);
  finish(f, path);
  return predictions.size() * std::size_t(config.model.k) * std::size_t(config.model.t_pred);
}

std::vector<fs::path> cmd_synth(const RunConfig& config) {
  std::vector<fs::path> written;
  for (const auto& [name, spec] : config.domains) {
    if (!spec.synthetic) continue;
    spec.synth.validate(config.model.t_obs + config.model.t_pred);
    const fs::path path = config.out_dir / (name + ".txt");
    std::ofstream f = open_output(path);
    write_trajectory_file(f, synth_domain(spec.synth));
    finish(f, path);
    written.push_back(path);
  }
  if (written.empty()) throw ConfigError("no synthetic domains defined");
  return written;
}

FeatureDump cmd_export_features(const RunConfig& config, const fs::path& checkpoint) {
  std::vector<std::string> names = config.sources;
  if (!config.target.empty() &&
      std::find(names.begin(), names.end(), config.target) == names.end()) {
    names.push_back(config.target);
  }
  if (names.size() < 2) throw ConfigError("feature export needs at least 2 configured domains");
  config.validate();
  const diff::ParamSet params = load_model(config, checkpoint);

  std::vector<std::vector<ObservationWindow>> storage;
  for (const std::string& name : names) {
    auto w = test_windows(config, name);
    if (config.export_max_windows > 0 && w.size() > std::size_t(config.export_max_windows)) {
      w.resize(std::size_t(config.export_max_windows));
    }
    storage.push_back(std::move(w));
  }
  std::vector<DomainWindows> domains;
  for (std::size_t i = 0; i < names.size(); ++i) {
    domains.push_back({domain_id_of(config, names[i]), storage[i]});
  }
  const fs::path csv_path = config.out_dir / "features.csv";
  const fs::path svg_path = config.out_dir / "features.svg";
  std::ofstream csv = open_output(csv_path);
  std::ofstream svg = open_output(svg_path);
  FeatureDump dump = export_features(params, config.model, domains, csv, &svg);
  finish(csv, csv_path);
  finish(svg, svg_path);
  return dump;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recurrent aligned trajectory prediction"};
  app.require_subcommand(1);
  std::string config_path, checkpoint, input, output;
  bool quiet = false;

  auto* train_cmd = app.add_subcommand("train", "train on the source domains");
  train_cmd->add_option("-c,--config", config_path, "run config")->required();
  train_cmd->add_flag("-q,--quiet", quiet, "no per-epoch progress");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate on the target test split");
  eval_cmd->add_option("-c,--config", config_path, "run config")->required();
  eval_cmd->add_option("-m,--checkpoint", checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("-o,--out", output, "report path");

  auto* predict_cmd = app.add_subcommand("predict", "predict futures for a trajectory file");
  predict_cmd->add_option("-c,--config", config_path, "run config")->required();
  predict_cmd->add_option("-m,--checkpoint", checkpoint, "model checkpoint")->required();
  predict_cmd->add_option("-i,--input", input, "trajectory file")->required();
  predict_cmd->add_option("-o,--out", output, "predictions path");

  auto* synth_cmd = app.add_subcommand("synth", "write synthetic domains as trajectory files");
  synth_cmd->add_option("-c,--config", config_path, "run config")->required();

  auto* export_cmd = app.add_subcommand("export-features", "dump encoder features");
  export_cmd->add_option("-c,--config", config_path, "run config")->required();
  export_cmd->add_option("-m,--checkpoint", checkpoint, "model checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  const std::optional<fs::path> out_path =
      output.empty() ? std::nullopt : std::optional<fs::path>(output);
  try {
    const RunConfig config = RunConfig::load(config_path);
    if (*train_cmd) {
      const TrainOutputs r = cmd_train(config, quiet ? nullptr : &out);
      out << "wrote " << r.checkpoint.string() << " and " << r.log.string() << '\n';
    } else if (*eval_cmd) {
      const MetricReport r = cmd_eval(config, checkpoint, out_path);
      out << r.domain_name << ": n=" << r.n_windows << " ADE=" << r.ade << " FDE=" << r.fde
          << '\n';
    } else if (*predict_cmd) {
      const std::size_t rows = cmd_predict(config, checkpoint, input, out_path);
      out << "wrote " << rows << " prediction rows\n";
    } else if (*synth_cmd) {
      for (const fs::path& p : cmd_synth(config)) out << "wrote " << p.string() << '\n';
    } else if (*export_cmd) {
      const FeatureDump d = cmd_export_features(config, checkpoint);
      out << "wrote " << d.rows.size() << " feature rows\n";
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace ran

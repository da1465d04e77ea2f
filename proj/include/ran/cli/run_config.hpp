// Flat key=value run configuration.
//
//   # comment
//   preset = desk                  # desk | paper, applied before other keys
//   sources = eth, sdd             # >= 2 source domains
//   target = nba
//   domain.eth.path = data/eth.txt # file-backed domain (relative to the config)
//   domain.eth.unit_scale = 1.0
//   domain.nba.speed_mean = 1.6    # domains without a path are synthetic
//
// Unknown keys are rejected.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ran/ingest/ingest.hpp"
#include "ran/train/trainer.hpp"

namespace ran {

struct DomainSpec {
  std::string name;
  bool synthetic = true;
  DatasetConfig dataset;     // path, unit_scale, split_ratio (file-backed)
  SynthDomainConfig synth;   // generator parameters (synthetic)
};

struct RunConfig {
  std::map<std::string, DomainSpec> domains;
  std::vector<std::string> sources;
  std::string target;
  ModelConfig model = ModelConfig::desk_scale();
  TrainConfig train = TrainConfig::desk_scale();
  int stride = 1;
  int eval_stride = 0;  // 0: t_pred, i.e. non-overlapping futures
  int export_max_windows = 0;  // per domain, 0: all
  std::filesystem::path out_dir = ".";

  // Relative paths are resolved against `base_dir`.
  static RunConfig parse(std::istream& in, const std::filesystem::path& base_dir = ".");
  static RunConfig load(const std::filesystem::path& path);

  const DomainSpec& domain(const std::string& name) const;
  int effective_eval_stride() const { return eval_stride > 0 ? eval_stride : model.t_pred; }

  // Checks module preconditions; file-backed domain paths must exist.
  void validate() const;
};

// Scene of a domain: parsed from its file or generated.
SceneTable load_domain_table(const DomainSpec& spec);

// Agent-level split of a domain using the run seed.
SceneSplit load_domain_split(const DomainSpec& spec, std::uint64_t seed);

}  // namespace ran

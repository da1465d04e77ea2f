// Trajectory file I/O, agent-level train/test splits and the synthetic
// multi-domain scene generator.
//
// Canonical text format: one record per line, "frame_id agent_id x y",
// whitespace separated. Blank lines and lines starting with '#' are skipped.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>

#include "ran/core/trajectory.hpp"

namespace ran {

struct DatasetConfig {
  std::filesystem::path path;
  double unit_scale = 1.0;  // meters per raw unit
  std::string name;
  double split_ratio = 0.8;  // fraction of agents in the train split

  void validate() const;
};

// Throws ParseError (with line number) on malformed lines and
// DuplicateRecordError on a repeated (frame_id, agent_id).
SceneTable parse_trajectory_file(std::istream& in, const DatasetConfig& config);
SceneTable load_trajectory_file(const DatasetConfig& config);

// Writes the canonical format with shortest round-trip number formatting.
void write_trajectory_file(std::ostream& out, const SceneTable& table);

struct SceneSplit {
  SceneTable train;
  SceneTable test;
};

// Partitions agents (never individual records) after a seeded shuffle. The
// train split receives round(split_ratio * n_agents) agents, clamped so both
// sides are non-empty. Throws SplitError with fewer than two agents.
SceneSplit split_train_test(const SceneTable& table, double split_ratio, std::uint64_t seed);

struct SynthDomainConfig {
  int n_agents = 24;
  int n_frames = 60;
  double speed_mean = 1.2;       // m/s
  double speed_std = 0.2;        // m/s
  double turn_rate_std = 0.05;   // rad/step
  double repulsion_radius = 1.0; // meters
  double noise_std = 0.02;       // meters
  std::uint64_t seed = 1;
  double frame_interval = 0.4;   // seconds
  double area = 20.0;            // side of the square scene, meters

  // `min_frames` is the window length the domain must support.
  void validate(int min_frames = 1) const;
};

// Goal-directed walkers: each agent keeps a constant speed, steers toward a
// goal, is deflected away from agents inside repulsion_radius and receives a
// Gaussian heading perturbation per step. Reported positions carry Gaussian
// noise. Deterministic for a given config.
SceneTable synth_domain(const SynthDomainConfig& config);

}  // namespace ran

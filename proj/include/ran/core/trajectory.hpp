// Trajectory data model shared by ingestion, modelling and evaluation.

#pragma once

#include <cstdint>
#include <vector>

namespace ran {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct SceneRecord {
  std::int64_t frame_id = 0;
  std::int64_t agent_id = 0;
  double x = 0.0;  // meters
  double y = 0.0;

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

// All tracked positions of one scene, sorted by (frame_id, agent_id) with
// unique keys.
struct SceneTable {
  std::vector<SceneRecord> records;
  double frame_interval = 0.4;  // seconds

  // Sorts records; throws DuplicateRecordError on a repeated (frame, agent).
  void normalize();
  // Sorted distinct agent ids.
  std::vector<std::int64_t> agents() const;

  friend bool operator==(const SceneTable&, const SceneTable&) = default;
};

struct Neighbor {
  std::int64_t agent_id = 0;
  Point2 position;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// One prediction instance: T_obs observed points with the co-present agents at
// each observed step, and T_pred future points.
struct ObservationWindow {
  std::int64_t agent_id = 0;
  std::int64_t start_frame = 0;
  int domain_id = 0;
  std::vector<Point2> observed;
  std::vector<std::vector<Neighbor>> neighbors;  // one set per observed step
  std::vector<Point2> future;

  std::size_t t_obs() const { return observed.size(); }
  std::size_t t_pred() const { return future.size(); }
  // Throws ShapeError / NumericError when length or finiteness invariants fail.
  void validate(std::size_t t_obs, std::size_t t_pred) const;
};

// Equal-size group of windows from one source domain.
struct DomainBatch {
  int domain_id = 0;
  std::vector<ObservationWindow> windows;

  std::size_t batch_size() const { return windows.size(); }
  // Non-empty and homogeneous domain ids.
  void validate() const;
};

// Windows of t_obs + t_pred consecutive scene frames per agent, starting every
// `stride` frames. Frames are consecutive when adjacent in the table's sorted
// list of distinct frame ids. Output is ordered by (agent_id, start_frame).
std::vector<ObservationWindow> build_windows(const SceneTable& table, int t_obs, int t_pred,
                                             int stride, int domain_id = 0);

// Windows with observed steps only (empty future), for inference input.
std::vector<ObservationWindow> build_observation_windows(const SceneTable& table, int t_obs,
                                                         int stride, int domain_id = 0);

// Neighbors of one window padded to a fixed count per step.
struct PaddedNeighbors {
  int a_max = 0;
  // Row-major (t_obs * a_max) positions; padding rows are zero.
  std::vector<Point2> positions;
  // t_obs * a_max flags, true for real neighbors.
  std::vector<bool> mask;

  Point2 at(std::size_t step, std::size_t slot) const {
    return positions[step * std::size_t(a_max) + slot];
  }
  bool real(std::size_t step, std::size_t slot) const {
    return mask[step * std::size_t(a_max) + slot];
  }
};

// Keeps the a_max neighbors nearest to the agent at each step, nearest first.
// Equidistant neighbors are ordered by lower agent id.
PaddedNeighbors neighbor_mask(const ObservationWindow& window, int a_max);

}  // namespace ran

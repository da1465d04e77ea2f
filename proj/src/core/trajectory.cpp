#include "ran/core/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

#include "ran/error.hpp"

namespace ran {

void SceneTable::normalize() {
  std::sort(records.begin(), records.end(), [](const SceneRecord& a, const SceneRecord& b) {
    return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.agent_id < b.agent_id;
  });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].frame_id == records[i - 1].frame_id &&
        records[i].agent_id == records[i - 1].agent_id) {
      throw DuplicateRecordError("duplicate record for frame " +
                                 std::to_string(records[i].frame_id) + ", agent " +
                                 std::to_string(records[i].agent_id));
    }
  }
}

std::vector<std::int64_t> SceneTable::agents() const {
  std::vector<std::int64_t> ids;
  ids.reserve(records.size());
  for (const SceneRecord& r : records) ids.push_back(r.agent_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

namespace {

bool finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

}  // namespace

void ObservationWindow::validate(std::size_t want_obs, std::size_t want_pred) const {
  if (observed.size() != want_obs || neighbors.size() != want_obs || future.size() != want_pred) {
    throw ShapeError("window of agent " + std::to_string(agent_id) + " has lengths " +
                     std::to_string(observed.size()) + "/" + std::to_string(neighbors.size()) +
                     "/" + std::to_string(future.size()) + ", expected " +
                     std::to_string(want_obs) + "/" + std::to_string(want_obs) + "/" +
                     std::to_string(want_pred));
  }
  for (const Point2& p : observed) {
    if (!finite(p)) throw NumericError("window has a non-finite observed point");
  }
  for (const Point2& p : future) {
    if (!finite(p)) throw NumericError("window has a non-finite future point");
  }
  for (const auto& step : neighbors) {
    for (const Neighbor& n : step) {
      if (!finite(n.position)) throw NumericError("window has a non-finite neighbor");
    }
  }
}

void DomainBatch::validate() const {
  if (windows.empty()) throw ShapeError("empty domain batch");
  for (const ObservationWindow& w : windows) {
    if (w.domain_id != domain_id) throw ShapeError("domain batch mixes domain ids");
  }
}

namespace {

std::vector<ObservationWindow> windows_of(const SceneTable& table, int t_obs, int t_pred,
                                          int stride, int domain_id) {
  // Frame index of every distinct frame id, plus records grouped by frame.
  std::vector<std::int64_t> frames;
  std::vector<std::size_t> frame_begin;
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    if (frames.empty() || table.records[i].frame_id != frames.back()) {
      frames.push_back(table.records[i].frame_id);
      frame_begin.push_back(i);
    }
  }
  frame_begin.push_back(table.records.size());

  // Per agent: (frame index, position), in frame order.
  std::map<std::int64_t, std::vector<std::pair<std::size_t, Point2>>> tracks;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t i = frame_begin[f]; i < frame_begin[f + 1]; ++i) {
      const SceneRecord& r = table.records[i];
      tracks[r.agent_id].emplace_back(f, Point2{r.x, r.y});
    }
  }

  const std::size_t len = std::size_t(t_obs + t_pred);
  std::vector<ObservationWindow> windows;
  for (const auto& [agent, track] : tracks) {
    // Split the track into runs of consecutive frame indices.
    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= track.size(); ++i) {
      if (i < track.size() && track[i].first == track[i - 1].first + 1) continue;
      const std::size_t run_len = i - run_start;
      for (std::size_t s = 0; s + len <= run_len; s += std::size_t(stride)) {
        ObservationWindow w;
        w.agent_id = agent;
        w.domain_id = domain_id;
        const std::size_t first = run_start + s;
        w.start_frame = frames[track[first].first];
        for (std::size_t k = 0; k < std::size_t(t_obs); ++k) {
          const auto& [f, pos] = track[first + k];
          w.observed.push_back(pos);
          std::vector<Neighbor> present;
          for (std::size_t r = frame_begin[f]; r < frame_begin[f + 1]; ++r) {
            const SceneRecord& rec = table.records[r];
            if (rec.agent_id != agent) present.push_back({rec.agent_id, {rec.x, rec.y}});
          }
          w.neighbors.push_back(std::move(present));
        }
        for (std::size_t k = std::size_t(t_obs); k < len; ++k) {
          w.future.push_back(track[first + k].second);
        }
        windows.push_back(std::move(w));
      }
      run_start = i;
    }
  }
  return windows;
}

}  // namespace

std::vector<ObservationWindow> build_windows(const SceneTable& table, int t_obs, int t_pred,
                                             int stride, int domain_id) {
  if (t_obs < 1 || t_pred < 1 || stride < 1) {
    throw ConfigError("build_windows: t_obs, t_pred and stride must be >= 1");
  }
  return windows_of(table, t_obs, t_pred, stride, domain_id);
}

std::vector<ObservationWindow> build_observation_windows(const SceneTable& table, int t_obs,
                                                         int stride, int domain_id) {
  if (t_obs < 1 || stride < 1) {
    throw ConfigError("build_observation_windows: t_obs and stride must be >= 1");
  }
  return windows_of(table, t_obs, 0, stride, domain_id);
}

PaddedNeighbors neighbor_mask(const ObservationWindow& window, int a_max) {
  if (a_max < 0) throw ConfigError("neighbor_mask: a_max must be >= 0");
  PaddedNeighbors out;
  out.a_max = a_max;
  const std::size_t steps = window.observed.size();
  out.positions.assign(steps * std::size_t(a_max), Point2{});
  out.mask.assign(steps * std::size_t(a_max), false);
  for (std::size_t t = 0; t < steps; ++t) {
    const Point2 self = window.observed[t];
    std::vector<std::pair<double, const Neighbor*>> ranked;
    ranked.reserve(window.neighbors[t].size());
    for (const Neighbor& n : window.neighbors[t]) {
      const double dx = n.position.x - self.x;
      const double dy = n.position.y - self.y;
      ranked.emplace_back(dx * dx + dy * dy, &n);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second->agent_id < b.second->agent_id;
    });
    const std::size_t keep = std::min(ranked.size(), std::size_t(a_max));
    for (std::size_t j = 0; j < keep; ++j) {
      out.positions[t * std::size_t(a_max) + j] = ranked[j].second->position;
      out.mask[t * std::size_t(a_max) + j] = true;
    }
  }
  return out;
}

}  // namespace ran

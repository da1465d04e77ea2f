#include "ran/ingest/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <string_view>
#include <vector>

#include "ran/error.hpp"

namespace ran {

void DatasetConfig::validate() const {
  if (!(unit_scale > 0.0)) throw ConfigError("dataset '" + name + "': unit_scale must be > 0");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw ConfigError("dataset '" + name + "': split_ratio must be in (0, 1)");
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(line_no, "not a finite number: '" + std::string(field) + "'");
  }
  return v;
}

std::int64_t parse_id(std::string_view field, std::size_t line_no) {
  const double v = parse_number(field, line_no);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw ParseError(line_no, "identifier is not an integer: '" + std::string(field) + "'");
  }
  return static_cast<std::int64_t>(v);
}

void write_number(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

SceneTable parse_trajectory_file(std::istream& in, const DatasetConfig& config) {
  if (!(config.unit_scale > 0.0)) throw ConfigError("unit_scale must be > 0");
  SceneTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    if (fields.size() != 4) {
      throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
    }
    SceneRecord r;
    r.frame_id = parse_id(fields[0], line_no);
    r.agent_id = parse_id(fields[1], line_no);
    r.x = parse_number(fields[2], line_no) * config.unit_scale;
    r.y = parse_number(fields[3], line_no) * config.unit_scale;
    table.records.push_back(r);
  }
  table.normalize();
  return table;
}

SceneTable load_trajectory_file(const DatasetConfig& config) {
  std::ifstream in(config.path);
  if (!in) throw IoError("cannot open trajectory file: " + config.path.string());
  return parse_trajectory_file(in, config);
}

void write_trajectory_file(std::ostream& out, const SceneTable& table) {
  for (const SceneRecord& r : table.records) {
    out << r.frame_id << ' ' << r.agent_id << ' ';
    write_number(out, r.x);
    out << ' ';
    write_number(out, r.y);
    out << '\n';
  }
}

SceneSplit split_train_test(const SceneTable& table, double split_ratio, std::uint64_t seed) {
  std::vector<std::int64_t> agents = table.agents();
  if (agents.size() < 2) throw SplitError("need at least 2 agents to split, got " +
                                          std::to_string(agents.size()));
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw SplitError("split_ratio must be in (0, 1)");
  std::mt19937_64 rng(seed);
  std::shuffle(agents.begin(), agents.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(split_ratio * double(agents.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, agents.size() - 1);
  const std::set<std::int64_t> train_ids(agents.begin(), agents.begin() + std::ptrdiff_t(n_train));

  SceneSplit split;
  split.train.frame_interval = table.frame_interval;
  split.test.frame_interval = table.frame_interval;
  for (const SceneRecord& r : table.records) {
    (train_ids.count(r.agent_id) ? split.train : split.test).records.push_back(r);
  }
  return split;
}

void SynthDomainConfig::validate(int min_frames) const {
  if (n_agents < 1) throw ConfigError("synth: n_agents must be >= 1");
  if (n_frames < min_frames) {
    throw ConfigError("synth: n_frames must be >= " + std::to_string(min_frames));
  }
  if (speed_std < 0 || turn_rate_std < 0 || repulsion_radius < 0 || noise_std < 0) {
    throw ConfigError("synth: std and radius fields must be >= 0");
  }
  if (!(frame_interval > 0.0) || !(area > 0.0)) {
    throw ConfigError("synth: frame_interval and area must be > 0");
  }
}

namespace {

struct Walker {
  Point2 pos;
  Point2 goal;
  double heading = 0.0;
  double speed = 0.0;
};

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

}  // namespace

SceneTable synth_domain(const SynthDomainConfig& config) {
  config.validate();
  constexpr double kGoalGain = 0.2;   // fraction of the heading error corrected per step
  constexpr double kRepulsionGain = 1.5;
  constexpr double kGoalReach = 1.0;  // meters

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> place(0.0, config.area);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<Walker> walkers(std::size_t(config.n_agents));
  for (Walker& w : walkers) {
    w.pos = {place(rng), place(rng)};
    w.goal = {place(rng), place(rng)};
    w.heading = std::atan2(w.goal.y - w.pos.y, w.goal.x - w.pos.x);
    w.speed = std::max(0.0, config.speed_mean + config.speed_std * unit(rng));
  }

  SceneTable table;
  table.frame_interval = config.frame_interval;
  table.records.reserve(std::size_t(config.n_agents) * std::size_t(config.n_frames));
  for (int frame = 0; frame < config.n_frames; ++frame) {
    for (std::size_t i = 0; i < walkers.size(); ++i) {
      const Walker& w = walkers[i];
      const double nx = config.noise_std > 0 ? config.noise_std * unit(rng) : 0.0;
      const double ny = config.noise_std > 0 ? config.noise_std * unit(rng) : 0.0;
      table.records.push_back({frame, std::int64_t(i), w.pos.x + nx, w.pos.y + ny});
    }
    // Headings are updated from the current positions of everyone, then all
    // agents move; speed is never changed, so a zero-speed agent never moves.
    std::vector<double> next_heading(walkers.size());
    for (std::size_t i = 0; i < walkers.size(); ++i) {
      Walker& w = walkers[i];
      const double gdx = w.goal.x - w.pos.x;
      const double gdy = w.goal.y - w.pos.y;
      if (std::hypot(gdx, gdy) < kGoalReach) w.goal = {place(rng), place(rng)};
      const double desired = std::atan2(w.goal.y - w.pos.y, w.goal.x - w.pos.x);
      double heading = w.heading + kGoalGain * wrap_angle(desired - w.heading);

      double rx = 0.0;
      double ry = 0.0;
      for (std::size_t j = 0; j < walkers.size(); ++j) {
        if (j == i) continue;
        const double dx = w.pos.x - walkers[j].pos.x;
        const double dy = w.pos.y - walkers[j].pos.y;
        const double dist = std::hypot(dx, dy);
        if (dist > 0.0 && dist < config.repulsion_radius) {
          const double push = (config.repulsion_radius - dist) / config.repulsion_radius;
          rx += push * dx / dist;
          ry += push * dy / dist;
        }
      }
      if (rx != 0.0 || ry != 0.0) {
        const double hx = std::cos(heading) + kRepulsionGain * rx;
        const double hy = std::sin(heading) + kRepulsionGain * ry;
        if (hx != 0.0 || hy != 0.0) heading = std::atan2(hy, hx);
      }
      if (config.turn_rate_std > 0) heading += config.turn_rate_std * unit(rng);
      next_heading[i] = wrap_angle(heading);
    }
    for (std::size_t i = 0; i < walkers.size(); ++i) {
      Walker& w = walkers[i];
      w.heading = next_heading[i];
      const double step = w.speed * config.frame_interval;
      w.pos.x += step * std::cos(w.heading);
      w.pos.y += step * std::sin(w.heading);
    }
  }
  return table;
}

}  // namespace ran

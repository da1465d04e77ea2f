#include "ran/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "ran/error.hpp"

namespace ran {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void apply_domain_key(DomainSpec& d, const std::string& field, const std::string& key,
                      const std::string& v, const std::filesystem::path& base_dir,
                      std::set<std::string>& synth_keys) {
  if (field == "path") {
    std::filesystem::path p(v);
    d.dataset.path = p.is_absolute() ? p : base_dir / p;
    d.synthetic = false;
    return;
  }
  if (field == "unit_scale") { d.dataset.unit_scale = to_double(key, v); return; }
  if (field == "split_ratio") { d.dataset.split_ratio = to_double(key, v); return; }
  synth_keys.insert(d.name);
  if (field == "n_agents") d.synth.n_agents = to_int(key, v);
  else if (field == "n_frames") d.synth.n_frames = to_int(key, v);
  else if (field == "speed_mean") d.synth.speed_mean = to_double(key, v);
  else if (field == "speed_std") d.synth.speed_std = to_double(key, v);
  else if (field == "turn_rate_std") d.synth.turn_rate_std = to_double(key, v);
  else if (field == "repulsion_radius") d.synth.repulsion_radius = to_double(key, v);
  else if (field == "noise_std") d.synth.noise_std = to_double(key, v);
  else if (field == "seed") d.synth.seed = to_u64(key, v);
  else if (field == "frame_interval") d.synth.frame_interval = to_double(key, v);
  else if (field == "area") d.synth.area = to_double(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
    entries.emplace_back(std::move(key), std::move(value));
  }

  RunConfig cfg;
  for (const auto& [key, v] : entries) {
    if (key != "preset") continue;
    if (v == "desk") {
      cfg.model = ModelConfig::desk_scale();
      cfg.train = TrainConfig::desk_scale();
    } else if (v == "paper") {
      cfg.model = ModelConfig::paper_scale();
      cfg.train = TrainConfig::paper_scale();
    } else {
      throw ConfigError("key 'preset': expected desk or paper, got '" + v + "'");
    }
  }

  std::set<std::string> synth_keys;
  for (const auto& [key, v] : entries) {
    ModelConfig& m = cfg.model;
    TrainConfig& t = cfg.train;
    if (key == "preset") continue;
    if (key == "sources") cfg.sources = split_list(v);
    else if (key == "target") cfg.target = v;
    else if (key == "seed") t.seed = to_u64(key, v);
    else if (key == "out_dir") {
      std::filesystem::path p(v);
      cfg.out_dir = p.is_absolute() ? p : base_dir / p;
    }
    else if (key == "t_obs") m.t_obs = to_int(key, v);
    else if (key == "t_pred") m.t_pred = to_int(key, v);
    else if (key == "a_max") m.a_max = to_int(key, v);
    else if (key == "d") m.d = to_int(key, v);
    else if (key == "hidden") m.hidden = to_int(key, v);
    else if (key == "K") m.k = to_int(key, v);
    else if (key == "embed_hidden") m.embed_hidden = to_int(key, v);
    else if (key == "embed_out") m.embed_out = to_int(key, v);
    else if (key == "heads") m.heads = to_int(key, v);
    else if (key == "layers") m.layers = to_int(key, v);
    else if (key == "dec_hidden") m.dec_hidden = to_int(key, v);
    else if (key == "measure") t.alignment.measure = parse_discrepancy(v);
    else if (key == "strategy") t.alignment.strategy = parse_strategy(v);
    else if (key == "aggregation") t.alignment.aggregation = parse_aggregation(v);
    else if (key == "lambda1") t.alignment.lambda1 = to_double(key, v);
    else if (key == "lambda2") t.alignment.lambda2 = to_double(key, v);
    else if (key == "lr") t.lr = to_double(key, v);
    else if (key == "batch") t.batch_size = to_int(key, v);
    else if (key == "epochs") t.epochs = to_int(key, v);
    else if (key == "decay") t.decay = to_double(key, v);
    else if (key == "interval") t.interval = to_int(key, v);
    else if (key == "checkpoint_interval") t.checkpoint_interval = to_int(key, v);
    else if (key == "stride") cfg.stride = to_int(key, v);
    else if (key == "eval_stride") cfg.eval_stride = to_int(key, v);
    else if (key == "export_max_windows") cfg.export_max_windows = to_int(key, v);
    else if (key.rfind("domain.", 0) == 0) {
      const auto dot = key.find('.', 7);
      if (dot == std::string::npos || dot == 7 || dot + 1 == key.size()) {
        throw ConfigError("malformed domain key '" + key + "' (expected domain.<name>.<field>)");
      }
      const std::string name = key.substr(7, dot - 7);
      DomainSpec& d = cfg.domains[name];
      d.name = name;
      d.dataset.name = name;
      apply_domain_key(d, key.substr(dot + 1), key, v, base_dir, synth_keys);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  for (const std::string& name : synth_keys) {
    if (!cfg.domains.at(name).synthetic) {
      throw ConfigError("domain '" + name + "' mixes a path with synthetic generator keys");
    }
  }
  cfg.train.alignment.m = int(cfg.sources.size());
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

const DomainSpec& RunConfig::domain(const std::string& name) const {
  auto it = domains.find(name);
  if (it == domains.end()) throw ConfigError("domain '" + name + "' is not defined");
  return it->second;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (eval_stride < 0) throw ConfigError("eval_stride must be >= 0");
  if (export_max_windows < 0) throw ConfigError("export_max_windows must be >= 0");
  std::set<std::string> unique(sources.begin(), sources.end());
  if (unique.size() != sources.size()) throw ConfigError("sources lists a domain twice");
  std::vector<std::string> used = sources;
  if (!target.empty()) used.push_back(target);
  for (const std::string& name : used) {
    const DomainSpec& d = domain(name);
    d.dataset.validate();
    if (d.synthetic) {
      d.synth.validate(model.t_obs + model.t_pred);
    } else if (!std::filesystem::exists(d.dataset.path)) {
      throw ConfigError("domain '" + name + "': file not found: " + d.dataset.path.string());
    }
  }
}

SceneTable load_domain_table(const DomainSpec& spec) {
  if (spec.synthetic) return synth_domain(spec.synth);
  return load_trajectory_file(spec.dataset);
}

SceneSplit load_domain_split(const DomainSpec& spec, std::uint64_t seed) {
  return split_train_test(load_domain_table(spec), spec.dataset.split_ratio, seed);
}

}  // namespace ran

#include "ran/model/config.hpp"

#include "ran/diff/optim.hpp"
#include "ran/error.hpp"

namespace ran {

Aggregation parse_aggregation(const std::string& s) {
  if (s == "sum") return Aggregation::Sum;
  if (s == "mean") return Aggregation::Mean;
  throw ConfigError("unknown aggregation '" + s + "' (expected sum or mean)");
}

std::string to_string(Aggregation a) { return a == Aggregation::Sum ? "sum" : "mean"; }

ModelConfig ModelConfig::paper_scale() { return ModelConfig{}; }

ModelConfig ModelConfig::desk_scale() {
  ModelConfig c;
  c.d = 32;
  c.hidden = 32;
  c.embed_hidden = 32;
  c.embed_out = 64;
  c.dec_hidden = 64;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* key) {
    if (v < 1) throw ConfigError(std::string(key) + " must be >= 1");
  };
  positive(t_obs, "t_obs");
  positive(t_pred, "t_pred");
  positive(embed_hidden, "embed_hidden");
  positive(embed_out, "embed_out");
  positive(d, "d");
  positive(heads, "heads");
  positive(hidden, "hidden");
  positive(layers, "layers");
  positive(k, "K");
  positive(dec_hidden, "dec_hidden");
  if (a_max < 0) throw ConfigError("a_max must be >= 0");
  if (d % heads != 0) throw ConfigError("d must be divisible by heads");
}

std::vector<ParamShape> model_param_shapes(const ModelConfig& c) {
  std::vector<ParamShape> s;
  for (const char* enc : {"f_o", "f_b"}) {
    const std::string p = enc;
    s.push_back({p + ".w1", 2, c.embed_hidden});
    s.push_back({p + ".b1", 1, c.embed_hidden});
    s.push_back({p + ".w2", c.embed_hidden, c.embed_out});
    s.push_back({p + ".b2", 1, c.embed_out});
  }
  s.push_back({"attn.w_q", c.embed_out, c.d});
  s.push_back({"attn.w_k", c.embed_out, c.d});
  s.push_back({"attn.w_v", c.embed_out, c.d});
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "gru" + std::to_string(l);
    const int in = l == 0 ? 2 * c.d : c.hidden;
    s.push_back({p + ".h0_w", c.embed_out, c.hidden});
    s.push_back({p + ".h0_b", 1, c.hidden});
    for (const char* gate : {"r", "z", "g"}) {
      s.push_back({p + ".w_x" + gate, in, c.hidden});
      s.push_back({p + ".w_h" + gate, c.hidden, c.hidden});
      s.push_back({p + ".b_" + gate, 1, c.hidden});
    }
  }
  for (int k = 0; k < c.k; ++k) {
    const std::string p = "dec" + std::to_string(k);
    s.push_back({p + ".w1", c.hidden, c.dec_hidden});
    s.push_back({p + ".b1", 1, c.dec_hidden});
    s.push_back({p + ".w2", c.dec_hidden, 2 * c.t_pred});
    s.push_back({p + ".b2", 1, 2 * c.t_pred});
  }
  return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

diff::ParamSet init_model_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  diff::ParamSet params;
  std::uint64_t stream = splitmix64(seed);
  for (const ParamShape& shape : model_param_shapes(config)) {
    stream = splitmix64(stream);
    const bool bias = shape.rows == 1;
    params.add(shape.name, diff::init_params(shape.rows, shape.cols, stream,
                                             bias ? diff::InitScheme::Zeros
                                                  : diff::InitScheme::UniformFanIn));
  }
  return params;
}

void check_compatible(const diff::ParamSet& params, const ModelConfig& config) {
  for (const ParamShape& shape : model_param_shapes(config)) {
    if (!params.contains(shape.name)) {
      throw ConfigError("checkpoint is missing tensor '" + shape.name + "' required by config");
    }
    const diff::Mat& v = params.at(shape.name);
    if (v.rows() != shape.rows || v.cols() != shape.cols) {
      throw ConfigError("checkpoint tensor '" + shape.name + "' is " + std::to_string(v.rows()) +
                        "x" + std::to_string(v.cols()) + " but config expects " +
                        std::to_string(shape.rows) + "x" + std::to_string(shape.cols));
    }
  }
  const std::size_t expected = model_param_shapes(config).size();
  if (params.size() != expected) {
    throw ConfigError("checkpoint has " + std::to_string(params.size()) + " tensors, config expects " +
                      std::to_string(expected));
  }
}

}  // namespace ran

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ran/diff/params.hpp"

namespace ran {

// How per-window hidden states are pooled into one domain feature per step.
enum class Aggregation { Sum, Mean };

Aggregation parse_aggregation(const std::string& s);
std::string to_string(Aggregation a);

// Dimensions of the encoder/decoder network.
struct ModelConfig {
  int t_obs = 8;
  int t_pred = 12;
  int a_max = 8;          // neighbors kept per step
  int embed_hidden = 64;  // first layer width of the point / neighbor encoders
  int embed_out = 128;    // output width of the point / neighbor encoders
  int d = 256;            // attention projection width
  int heads = 1;
  int hidden = 256;       // GRU state width
  int layers = 1;
  int k = 20;             // decoder heads
  int dec_hidden = 128;

  static ModelConfig paper_scale();
  static ModelConfig desk_scale();

  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ParamShape {
  std::string name;
  int rows = 0;
  int cols = 0;
};

// Every learnable tensor, in canonical order.
std::vector<ParamShape> model_param_shapes(const ModelConfig& config);

// Weights uniform fan-in, biases zero; deterministic given seed.
diff::ParamSet init_model_params(const ModelConfig& config, std::uint64_t seed);

// Throws ConfigError naming the first missing or mis-shaped tensor.
void check_compatible(const diff::ParamSet& params, const ModelConfig& config);

}  // namespace ran

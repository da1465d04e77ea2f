#pragma once

#include <cstdint>
#include <vector>

#include "ran/diff/params.hpp"

namespace ran::diff {

enum class InitScheme { UniformFanIn, Zeros };

// rows x cols tensor. UniformFanIn draws from U(-1/sqrt(rows), 1/sqrt(rows)),
// treating rows as the fan-in of a right-multiplied weight (x * W).
Mat init_params(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, InitScheme scheme);

struct AdamState {
  long step_count = 0;
  std::vector<Mat> first_moment;
  std::vector<Mat> second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Zeroed accumulators shaped like `params`.
AdamState make_adam_state(const ParamSet& params, double lr = 1e-3);

// One bias-corrected Adam update in place.
void adam_step(ParamSet& params, const std::vector<Mat>& grads, AdamState& state);

// base_lr * decay^floor(epoch / interval)
double lr_schedule(int epoch, double base_lr, double decay, int interval);

}  // namespace ran::diff

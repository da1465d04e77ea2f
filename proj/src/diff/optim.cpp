#include "ran/diff/optim.hpp"

#include <cmath>
#include <random>
#include <string>

namespace ran::diff {

Mat init_params(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, InitScheme scheme) {
  if (rows < 0 || cols < 0) throw ShapeError("init_params: negative shape");
  if (scheme == InitScheme::Zeros || rows == 0) return Mat::Zero(rows, cols);
  const double bound = 1.0 / std::sqrt(double(rows));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = dist(rng);
  return out;
}

AdamState make_adam_state(const ParamSet& params, double lr) {
  AdamState state;
  state.lr = lr;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& v = params.value(i);
    state.first_moment.push_back(Mat::Zero(v.rows(), v.cols()));
    state.second_moment.push_back(Mat::Zero(v.rows(), v.cols()));
  }
  return state;
}

void adam_step(ParamSet& params, const std::vector<Mat>& grads, AdamState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& p = params.value(i);
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() ||
        state.first_moment[i].rows() != p.rows() || state.first_moment[i].cols() != p.cols()) {
      throw ShapeError("adam_step: shape mismatch for '" + params.name(i) + "'");
    }
  }
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat& m = state.first_moment[i];
    Mat& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i].cwiseProduct(grads[i]);
    params.value(i).array() -=
        state.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.epsilon);
  }
}

double lr_schedule(int epoch, double base_lr, double decay, int interval) {
  if (interval < 1) throw ConfigError("lr_schedule: interval must be >= 1");
  return base_lr * std::pow(decay, double(epoch / interval));
}

}  // namespace ran::diff

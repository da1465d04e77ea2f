#pragma once

#include <functional>
#include <random>
#include <vector>

#include "ran/core/trajectory.hpp"
#include "ran/diff/tape.hpp"
#include "ran/model/config.hpp"

namespace ran::testing {

inline diff::Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  diff::Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Window with Gaussian coordinates and up to `max_neighbors` neighbors per step.
inline ObservationWindow random_window(std::mt19937_64& rng, int t_obs, int t_pred,
                                       int max_neighbors, int domain_id = 0) {
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_int_distribution<int> count(0, max_neighbors);
  ObservationWindow w;
  w.domain_id = domain_id;
  for (int t = 0; t < t_obs; ++t) {
    w.observed.push_back({n(rng), n(rng)});
    std::vector<Neighbor> step;
    const int c = count(rng);
    for (int j = 0; j < c; ++j) step.push_back({j + 100, {n(rng), n(rng)}});
    w.neighbors.push_back(std::move(step));
  }
  for (int t = 0; t < t_pred; ++t) w.future.push_back({n(rng), n(rng)});
  return w;
}

inline std::vector<ObservationWindow> random_windows(std::mt19937_64& rng, int count, int t_obs,
                                                     int t_pred, int max_neighbors,
                                                     int domain_id = 0) {
  std::vector<ObservationWindow> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(random_window(rng, t_obs, t_pred, max_neighbors, domain_id));
  }
  return out;
}

// d=8, hidden=16, K=3, T_obs=4, a_max=2.
inline ModelConfig tiny_config() {
  ModelConfig c;
  c.t_obs = 4;
  c.t_pred = 3;
  c.a_max = 2;
  c.embed_hidden = 6;
  c.embed_out = 5;
  c.d = 8;
  c.hidden = 16;
  c.k = 3;
  c.dec_hidden = 7;
  return c;
}

// Scene with one agent present on frames [first, first + count).
inline void add_track(SceneTable& table, std::int64_t agent, std::int64_t first, int count,
                      double x0 = 0.0, double vx = 1.0) {
  for (int f = 0; f < count; ++f) {
    table.records.push_back({first + f, agent, x0 + vx * f, 0.5 * double(agent)});
  }
}

}  // namespace ran::testing

#include "ran/diff/gradcheck.hpp"
#include "ran/diff/params.hpp"

namespace ran::testing {

using GraphFn = std::function<diff::Var(const diff::BoundParams&)>;

// Relative error between tape and central-difference gradients of a scalar
// graph, one entry per parameter tensor.
inline std::vector<double> param_gradient_errors(diff::ParamSet& params, const GraphFn& graph,
                                                 double eps = 1e-5) {
  diff::Tape tape;
  diff::BoundParams bound(tape, params);
  tape.backward(graph(bound));
  const std::vector<diff::Mat> analytic = bound.gradients();
  const auto numeric = diff::numerical_gradient(
      params,
      [&](const diff::ParamSet& p) {
        diff::Tape t;
        diff::BoundParams b(t, p, false);
        return graph(b).scalar();
      },
      eps);
  std::vector<double> errors;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    errors.push_back(diff::relative_error(analytic[i], numeric[i]));
  }
  return errors;
}

inline diff::ParamSet zero_params(const ModelConfig& config) {
  diff::ParamSet p = init_model_params(config, 0);
  for (std::size_t i = 0; i < p.size(); ++i) p.value(i).setZero();
  return p;
}

// Uniform random values on every tensor, biases included.
inline diff::ParamSet dense_params(const ModelConfig& config, std::uint64_t seed,
                                   double scale = 0.5) {
  diff::ParamSet p = init_model_params(config, seed);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p.value(i) = random_mat(rng, p.value(i).rows(), p.value(i).cols(), scale);
  }
  return p;
}

}  // namespace ran::testing

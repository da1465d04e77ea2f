#include "ran/diff/gradcheck.hpp"

#include <algorithm>

namespace ran::diff {

Mat numerical_gradient(ParamSet& params, std::size_t index, const Objective& f, double eps) {
  Mat& p = params.value(index);
  Mat g(p.rows(), p.cols());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double orig = p.data()[k];
    p.data()[k] = orig + eps;
    const double up = f(params);
    p.data()[k] = orig - eps;
    const double down = f(params);
    p.data()[k] = orig;
    g.data()[k] = (up - down) / (2.0 * eps);
  }
  return g;
}

std::vector<Mat> numerical_gradient(ParamSet& params, const Objective& f, double eps) {
  std::vector<Mat> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back(numerical_gradient(params, i, f, eps));
  return out;
}

double relative_error(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("relative_error: shape mismatch");
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

}  // namespace ran::diff

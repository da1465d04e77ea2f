// Finite-difference gradient oracle. Uses only forward evaluations of the
// objective, so it is independent of the tape's backward rules.

#pragma once

#include <functional>
#include <vector>

#include "ran/diff/params.hpp"

namespace ran::diff {

using Objective = std::function<double(const ParamSet&)>;

// Central differences (f(p + eps) - f(p - eps)) / (2 eps) for every entry of
// every parameter. `params` is restored before returning.
std::vector<Mat> numerical_gradient(ParamSet& params, const Objective& f, double eps = 1e-5);

// Same, for a single parameter tensor.
Mat numerical_gradient(ParamSet& params, std::size_t index, const Objective& f,
                       double eps = 1e-5);

// ||a - b|| / max(||a||, ||b||), or 0 when both are zero.
double relative_error(const Mat& a, const Mat& b);

}  // namespace ran::diff

// Distribution discrepancy measures between two domains' features.
//
// Vector kinds (L2, KLD, JS, COS) compare two 1 x c aggregated features.
// Set kinds (MMD, CORAL) compare two n x c sets of per-window features.

#pragma once

#include <string>

#include "ran/diff/ops.hpp"

namespace ran {

enum class DiscrepancyKind { L2, MMD, CORAL, KLD, JS, COS };

DiscrepancyKind parse_discrepancy(const std::string& s);
std::string to_string(DiscrepancyKind k);

bool is_set_based(DiscrepancyKind k);
bool is_symmetric(DiscrepancyKind k);

// Smoothing added to probabilities before taking logs in KLD and JS.
inline constexpr double kProbabilitySmoothing = 1e-8;

// L2     ||a - b||
// MMD    biased empirical MMD^2, RBF kernel exp(-d^2 / (2 s^2)) with s the
//        median pairwise distance of the pooled set (constant w.r.t. gradients)
// CORAL  ||cov(a) - cov(b)||_F^2 / (4 c^2)
// KLD    KL(softmax(a) || softmax(b))
// JS     Jensen-Shannon divergence of softmax(a), softmax(b)
// COS    1 - cos(a, b)
// Throws ShapeError on width mismatch and InsufficientSamplesError for CORAL
// with fewer than two rows on either side.
diff::Var discrepancy(diff::Var a, diff::Var b, DiscrepancyKind kind);

// Median pairwise distance of the rows of [a; b]; 1 when degenerate.
double median_bandwidth(const diff::Mat& a, const diff::Mat& b);

}  // namespace ran

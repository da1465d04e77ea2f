#include "ran/align/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ran/error.hpp"

namespace ran {

using diff::Mat;
using diff::Var;

DiscrepancyKind parse_discrepancy(const std::string& s) {
  if (s == "L2" || s == "l2") return DiscrepancyKind::L2;
  if (s == "MMD" || s == "mmd") return DiscrepancyKind::MMD;
  if (s == "CORAL" || s == "coral") return DiscrepancyKind::CORAL;
  if (s == "KLD" || s == "kld") return DiscrepancyKind::KLD;
  if (s == "JS" || s == "js") return DiscrepancyKind::JS;
  if (s == "COS" || s == "cos") return DiscrepancyKind::COS;
  throw ConfigError("unknown discrepancy measure '" + s + "' (expected L2, MMD, CORAL, KLD, JS, COS)");
}

std::string to_string(DiscrepancyKind k) {
  switch (k) {
    case DiscrepancyKind::L2: return "L2";
    case DiscrepancyKind::MMD: return "MMD";
    case DiscrepancyKind::CORAL: return "CORAL";
    case DiscrepancyKind::KLD: return "KLD";
    case DiscrepancyKind::JS: return "JS";
    case DiscrepancyKind::COS: return "COS";
  }
  return "?";
}

bool is_set_based(DiscrepancyKind k) {
  return k == DiscrepancyKind::MMD || k == DiscrepancyKind::CORAL;
}

bool is_symmetric(DiscrepancyKind k) {
  return k == DiscrepancyKind::L2 || k == DiscrepancyKind::MMD || k == DiscrepancyKind::JS ||
         k == DiscrepancyKind::COS || k == DiscrepancyKind::CORAL;
}

double median_bandwidth(const Mat& a, const Mat& b) {
  Mat pooled(a.rows() + b.rows(), a.cols());
  pooled << a, b;
  std::vector<double> dists;
  dists.reserve(std::size_t(pooled.rows() * (pooled.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) {
      dists.push_back((pooled.row(i) - pooled.row(j)).norm());
    }
  }
  if (dists.empty()) return 1.0;
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + std::ptrdiff_t(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(dists.begin(), dists.begin() + std::ptrdiff_t(mid)));
  }
  return median > 0.0 ? median : 1.0;
}

namespace {

// (p + eps) / sum(p + eps): strictly positive and normalized.
Var smoothed(Var p) {
  Var q = diff::add_scalar(p, kProbabilitySmoothing);
  const double total = 1.0 + double(p.cols()) * kProbabilitySmoothing;
  return diff::scale(q, 1.0 / total);
}

Var kl(Var p, Var q) { return diff::sum(diff::mul(p, diff::sub(diff::log(p), diff::log(q)))); }

Var covariance(Var x) {
  Var centered = diff::sub_row(x, diff::mean_rows(x));
  return diff::scale(diff::matmul(diff::transpose(centered), centered), 1.0 / double(x.rows() - 1));
}

}  // namespace

Var discrepancy(Var a, Var b, DiscrepancyKind kind) {
  if (a.cols() != b.cols()) {
    throw ShapeError("discrepancy: feature widths differ (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()) + ")");
  }
  if (!is_set_based(kind) && (a.rows() != 1 || b.rows() != 1)) {
    throw ShapeError("discrepancy: " + to_string(kind) + " expects 1 x c vectors");
  }
  switch (kind) {
    case DiscrepancyKind::L2:
      return diff::norm(diff::sub(a, b));
    case DiscrepancyKind::MMD: {
      if (a.rows() < 1 || b.rows() < 1) throw InsufficientSamplesError("MMD: empty sample set");
      const double s = median_bandwidth(a.value(), b.value());
      const double gamma = -1.0 / (2.0 * s * s);
      Var kxx = diff::mean(diff::exp(diff::scale(diff::pairwise_sq_dists(a, a), gamma)));
      Var kyy = diff::mean(diff::exp(diff::scale(diff::pairwise_sq_dists(b, b), gamma)));
      Var kxy = diff::mean(diff::exp(diff::scale(diff::pairwise_sq_dists(a, b), gamma)));
      return diff::clamp_min(diff::sub(diff::add(kxx, kyy), diff::scale(kxy, 2.0)), 0.0);
    }
    case DiscrepancyKind::CORAL: {
      if (a.rows() < 2 || b.rows() < 2) {
        throw InsufficientSamplesError("CORAL: covariance needs at least 2 samples per side");
      }
      const double c = double(a.cols());
      return diff::scale(diff::squared_norm(diff::sub(covariance(a), covariance(b))),
                         1.0 / (4.0 * c * c));
    }
    case DiscrepancyKind::KLD: {
      Var p = smoothed(diff::softmax_rows(a));
      Var q = smoothed(diff::softmax_rows(b));
      return diff::clamp_min(kl(p, q), 0.0);
    }
    case DiscrepancyKind::JS: {
      Var p = smoothed(diff::softmax_rows(a));
      Var q = smoothed(diff::softmax_rows(b));
      Var m = diff::scale(diff::add(p, q), 0.5);
      return diff::clamp_min(diff::scale(diff::add(kl(p, m), kl(q, m)), 0.5), 0.0);
    }
    case DiscrepancyKind::COS: {
      Var dot = diff::sum(diff::mul(a, b));
      Var denom = diff::clamp_min(diff::mul(diff::norm(a), diff::norm(b)), 1e-12);
      return diff::clamp_min(diff::add_scalar(diff::scale(diff::div(dot, denom), -1.0), 1.0), 0.0);
    }
  }
  throw ConfigError("discrepancy: unknown kind");
}

}  // namespace ran

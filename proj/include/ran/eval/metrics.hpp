#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ran/model/decoder.hpp"

namespace ran {

// Mean Euclidean distance over points. Throws ShapeError on length mismatch
// or empty input.
double ade(std::span<const Point2> pred, std::span<const Point2> truth);
// Euclidean distance between the final points.
double fde(std::span<const Point2> pred, std::span<const Point2> truth);

struct BestOfK {
  double ade = 0.0;
  double fde = 0.0;
};

// Independent minima of ADE and FDE over the K heads.
BestOfK best_of_k(const PredictionSet& preds, std::span<const Point2> truth);

struct SubsetMetrics {
  std::string name;
  std::size_t n_windows = 0;
  double ade = 0.0;
  double fde = 0.0;
};

struct MetricReport {
  std::string domain_name;
  std::size_t n_windows = 0;
  double ade = 0.0;
  double fde = 0.0;
  std::vector<SubsetMetrics> per_subset;
};

// Mean best-of-K ADE/FDE over `windows`. Per-window values are reduced in
// sorted order, so the report does not depend on window order. Throws
// ShapeError on an empty stream.
MetricReport evaluate(const diff::ParamSet& params, const ModelConfig& config,
                      std::span<const ObservationWindow> windows, const std::string& domain_name);

// Same reduction over precomputed predictions (one per window).
MetricReport summarize(std::span<const PredictionSet> predictions,
                       std::span<const ObservationWindow> windows, const std::string& domain_name);

// CSV header "domain,subset,n_windows,ade,fde"; the overall row uses subset
// "all", followed by one row per named subset.
void write_metric_report(std::ostream& out, const std::vector<MetricReport>& reports);

}  // namespace ran

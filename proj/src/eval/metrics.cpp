#include "ran/eval/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "ran/error.hpp"

namespace ran {

namespace {

void require_match(std::span<const Point2> pred, std::span<const Point2> truth) {
  if (pred.size() != truth.size()) {
    throw ShapeError("trajectory lengths differ (" + std::to_string(pred.size()) + " vs " +
                     std::to_string(truth.size()) + ")");
  }
  if (truth.empty()) throw ShapeError("empty trajectory");
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double sorted_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

void write_number(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

double ade(std::span<const Point2> pred, std::span<const Point2> truth) {
  require_match(pred, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += dist(pred[i], truth[i]);
  return total / double(pred.size());
}

double fde(std::span<const Point2> pred, std::span<const Point2> truth) {
  require_match(pred, truth);
  return dist(pred.back(), truth.back());
}

BestOfK best_of_k(const PredictionSet& preds, std::span<const Point2> truth) {
  if (preds.trajectories.empty()) throw ShapeError("best_of_k: no predictions");
  BestOfK out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& head : preds.trajectories) {
    out.ade = std::min(out.ade, ade(head, truth));
    out.fde = std::min(out.fde, fde(head, truth));
  }
  return out;
}

MetricReport summarize(std::span<const PredictionSet> predictions,
                       std::span<const ObservationWindow> windows, const std::string& domain_name) {
  if (windows.empty()) throw ShapeError("evaluate: empty test stream");
  if (predictions.size() != windows.size()) throw ShapeError("evaluate: prediction count mismatch");
  std::vector<double> ades;
  std::vector<double> fdes;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const BestOfK m = best_of_k(predictions[i], windows[i].future);
    ades.push_back(m.ade);
    fdes.push_back(m.fde);
  }
  MetricReport r;
  r.domain_name = domain_name;
  r.n_windows = windows.size();
  r.ade = sorted_mean(std::move(ades));
  r.fde = sorted_mean(std::move(fdes));
  return r;
}

MetricReport evaluate(const diff::ParamSet& params, const ModelConfig& config,
                      std::span<const ObservationWindow> windows, const std::string& domain_name) {
  if (windows.empty()) throw ShapeError("evaluate: empty test stream");
  const std::vector<PredictionSet> preds = predict_batch(windows, params, config);
  return summarize(preds, windows, domain_name);
}

void write_metric_report(std::ostream& out, const std::vector<MetricReport>& reports) {
  out << "domain,subset,n_windows,ade,fde\n";
  auto row = [&](const std::string& domain, const std::string& subset, std::size_t n, double a,
                 double f) {
    out << domain << ',' << subset << ',' << n << ',';
    write_number(out, a);
    out << ',';
    write_number(out, f);
    out << '\n';
  };
  for (const MetricReport& r : reports) {
    row(r.domain_name, "all", r.n_windows, r.ade, r.fde);
    for (const SubsetMetrics& s : r.per_subset) row(r.domain_name, s.name, s.n_windows, s.ade, s.fde);
  }
}

}  // namespace ran

// Export of encoder features for visual inspection of domain alignment.

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ran/model/encoder.hpp"

namespace ran {

struct FeatureDump {
  struct Row {
    int domain_id = 0;
    int window_id = 0;  // index within its domain
    std::vector<double> values;
    std::optional<Point2> projection;  // (pc1, pc2)
  };
  std::vector<Row> rows;

  std::size_t width() const { return rows.empty() ? 0 : rows.front().values.size(); }
};

struct DomainWindows {
  int domain_id = 0;
  std::span<const ObservationWindow> windows;
};

// Final hidden state of every window, one row per window in input order.
FeatureDump extract_features(const diff::ParamSet& params, const ModelConfig& config,
                             std::span<const DomainWindows> domains);

// Fits PCA on all rows and stores each row's first two principal
// coordinates. Components are sign-normalized so their largest-magnitude
// entry is positive. Throws ShapeError with fewer than two rows or
// inconsistent widths.
void project_pca_2d(FeatureDump& dump);

// Header "domain_id,window_id,f0..f{D-1}[,pc1,pc2]".
void write_feature_csv(std::ostream& out, const FeatureDump& dump);

// Scatter of the projections, one fill color per domain at 0.3 opacity.
void write_feature_svg(std::ostream& out, const FeatureDump& dump);

// extract + project + write both outputs. Throws ConfigError with fewer than
// two domains.
FeatureDump export_features(const diff::ParamSet& params, const ModelConfig& config,
                            std::span<const DomainWindows> domains, std::ostream& csv,
                            std::ostream* svg);

}  // namespace ran

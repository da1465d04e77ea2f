#include "ran/eval/features.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

#include "ran/error.hpp"

namespace ran {

namespace {

void write_number(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

FeatureDump extract_features(const diff::ParamSet& params, const ModelConfig& config,
                             std::span<const DomainWindows> domains) {
  constexpr std::size_t kChunk = 256;
  FeatureDump dump;
  for (const DomainWindows& d : domains) {
    for (std::size_t start = 0; start < d.windows.size(); start += kChunk) {
      const auto chunk = d.windows.subspan(start, std::min(kChunk, d.windows.size() - start));
      Tape tape;
      diff::BoundParams bound(tape, params, false);
      const BatchEncoding enc = encode_batch(bound, config, prepare_batch(chunk, config));
      const Mat& h = enc.final_hidden().value();
      for (Eigen::Index i = 0; i < h.rows(); ++i) {
        FeatureDump::Row row;
        row.domain_id = d.domain_id;
        row.window_id = int(start) + int(i);
        row.values.assign(h.row(i).data(), h.row(i).data() + h.cols());
        dump.rows.push_back(std::move(row));
      }
    }
  }
  return dump;
}

void project_pca_2d(FeatureDump& dump) {
  if (dump.rows.size() < 2) throw ShapeError("PCA needs at least 2 rows");
  const std::size_t width = dump.width();
  if (width == 0) throw ShapeError("PCA needs at least one feature");
  Eigen::MatrixXd x(Eigen::Index(dump.rows.size()), Eigen::Index(width));
  for (std::size_t r = 0; r < dump.rows.size(); ++r) {
    if (dump.rows[r].values.size() != width) throw ShapeError("feature rows have unequal widths");
    for (std::size_t c = 0; c < width; ++c) x(Eigen::Index(r), Eigen::Index(c)) = dump.rows[r].values[c];
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / double(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; take the last two columns.
  Eigen::MatrixXd comps = Eigen::MatrixXd::Zero(Eigen::Index(width), 2);
  const Eigen::Index n = Eigen::Index(width);
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, n); ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    comps.col(k) = v;
  }
  const Eigen::MatrixXd proj = x * comps;
  for (std::size_t r = 0; r < dump.rows.size(); ++r) {
    dump.rows[r].projection = Point2{proj(Eigen::Index(r), 0), proj(Eigen::Index(r), 1)};
  }
}

void write_feature_csv(std::ostream& out, const FeatureDump& dump) {
  const bool projected = !dump.rows.empty() && dump.rows.front().projection.has_value();
  out << "domain_id,window_id";
  for (std::size_t c = 0; c < dump.width(); ++c) out << ",f" << c;
  if (projected) out << ",pc1,pc2";
  out << '\n';
  for (const FeatureDump::Row& row : dump.rows) {
    out << row.domain_id << ',' << row.window_id;
    for (double v : row.values) {
      out << ',';
      write_number(out, v);
    }
    if (projected && row.projection) {
      out << ',';
      write_number(out, row.projection->x);
      out << ',';
      write_number(out, row.projection->y);
    }
    out << '\n';
  }
}

void write_feature_svg(std::ostream& out, const FeatureDump& dump) {
  constexpr double kSize = 600.0;
  constexpr double kMargin = 30.0;
  static constexpr std::array<const char*, 8> kColors = {"#1f4fd1", "#d12a1f", "#2a9d3a", "#9b30c9",
                                                         "#e08a00", "#00a3a3", "#7a5230", "#555555"};
  double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
  bool first = true;
  for (const auto& row : dump.rows) {
    if (!row.projection) continue;
    const Point2 p = *row.projection;
    if (first) {
      min_x = max_x = p.x;
      min_y = max_y = p.y;
      first = false;
    }
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double span_x = max_x > min_x ? max_x - min_x : 1.0;
  const double span_y = max_y > min_y ? max_y - min_y : 1.0;
  const double inner = kSize - 2 * kMargin;

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"600\" height=\"600\" fill=\"white\"/>\n";
  for (const auto& row : dump.rows) {
    if (!row.projection) continue;
    const double cx = kMargin + (row.projection->x - min_x) / span_x * inner;
    const double cy = kSize - kMargin - (row.projection->y - min_y) / span_y * inner;
    const char* color = kColors[std::size_t(std::abs(row.domain_id)) % kColors.size()];
    out << "  <circle cx=\"";
    write_number(out, cx);
    out << "\" cy=\"";
    write_number(out, cy);
    out << "\" r=\"4\" fill=\"" << color << "\" fill-opacity=\"0.3\"/>\n";
  }
  std::vector<int> ids;
  for (const auto& row : dump.rows) ids.push_back(row.domain_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const char* color = kColors[std::size_t(std::abs(ids[i])) % kColors.size()];
    out << "  <text x=\"" << 10 << "\" y=\"" << 18 + 16 * i << "\" font-size=\"12\" fill=\""
        << color << "\">domain " << ids[i] << "</text>\n";
  }
  out << "</svg>\n";
}

FeatureDump export_features(const diff::ParamSet& params, const ModelConfig& config,
                            std::span<const DomainWindows> domains, std::ostream& csv,
                            std::ostream* svg) {
  if (domains.size() < 2) throw ConfigError("feature export needs at least 2 domains");
  FeatureDump dump = extract_features(params, config, domains);
  project_pca_2d(dump);
  write_feature_csv(csv, dump);
  if (svg) write_feature_svg(*svg, dump);
  return dump;
}

}  // namespace ran

#include "ran/align/alignment.hpp"

#include "ran/error.hpp"

namespace ran {

using diff::Var;

AlignmentStrategy parse_strategy(const std::string& s) {
  if (s == "recurrent") return AlignmentStrategy::Recurrent;
  if (s == "state") return AlignmentStrategy::State;
  if (s == "sequence") return AlignmentStrategy::Sequence;
  throw ConfigError("unknown alignment strategy '" + s + "' (expected recurrent, state, sequence)");
}

std::string to_string(AlignmentStrategy s) {
  switch (s) {
    case AlignmentStrategy::Recurrent: return "recurrent";
    case AlignmentStrategy::State: return "state";
    case AlignmentStrategy::Sequence: return "sequence";
  }
  return "?";
}

void AlignmentConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0) throw ConfigError("lambda1 and lambda2 must be >= 0");
  if (m < 1) throw ConfigError("m must be >= 1");
}

Var aggregate(Var set, Aggregation aggregation) {
  return aggregation == Aggregation::Sum ? diff::sum_rows(set) : diff::mean_rows(set);
}

Var step_discrepancy(Var set1, Var set2, const AlignmentConfig& config) {
  if (set1.rows() != set2.rows()) {
    throw ShapeError("alignment: batch sizes differ (" + std::to_string(set1.rows()) + " vs " +
                     std::to_string(set2.rows()) + ")");
  }
  if (is_set_based(config.measure)) return discrepancy(set1, set2, config.measure);
  return discrepancy(aggregate(set1, config.aggregation), aggregate(set2, config.aggregation),
                     config.measure);
}

namespace {

void require_compatible(const StepSets& a, const StepSets& b) {
  if (a.empty() || a.size() != b.size()) {
    throw ShapeError("alignment: step counts differ (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
}

Var sum_over_steps(const StepSets& a, const StepSets& b, const AlignmentConfig& config) {
  Var total = step_discrepancy(a[0], b[0], config);
  for (std::size_t t = 1; t < a.size(); ++t) {
    total = diff::add(total, step_discrepancy(a[t], b[t], config));
  }
  return total;
}

}  // namespace

Var recurrent_alignment_loss(const StepSets& dom1, const StepSets& dom2,
                             const AlignmentConfig& config) {
  require_compatible(dom1, dom2);
  return sum_over_steps(dom1, dom2, config);
}

Var multi_source_loss(const std::vector<StepSets>& domains, const AlignmentConfig& config) {
  if (domains.empty()) throw ShapeError("multi_source_loss: no domains");
  for (const StepSets& d : domains) require_compatible(domains.front(), d);
  const std::size_t m = domains.size();
  diff::Tape& tape = domains.front().front().tape();
  Var total = tape.constant(diff::Mat::Zero(1, 1));
  for (std::size_t t = 0; t < domains.front().size(); ++t) {
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = 0; q < m; ++q) {
        // d(S, S) is identically zero for every measure.
        if (p == q) continue;
        total = diff::add(total, step_discrepancy(domains[p][t], domains[q][t], config));
      }
    }
  }
  return diff::scale(total, 1.0 / double(m * m));
}

Var state_alignment_loss(const StepSets& ctx1, const StepSets& ctx2,
                         const AlignmentConfig& config) {
  require_compatible(ctx1, ctx2);
  return sum_over_steps(ctx1, ctx2, config);
}

Var sequence_alignment_loss(const StepSets& dom1, const StepSets& dom2,
                            const AlignmentConfig& config) {
  require_compatible(dom1, dom2);
  return step_discrepancy(dom1.back(), dom2.back(), config);
}

}  // namespace ran

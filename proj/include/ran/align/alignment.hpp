// Alignment losses between source domains.
//
// Each domain contributes one n x c feature set per observed step (hidden
// states for the recurrent and sequence strategies, attention contexts for
// the state strategy). Vector measures see the aggregated 1 x c feature S_t;
// set measures see the set itself.

#pragma once

#include <string>
#include <vector>

#include "ran/align/discrepancy.hpp"
#include "ran/model/config.hpp"

namespace ran {

enum class AlignmentStrategy { Recurrent, State, Sequence };

AlignmentStrategy parse_strategy(const std::string& s);
std::string to_string(AlignmentStrategy s);

struct AlignmentConfig {
  DiscrepancyKind measure = DiscrepancyKind::L2;
  AlignmentStrategy strategy = AlignmentStrategy::Recurrent;
  double lambda1 = 1.0;  // alignment weight
  double lambda2 = 1.0;  // prediction weight
  int m = 2;             // number of source domains
  Aggregation aggregation = Aggregation::Sum;

  void validate() const;
};

using StepSets = std::vector<diff::Var>;

// Aggregated per-step feature S_t of one n x c set.
diff::Var aggregate(diff::Var set, Aggregation aggregation);

// discrepancy between two per-step sets under config.measure.
diff::Var step_discrepancy(diff::Var set1, diff::Var set2, const AlignmentConfig& config);

// sum_t d(S_1t, S_2t). Throws ShapeError on unequal step counts or batch sizes.
diff::Var recurrent_alignment_loss(const StepSets& dom1, const StepSets& dom2,
                                   const AlignmentConfig& config);

// (1 / m^2) sum_t sum_{p,q} d(S_pt, S_qt) over ordered domain pairs.
diff::Var multi_source_loss(const std::vector<StepSets>& domains, const AlignmentConfig& config);

// sum_t d over attention-context sets (state-level arm of the ablation).
diff::Var state_alignment_loss(const StepSets& ctx1, const StepSets& ctx2,
                               const AlignmentConfig& config);

// d(S_1T, S_2T) at the last observed step only.
diff::Var sequence_alignment_loss(const StepSets& dom1, const StepSets& dom2,
                                  const AlignmentConfig& config);

}  // namespace ran

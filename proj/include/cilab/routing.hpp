#pragma once

#include <map>
#include <set>
#include <vector>

#include "cilab/state.hpp"
#include "cilab/training.hpp"

namespace cilab {

// Per-class score decomposition for one input. q is always composed as
// s + beta*g + gamma*proto in that exact expression order, so the stored
// value can be re-derived bit-for-bit from the parts.
struct ClassScore {
  int class_id = 0;
  int task_id = 0;
  double s = 0.0;      // cosine against the class's current text feature
  double g = 0.0;      // compensation logit (0 when no head is present)
  double proto = 0.0;  // cosine against the class prototype
  double q = 0.0;
};

struct ScoreBreakdown {
  std::vector<ClassScore> per_class;  // sorted by class id
  std::map<int, double> msp;          // task -> max softmax over that task's q
};

// Scores every seen class through its owning task's branch.
ScoreBreakdown score_all(const Vector& x, const ModelState& state, const HyperParams& hp);

// Argmax of q over all seen classes; exact ties go to the lowest class id.
int predict(const ScoreBreakdown& breakdown);

// Per-task acceptance thresholds: the q-quantile of each task's validation
// MSPs (k = ceil(q n) as an order statistic). When the quantile lands on the
// minimum observed value - including q = 0 and all-equal degenerate sets -
// the threshold is nudged down by 1e-9 so the strict acceptance test keeps
// every calibration sample.
ThresholdBank calibrate_thresholds(const std::map<int, std::vector<Vector>>& val_latents,
                                   const ModelState& state, const HyperParams& hp,
                                   double quantile);

// Tasks whose MSP clears their threshold; empty means potentially unknown.
std::set<int> detect_unknown(const ScoreBreakdown& breakdown, const ThresholdBank& thresholds);

struct FusionResult {
  std::vector<double> weights;       // per task, softmax of prototype confidences
  std::vector<double> fused_scores;  // per candidate
  std::size_t predicted_index = 0;
};

// Prototype-confidence-weighted zero-shot scores over a candidate label set.
// The weighted mean is computed centered on the first branch, so when every
// branch produces identical scores (all adapter deltas zero) the fused score
// equals the single-branch score exactly.
FusionResult fused_zero_shot(const Vector& x_star,
                             const std::vector<Vector>& candidate_text_feats,
                             const ModelState& state);

// Fraction of samples whose predicted class lives in the same task as the
// true class.
double routing_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels,
                        const std::map<int, int>& class_task);

}  // namespace cilab

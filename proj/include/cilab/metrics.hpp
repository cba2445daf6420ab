#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cilab/matrix.hpp"
#include "cilab/routing.hpp"
#include "cilab/state.hpp"

namespace cilab {

struct AccuracyCurve {
  double avg_acc = 0.0;
  double last_acc = 0.0;
  std::vector<double> per_stage;
};

AccuracyCurve accuracy_curve(const std::vector<double>& stage_accuracies);

// Probability that a random in-distribution score exceeds a random
// out-of-distribution score, ties counted 0.5. Computed through midranks;
// equals the O(n*m) pairwise count exactly (both numerators are sums of
// halves, exactly representable).
double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores);

// Mean residual of b_src's columns after projecting onto span(b_tgt).
// Zero iff span(src) is contained in span(tgt). Directional: not symmetric.
double directional_distance(const Matrix& b_src, const Matrix& b_tgt);

// Average of the two directional distances.
double symmetric_distance(const Matrix& b1, const Matrix& b2);

// Mean cosine between every cached anchor and the class's re-encoded text
// feature under the current shared adapter.
double anchor_preservation(const ModelState& state);

struct MarginStats {
  std::optional<double> mean;        // absent for single-task states
  std::vector<double> per_sample;
};

// Per-sample margin: best q within the true class's task minus the best q
// outside it.
MarginStats margin_stats(const std::vector<ScoreBreakdown>& breakdowns,
                         const std::vector<int>& labels,
                         const std::map<int, int>& class_task);

struct ParameterCount {
  std::size_t shared_text_adapter = 0;
  std::size_t visual_adapters = 0;
  std::size_t comp_heads = 0;
  std::size_t prototypes = 0;
  std::size_t anchors = 0;
  std::size_t total() const {
    return shared_text_adapter + visual_adapters + comp_heads + prototypes + anchors;
  }
};

ParameterCount parameter_count(const ModelState& state);

// Principal subspace of a feature matrix (columns are samples) keeping the
// given share of cumulative squared singular energy; exact-zero directions
// are dropped by the rank tolerance first.
Matrix energy_basis(const Matrix& features, double energy = 0.95, double rel_tol = 1e-10);

// Directional distances from the task's image subspace to the text head
// space, the compensation head space, and their re-orthogonalized union.
struct SubspaceDistances {
  double d_image_text = 0.0;
  double d_image_comp = 0.0;
  double d_image_joint = 0.0;
};

}  // namespace cilab

#pragma once

#include <cstdint>
#include <vector>

#include "cilab/state.hpp"
#include "cilab/synth.hpp"
#include "cilab/training.hpp"

namespace cilab {

// SVD of the task's text feature matrix (features as columns); the left
// singular directions above the rank tolerance span the text subspace.
TextSubspace build_text_subspace(int task_id, const std::vector<int>& class_order,
                                 const std::vector<Vector>& text_feats, double rel_tol);

// Head initialized with the task's visual prototypes as columns (the raw,
// pre-projection parameterization).
CompHead init_comp_head(int task_id, const std::vector<int>& class_order,
                        const PrototypeBank& prototypes);

// All-zero head, used when prototype initialization is ablated away.
CompHead zero_comp_head(int task_id, const std::vector<int>& class_order,
                        std::size_t feature_dim);

// Compensation logits g = v^T (p_perp w_comp), one entry per class in the
// head's class order. An unconstrained head (ablation) skips the projection.
Vector comp_logits(const Vector& v, const CompHead& head, const TextSubspace& sub);

// Cross-entropy over kappa-scaled compensation logits for one batch, with
// the analytic gradient with respect to the raw w_comp.
struct CompObjective {
  double loss = 0.0;
  Matrix g_w;
};

CompObjective comp_objective(std::span<const Sample> batch, const ModelState& state,
                             int task_id, double kappa_comp);

// Stage-2 loop: builds the text subspace, initializes the head (prototypes
// or zeros), then minimizes cross-entropy on the compensation logits.
// Optimizes only w_comp; adapters and anchors are frozen throughout.
std::vector<EpochLog> train_comp_head(const TaskDataset& task, ModelState& state,
                                      const HyperParams& hp, std::uint64_t root_seed,
                                      bool orth_constraint = true, bool proto_init = true);

}  // namespace cilab

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "cilab/state.hpp"
#include "cilab/synth.hpp"

namespace cilab {

enum class StepRule { Constant, Cosine };

struct HyperParams {
  double lambda_anc = 1.0;
  double lambda_sep = 1.0;
  double tau = 0.7;            // separation threshold
  double kappa = 30.0;         // logit scale inside softmax losses
  double kappa_comp = 30.0;    // logit scale for the compensation objective
  double lr_stage1 = 0.05;
  double lr_stage2 = 0.1;
  std::size_t epochs_stage1 = 15;
  std::size_t epochs_stage2 = 10;
  std::size_t batch_size = 16;
  double beta = 0.2;           // compensation weight at inference
  double gamma = 0.2;          // prototype weight at inference
  std::size_t lora_rank = 4;
  StepRule step_rule = StepRule::Cosine;
  double msp_quantile = 0.05;  // validation quantile for acceptance thresholds
  double rank_rel_tol = 1e-10; // numerical-rank cutoff for subspaces
  double ridge_lambda = 1e-3;  // regularization of the analysis-only classifier

  void validate() const;  // throws ConfigError
};

struct EpochLog {
  int task = 0;
  std::size_t epoch = 0;
  double l_clip = 0.0;
  double l_anc = 0.0;
  double l_sep = 0.0;
  double total = 0.0;
};

// Softmax cross-entropy over the current task's classes on kappa-scaled
// cosine logits. text_feats aligns with class_order; labels are global class
// ids and must belong to class_order.
double clip_loss(const std::vector<Vector>& image_feats, const std::vector<int>& labels,
                 const std::vector<int>& class_order, const std::vector<Vector>& text_feats,
                 double kappa);

// Mean (1 - cos) between re-encoded previous-class text features and their
// cached anchors; 0 when there are no previous classes.
double anchor_loss(const std::vector<int>& previous_classes,
                   const std::map<int, Vector>& current_text, const AnchorCache& cache);

// Hinge on pairwise text cosines above tau, averaged as: outer mean over new
// classes, inner mean over every other seen class. Vacuously 0 with fewer
// than two seen classes.
double separation_loss(const std::map<int, Vector>& text_by_class,
                       const std::vector<int>& new_class_ids, double tau);

// Value and analytic gradients of clip + lambda_anc*anchor + lambda_sep*sep
// for one mini-batch. Gradients cover exactly the current task's visual
// adapter factors and the shared text adapter factors; frozen parameters do
// not appear.
struct BaseObjective {
  double loss = 0.0;
  double l_clip = 0.0;
  double l_anc = 0.0;
  double l_sep = 0.0;
  Matrix g_vis_a, g_vis_b;
  Matrix g_txt_a, g_txt_b;
};

BaseObjective base_objective(std::span<const Sample> batch, const ModelState& state,
                             int task_id, const HyperParams& hp);

// Stage-1 loop: registers a fresh adapter for the task, then runs seeded
// mini-batch gradient descent jointly on that adapter and the shared text
// adapter. Previous tasks' artifacts are never touched. Returns per-epoch
// loss means for the training log.
std::vector<EpochLog> train_task_stage1(const TaskDataset& task, ModelState& state,
                                        const HyperParams& hp, std::uint64_t root_seed);

// Caches this task's text anchors (insert-once) and unit visual prototypes.
void cache_anchors_and_prototypes(const TaskDataset& task, ModelState& state);

}  // namespace cilab

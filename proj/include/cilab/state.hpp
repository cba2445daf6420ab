#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cilab/encoder.hpp"
#include "cilab/matrix.hpp"

namespace cilab {

// SVD-derived subspace of one task's text features: orthonormal basis u,
// projector p = u u^T, complement p_perp = I - p, numerical rank.
struct TextSubspace {
  int task_id = 0;
  Matrix u;
  Matrix p;
  Matrix p_perp;
  std::size_t rank = 0;
};

// Per-task residual classifier. The stored w_comp is unconstrained; the
// effective head is p_perp * w_comp, applied on every forward pass, so the
// orthogonality constraint holds mid-training by construction. The
// orth_constrained flag exists only for the ablation that drops the
// projection.
struct CompHead {
  int task_id = 0;
  Matrix w_comp;                // feature_dim x |classes|
  std::vector<int> class_order;
  bool orth_constrained = true;
};

// Cached text features, one per class, captured when the class is first
// learned. Insert-once: anchors are never overwritten.
class AnchorCache {
 public:
  void insert(int class_id, Vector z);
  const Vector& at(int class_id) const;
  bool contains(int class_id) const { return entries_.count(class_id) > 0; }
  bool empty() const { return entries_.empty(); }
  const std::map<int, Vector>& entries() const { return entries_; }

 private:
  std::map<int, Vector> entries_;
};

// Unit visual prototypes plus the class -> owning-task map.
class PrototypeBank {
 public:
  void insert(int class_id, Vector prototype, int task_id);
  const Vector& at(int class_id) const;
  int task_of(int class_id) const;
  bool contains(int class_id) const { return prototypes_.count(class_id) > 0; }
  const std::map<int, Vector>& prototypes() const { return prototypes_; }
  const std::map<int, int>& task_map() const { return task_map_; }

 private:
  std::map<int, Vector> prototypes_;
  std::map<int, int> task_map_;
};

using ThresholdBank = std::map<int, double>;  // task_id -> omega

struct TaskArtifacts {
  int task_id = 0;
  std::vector<int> class_ids;       // sorted
  LowRankAdapter visual_adapter;
  std::optional<TextSubspace> subspace;
  std::optional<CompHead> head;
};

// Everything the pipeline learns, plus the frozen encoder it learns on.
struct ModelState {
  FrozenEncoder encoder;
  LowRankAdapter text_adapter;          // shared across tasks
  std::vector<TaskArtifacts> tasks;     // in learning order
  AnchorCache anchors;
  PrototypeBank prototypes;
  std::map<int, Vector> prompts;        // class -> prompt latent
  ThresholdBank thresholds;

  const TaskArtifacts* find_task(int task_id) const;
  TaskArtifacts* find_task(int task_id);
  bool has_task(int task_id) const { return find_task(task_id) != nullptr; }
  std::vector<int> seen_classes() const;  // sorted

  // Current text feature of a class through the shared adapter.
  Vector text_feature(int class_id) const;
};

// JSON checkpoint round trip. All matrices are stored as row-major arrays
// with 17 significant digits, so save(load(s)) == s byte for byte.
std::string checkpoint_json(const ModelState& state);
ModelState checkpoint_from_json(const std::string& text);
void save_checkpoint(const ModelState& state, const std::string& path);
ModelState load_checkpoint(const std::string& path);

}  // namespace cilab

#include "cilab/compensation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cilab/error.hpp"
#include "cilab/rng.hpp"
#include "cilab/svd.hpp"

namespace cilab {

TextSubspace build_text_subspace(int task_id, const std::vector<int>& class_order,
                                 const std::vector<Vector>& text_feats, double rel_tol) {
  if (class_order.empty() || text_feats.size() != class_order.size())
    throw InputError("build_text_subspace: class order and text features misaligned");
  const std::size_t d = text_feats.front().size();
  Matrix t(d, text_feats.size());
  for (std::size_t j = 0; j < text_feats.size(); ++j) {
    if (text_feats[j].size() != d)
      throw InputError("build_text_subspace: inconsistent feature dimensions");
    t.set_col(j, text_feats[j]);
  }
  TextSubspace sub;
  sub.task_id = task_id;
  sub.u = orthonormal_basis(t, rel_tol);
  sub.rank = sub.u.cols();
  auto pp = projectors(sub.u, d);
  sub.p = std::move(pp.p);
  sub.p_perp = std::move(pp.p_perp);
  return sub;
}

CompHead init_comp_head(int task_id, const std::vector<int>& class_order,
                        const PrototypeBank& prototypes) {
  if (class_order.empty()) throw InputError("init_comp_head: empty class order");
  CompHead head;
  head.task_id = task_id;
  head.class_order = class_order;
  const Vector& first = prototypes.at(class_order.front());
  head.w_comp = Matrix(first.size(), class_order.size());
  for (std::size_t j = 0; j < class_order.size(); ++j)
    head.w_comp.set_col(j, prototypes.at(class_order[j]));
  return head;
}

CompHead zero_comp_head(int task_id, const std::vector<int>& class_order,
                        std::size_t feature_dim) {
  if (class_order.empty()) throw InputError("zero_comp_head: empty class order");
  CompHead head;
  head.task_id = task_id;
  head.class_order = class_order;
  head.w_comp = Matrix(feature_dim, class_order.size());
  return head;
}

Vector comp_logits(const Vector& v, const CompHead& head, const TextSubspace& sub) {
  if (head.task_id != sub.task_id)
    throw StateError("comp_logits: head and subspace belong to different tasks");
  if (v.size() != head.w_comp.rows() || sub.p_perp.rows() != v.size())
    throw StateError("comp_logits: feature dimension mismatch");
  // g = v^T (P_perp W) = (P_perp v)^T W since the projector is symmetric.
  const Vector vp = head.orth_constrained ? matvec(sub.p_perp, v) : v;
  return matvec_t(head.w_comp, vp);
}

CompObjective comp_objective(std::span<const Sample> batch, const ModelState& state,
                             int task_id, double kappa_comp) {
  if (batch.empty()) throw InputError("comp_objective: empty batch");
  const TaskArtifacts* art = state.find_task(task_id);
  if (!art) throw StateError("comp_objective: task " + std::to_string(task_id) + " not trained");
  if (!art->subspace)
    throw StateError("comp_objective: text subspace for task " + std::to_string(task_id) +
                     " missing");
  if (!art->head)
    throw StateError("comp_objective: compensation head for task " + std::to_string(task_id) +
                     " missing");
  const CompHead& head = *art->head;
  const TextSubspace& sub = *art->subspace;
  const std::vector<int>& order = head.class_order;
  const std::size_t n_cls = order.size();
  const double batch_n = static_cast<double>(batch.size());

  CompObjective out;
  out.g_w = Matrix(head.w_comp.rows(), head.w_comp.cols());
  std::vector<double> logits(n_cls), probs(n_cls);
  for (const Sample& s : batch) {
    const Vector v = encode_image(s.latent, state.encoder, art->visual_adapter);
    const Vector vp = head.orth_constrained ? matvec(sub.p_perp, v) : v;
    const Vector g = matvec_t(head.w_comp, vp);
    auto it = std::find(order.begin(), order.end(), s.label);
    if (it == order.end())
      throw InputError("comp_objective: label " + std::to_string(s.label) +
                       " outside the task's classes");
    const std::size_t yi = static_cast<std::size_t>(it - order.begin());

    for (std::size_t c = 0; c < n_cls; ++c) logits[c] = kappa_comp * g[c];
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < n_cls; ++c) {
      probs[c] = std::exp(logits[c] - mx);
      sum += probs[c];
    }
    out.loss += std::log(sum) - (logits[yi] - mx);

    // dL/d(g_c) = kappa * (softmax_c - 1[c=y]) / N and
    // dL/dW = (P_perp v) dL/dg^T, projection already folded into vp.
    for (std::size_t c = 0; c < n_cls; ++c) {
      const double coef = kappa_comp * (probs[c] / sum - (c == yi ? 1.0 : 0.0)) / batch_n;
      if (coef == 0.0) continue;
      for (std::size_t r = 0; r < out.g_w.rows(); ++r) out.g_w(r, c) += coef * vp[r];
    }
  }
  out.loss /= batch_n;
  return out;
}

std::vector<EpochLog> train_comp_head(const TaskDataset& task, ModelState& state,
                                      const HyperParams& hp, std::uint64_t root_seed,
                                      bool orth_constraint, bool proto_init) {
  if (task.train.empty()) throw InputError("train_comp_head: task has no training samples");
  TaskArtifacts* art = state.find_task(task.task_id);
  if (!art) throw StateError("train_comp_head: task " + std::to_string(task.task_id) +
                             " has no stage-1 adapter");

  std::vector<int> order = task.class_ids;
  std::sort(order.begin(), order.end());
  std::vector<Vector> text_feats;
  for (int c : order) text_feats.push_back(state.text_feature(c));
  art->subspace = build_text_subspace(task.task_id, order, text_feats, hp.rank_rel_tol);

  CompHead head = proto_init ? init_comp_head(task.task_id, order, state.prototypes)
                             : zero_comp_head(task.task_id, order, state.encoder.feature_dim());
  head.orth_constrained = orth_constraint;
  art->head = std::move(head);

  std::vector<EpochLog> logs;
  std::vector<std::size_t> idx(task.train.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t epoch = 0; epoch < hp.epochs_stage2; ++epoch) {
    Rng shuffle_rng = Rng::substream(root_seed, "batch-order-stage2",
                                     static_cast<std::uint64_t>(task.task_id), epoch);
    shuffle_rng.shuffle(idx);
    double lr = hp.lr_stage2;
    if (hp.step_rule == StepRule::Cosine && hp.epochs_stage2 > 1)
      lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                                  static_cast<double>(hp.epochs_stage2)));

    EpochLog log;
    log.task = task.task_id;
    log.epoch = epoch;
    std::size_t batches = 0;
    std::vector<Sample> batch;
    for (std::size_t start = 0; start < idx.size(); start += hp.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(idx.size(), start + hp.batch_size); ++i)
        batch.push_back(task.train[idx[i]]);
      CompObjective obj = comp_objective(batch, state, task.task_id, hp.kappa_comp);
      for (std::size_t i = 0; i < art->head->w_comp.storage().size(); ++i)
        art->head->w_comp.storage()[i] -= lr * obj.g_w.storage()[i];
      log.total += obj.loss;
      ++batches;
    }
    if (batches > 0) log.total /= static_cast<double>(batches);
    logs.push_back(log);
  }
  return logs;
}

}  // namespace cilab

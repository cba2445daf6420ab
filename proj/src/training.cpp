#include "cilab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cilab/error.hpp"
#include "cilab/rng.hpp"

namespace cilab {

void HyperParams::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("hp.tau must lie in (0, 1)");
  if (!(kappa > 0.0)) throw ConfigError("hp.kappa must be > 0");
  if (!(kappa_comp > 0.0)) throw ConfigError("hp.kappa_comp must be > 0");
  if (!(lr_stage1 > 0.0)) throw ConfigError("hp.lr_stage1 must be > 0");
  if (!(lr_stage2 > 0.0)) throw ConfigError("hp.lr_stage2 must be > 0");
  if (batch_size < 1) throw ConfigError("hp.batch_size must be >= 1");
  if (lora_rank < 1) throw ConfigError("hp.lora_rank must be >= 1");
  if (!(beta >= 0.0)) throw ConfigError("hp.beta must be >= 0");
  if (!(gamma >= 0.0)) throw ConfigError("hp.gamma must be >= 0");
  if (!(msp_quantile >= 0.0 && msp_quantile < 1.0))
    throw ConfigError("hp.msp_quantile must lie in [0, 1)");
  if (!(rank_rel_tol > 0.0 && rank_rel_tol < 1.0))
    throw ConfigError("hp.rank_rel_tol must lie in (0, 1)");
  if (!(ridge_lambda > 0.0)) throw ConfigError("hp.ridge_lambda must be > 0");
}

namespace {

// Stable log-softmax cross-entropy for one row of logits.
double cross_entropy_row(const std::vector<double>& logits, std::size_t target) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  return std::log(sum) - (logits[target] - mx);
}

std::size_t class_position(const std::vector<int>& class_order, int label) {
  auto it = std::find(class_order.begin(), class_order.end(), label);
  if (it == class_order.end())
    throw InputError("label " + std::to_string(label) + " outside the current class set");
  return static_cast<std::size_t>(it - class_order.begin());
}

}  // namespace

double clip_loss(const std::vector<Vector>& image_feats, const std::vector<int>& labels,
                 const std::vector<int>& class_order, const std::vector<Vector>& text_feats,
                 double kappa) {
  if (image_feats.empty()) throw InputError("clip_loss: empty batch");
  if (image_feats.size() != labels.size()) throw InputError("clip_loss: labels misaligned");
  if (class_order.size() != text_feats.size())
    throw InputError("clip_loss: text features misaligned with class order");
  double total = 0.0;
  std::vector<double> logits(class_order.size());
  for (std::size_t i = 0; i < image_feats.size(); ++i) {
    for (std::size_t c = 0; c < class_order.size(); ++c)
      logits[c] = kappa * dot(image_feats[i], text_feats[c]);
    total += cross_entropy_row(logits, class_position(class_order, labels[i]));
  }
  return total / static_cast<double>(image_feats.size());
}

double anchor_loss(const std::vector<int>& previous_classes,
                   const std::map<int, Vector>& current_text, const AnchorCache& cache) {
  if (previous_classes.empty()) return 0.0;
  double total = 0.0;
  for (int c : previous_classes) {
    auto it = current_text.find(c);
    if (it == current_text.end())
      throw InputError("anchor_loss: current text feature for class " + std::to_string(c) +
                       " missing");
    total += 1.0 - cosine(it->second, cache.at(c));
  }
  return total / static_cast<double>(previous_classes.size());
}

double separation_loss(const std::map<int, Vector>& text_by_class,
                       const std::vector<int>& new_class_ids, double tau) {
  if (text_by_class.size() < 2) return 0.0;
  for (int c : new_class_ids)
    if (!text_by_class.count(c))
      throw InputError("separation_loss: new class " + std::to_string(c) +
                       " missing from the seen set");
  const double inner_count = static_cast<double>(text_by_class.size() - 1);
  double total = 0.0;
  for (int c : new_class_ids) {
    const Vector& tc = text_by_class.at(c);
    double inner = 0.0;
    for (const auto& [other, tother] : text_by_class) {
      if (other == c) continue;
      inner += std::max(0.0, cosine(tc, tother) - tau);
    }
    total += inner / inner_count;
  }
  return total / static_cast<double>(new_class_ids.size());
}

namespace {

// Effective-weight forward that keeps the raw (pre-normalization) output.
struct EncodedFeature {
  Vector unit;
  double raw_norm = 0.0;
};

EncodedFeature forward(const Matrix& w0, const LowRankAdapter& ad, const Vector& x) {
  Vector y = matvec(w0, x);
  if (!ad.b.is_zero()) {
    const Vector d = matvec(ad.a, x);
    const Vector z = matvec(ad.b, d);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += ad.scale * z[i];
  }
  EncodedFeature f;
  f.raw_norm = norm(y);
  if (!(f.raw_norm > 1e-12))
    throw DegenerateFeatureError("forward: feature norm below 1e-12");
  f.unit = std::move(y);
  for (auto& v : f.unit) v /= f.raw_norm;
  return f;
}

// d(loss)/d(raw) from d(loss)/d(unit) through v = h / ||h||.
Vector normalize_backward(const EncodedFeature& f, const Vector& d_unit) {
  const double vdot = dot(f.unit, d_unit);
  Vector d_raw(d_unit.size());
  for (std::size_t i = 0; i < d_unit.size(); ++i)
    d_raw[i] = (d_unit[i] - f.unit[i] * vdot) / f.raw_norm;
  return d_raw;
}

}  // namespace

BaseObjective base_objective(std::span<const Sample> batch, const ModelState& state,
                             int task_id, const HyperParams& hp) {
  if (batch.empty()) throw InputError("base_objective: empty batch");
  const TaskArtifacts* task = state.find_task(task_id);
  if (!task) throw StateError("base_objective: no adapter registered for task " +
                              std::to_string(task_id));
  const LowRankAdapter& vis = task->visual_adapter;
  const LowRankAdapter& txt = state.text_adapter;
  const std::vector<int>& current = task->class_ids;

  // Previous classes: everything seen that is not in the current task.
  std::vector<int> seen = state.seen_classes();
  std::vector<int> previous;
  for (int c : seen)
    if (!std::binary_search(current.begin(), current.end(), c)) previous.push_back(c);

  // Text forward for every seen class through the shared adapter.
  std::map<int, EncodedFeature> text;
  for (int c : seen) {
    auto it = state.prompts.find(c);
    if (it == state.prompts.end())
      throw StateError("base_objective: prompt for class " + std::to_string(c) + " missing");
    text.emplace(c, forward(state.encoder.w_txt0, txt, it->second));
  }

  // Image forward for the batch through the current task adapter.
  std::vector<EncodedFeature> imgs;
  imgs.reserve(batch.size());
  for (const Sample& s : batch) imgs.push_back(forward(state.encoder.w_img0, vis, s.latent));

  const double batch_n = static_cast<double>(batch.size());
  const std::size_t n_cur = current.size();

  BaseObjective out;
  std::vector<Vector> d_img(batch.size(), Vector(state.encoder.feature_dim(), 0.0));
  std::map<int, Vector> d_text;
  for (int c : seen) d_text.emplace(c, Vector(state.encoder.feature_dim(), 0.0));

  // --- classification term ---
  std::vector<double> logits(n_cur), probs(n_cur);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t yi = class_position(current, batch[i].label);
    for (std::size_t c = 0; c < n_cur; ++c)
      logits[c] = hp.kappa * dot(imgs[i].unit, text.at(current[c]).unit);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < n_cur; ++c) {
      probs[c] = std::exp(logits[c] - mx);
      sum += probs[c];
    }
    out.l_clip += std::log(sum) - (logits[yi] - mx);
    for (std::size_t c = 0; c < n_cur; ++c) {
      const double coef =
          hp.kappa * (probs[c] / sum - (c == yi ? 1.0 : 0.0)) / batch_n;
      if (coef == 0.0) continue;
      const Vector& tc = text.at(current[c]).unit;
      Vector& dtc = d_text.at(current[c]);
      for (std::size_t k = 0; k < tc.size(); ++k) {
        d_img[i][k] += coef * tc[k];
        dtc[k] += coef * imgs[i].unit[k];
      }
    }
  }
  out.l_clip /= batch_n;

  // --- anchor term ---
  if (!previous.empty() && hp.lambda_anc != 0.0) {
    const double w = hp.lambda_anc / static_cast<double>(previous.size());
    for (int c : previous) {
      const Vector& z = state.anchors.at(c);
      const Vector& tc = text.at(c).unit;
      out.l_anc += 1.0 - dot(tc, z);
      Vector& dtc = d_text.at(c);
      for (std::size_t k = 0; k < z.size(); ++k) dtc[k] -= w * z[k];
    }
    out.l_anc /= static_cast<double>(previous.size());
  } else if (!previous.empty()) {
    for (int c : previous) out.l_anc += 1.0 - dot(text.at(c).unit, state.anchors.at(c));
    out.l_anc /= static_cast<double>(previous.size());
  }

  // --- separation term ---
  if (seen.size() >= 2) {
    const double inner_count = static_cast<double>(seen.size() - 1);
    const double pair_w = hp.lambda_sep / (static_cast<double>(n_cur) * inner_count);
    for (int c : current) {
      const Vector& tc = text.at(c).unit;
      double inner = 0.0;
      for (int other : seen) {
        if (other == c) continue;
        const Vector& to = text.at(other).unit;
        const double margin = dot(tc, to) - hp.tau;
        if (margin > 0.0) {
          inner += margin;
          if (hp.lambda_sep != 0.0) {
            Vector& dtc = d_text.at(c);
            Vector& dto = d_text.at(other);
            for (std::size_t k = 0; k < tc.size(); ++k) {
              dtc[k] += pair_w * to[k];
              dto[k] += pair_w * tc[k];
            }
          }
        }
      }
      out.l_sep += inner / inner_count;
    }
    out.l_sep /= static_cast<double>(n_cur);
  }

  out.loss = out.l_clip + hp.lambda_anc * out.l_anc + hp.lambda_sep * out.l_sep;

  // --- backward through normalization and the low-rank factors ---
  Matrix d_wvis(state.encoder.feature_dim(), state.encoder.latent_dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vector d_raw = normalize_backward(imgs[i], d_img[i]);
    add_outer(d_wvis, 1.0, d_raw, batch[i].latent);
  }
  Matrix d_wtxt(state.encoder.feature_dim(), state.encoder.latent_dim());
  for (int c : seen) {
    const Vector d_raw = normalize_backward(text.at(c), d_text.at(c));
    add_outer(d_wtxt, 1.0, d_raw, state.prompts.at(c));
  }

  // W_eff = W0 + scale * B * A, so dB = scale * dW * A^T, dA = scale * B^T * dW.
  out.g_vis_b = vis.scale * (d_wvis * transpose(vis.a));
  out.g_vis_a = vis.scale * (transpose(vis.b) * d_wvis);
  out.g_txt_b = txt.scale * (d_wtxt * transpose(txt.a));
  out.g_txt_a = txt.scale * (transpose(txt.b) * d_wtxt);
  return out;
}

namespace {

double epoch_lr(const HyperParams& hp, double base_lr, std::size_t epoch, std::size_t total) {
  if (hp.step_rule == StepRule::Constant || total <= 1) return base_lr;
  return base_lr * 0.5 *
         (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                         static_cast<double>(total)));
}

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
  for (std::size_t i = 0; i < param.storage().size(); ++i)
    param.storage()[i] -= lr * grad.storage()[i];
}

}  // namespace

std::vector<EpochLog> train_task_stage1(const TaskDataset& task, ModelState& state,
                                        const HyperParams& hp, std::uint64_t root_seed) {
  if (task.train.empty()) throw InputError("train_task_stage1: task has no training samples");
  if (state.has_task(task.task_id))
    throw StateError("train_task_stage1: task " + std::to_string(task.task_id) +
                     " already has an adapter");

  for (int c : task.class_ids) {
    if (state.prompts.count(c))
      throw StateError("train_task_stage1: class " + std::to_string(c) + " already registered");
    state.prompts[c] = task.prompts.at(c);
  }

  TaskArtifacts art;
  art.task_id = task.task_id;
  art.class_ids = task.class_ids;
  std::sort(art.class_ids.begin(), art.class_ids.end());
  art.visual_adapter =
      new_adapter(hp.lora_rank, state.encoder.latent_dim(), state.encoder.feature_dim(),
                  Rng::substream_seed(root_seed, "adapter-init",
                                      static_cast<std::uint64_t>(task.task_id)));
  state.tasks.push_back(std::move(art));
  TaskArtifacts& current = state.tasks.back();

  std::vector<EpochLog> logs;
  std::vector<std::size_t> order(task.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < hp.epochs_stage1; ++epoch) {
    Rng shuffle_rng = Rng::substream(root_seed, "batch-order",
                                     static_cast<std::uint64_t>(task.task_id), epoch);
    shuffle_rng.shuffle(order);
    const double lr = epoch_lr(hp, hp.lr_stage1, epoch, hp.epochs_stage1);

    EpochLog log;
    log.task = task.task_id;
    log.epoch = epoch;
    std::size_t batches = 0;
    std::vector<Sample> batch;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + hp.batch_size); ++i)
        batch.push_back(task.train[order[i]]);
      BaseObjective obj = base_objective(batch, state, task.task_id, hp);
      sgd_step(current.visual_adapter.a, obj.g_vis_a, lr);
      sgd_step(current.visual_adapter.b, obj.g_vis_b, lr);
      sgd_step(state.text_adapter.a, obj.g_txt_a, lr);
      sgd_step(state.text_adapter.b, obj.g_txt_b, lr);
      log.l_clip += obj.l_clip;
      log.l_anc += obj.l_anc;
      log.l_sep += obj.l_sep;
      log.total += obj.loss;
      ++batches;
    }
    if (batches > 0) {
      log.l_clip /= static_cast<double>(batches);
      log.l_anc /= static_cast<double>(batches);
      log.l_sep /= static_cast<double>(batches);
      log.total /= static_cast<double>(batches);
    }
    logs.push_back(log);
  }
  return logs;
}

void cache_anchors_and_prototypes(const TaskDataset& task, ModelState& state) {
  const TaskArtifacts* art = state.find_task(task.task_id);
  if (!art)
    throw StateError("cache_anchors_and_prototypes: task " + std::to_string(task.task_id) +
                     " not trained");
  for (int c : task.class_ids) state.anchors.insert(c, state.text_feature(c));

  for (int c : task.class_ids) {
    Vector mean(state.encoder.feature_dim(), 0.0);
    std::size_t count = 0;
    for (const Sample& s : task.train) {
      if (s.label != c) continue;
      const Vector f = encode_image(s.latent, state.encoder, art->visual_adapter);
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += f[k];
      ++count;
    }
    if (count == 0)
      throw StateError("cache_anchors_and_prototypes: class " + std::to_string(c) +
                       " has zero samples");
    for (auto& v : mean) v /= static_cast<double>(count);
    const double n = norm(mean);
    if (!(n > 1e-12))
      throw DegenerateFeatureError("cache_anchors_and_prototypes: prototype for class " +
                                   std::to_string(c) + " collapsed");
    for (auto& v : mean) v /= n;
    state.prototypes.insert(c, std::move(mean), task.task_id);
  }
}

}  // namespace cilab

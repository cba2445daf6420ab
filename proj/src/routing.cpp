#include "cilab/routing.hpp"

#include <algorithm>
#include <cmath>

#include "cilab/compensation.hpp"
#include "cilab/error.hpp"

namespace cilab {

ScoreBreakdown score_all(const Vector& x, const ModelState& state, const HyperParams& hp) {
  if (state.tasks.empty()) throw StateError("score_all: no task learned yet");

  // If any branch carries a compensation head, every branch must.
  const bool heads_expected =
      std::any_of(state.tasks.begin(), state.tasks.end(),
                  [](const TaskArtifacts& t) { return t.head.has_value(); });

  ScoreBreakdown out;
  for (const TaskArtifacts& task : state.tasks) {
    if (heads_expected && !task.head)
      throw StateError("score_all: compensation head for task " +
                       std::to_string(task.task_id) + " missing");
    if (heads_expected && !task.subspace)
      throw StateError("score_all: text subspace for task " + std::to_string(task.task_id) +
                       " missing");
    const Vector v = encode_image(x, state.encoder, task.visual_adapter);
    Vector g_logits;
    if (task.head) g_logits = comp_logits(v, *task.head, *task.subspace);

    std::vector<double> qs;
    qs.reserve(task.class_ids.size());
    for (std::size_t j = 0; j < task.class_ids.size(); ++j) {
      const int c = task.class_ids[j];
      ClassScore cs;
      cs.class_id = c;
      cs.task_id = task.task_id;
      cs.s = dot(v, state.text_feature(c));
      if (task.head) {
        const auto& order = task.head->class_order;
        const auto it = std::find(order.begin(), order.end(), c);
        if (it == order.end())
          throw StateError("score_all: class " + std::to_string(c) +
                           " missing from the head's class order");
        cs.g = g_logits[static_cast<std::size_t>(it - order.begin())];
      }
      cs.proto = dot(v, state.prototypes.at(c));
      cs.q = cs.s + hp.beta * cs.g + hp.gamma * cs.proto;
      qs.push_back(cs.q);
      out.per_class.push_back(cs);
    }

    // Task-level MSP over this task's q scores (raw, unscaled softmax).
    const double mx = *std::max_element(qs.begin(), qs.end());
    double denom = 0.0;
    for (double q : qs) denom += std::exp(q - mx);
    out.msp[task.task_id] = 1.0 / denom;  // exp(mx - mx) / denom
  }
  std::sort(out.per_class.begin(), out.per_class.end(),
            [](const ClassScore& a, const ClassScore& b) { return a.class_id < b.class_id; });
  return out;
}

int predict(const ScoreBreakdown& breakdown) {
  if (breakdown.per_class.empty()) throw InputError("predict: empty breakdown");
  const ClassScore* best = &breakdown.per_class.front();
  for (const ClassScore& cs : breakdown.per_class)
    if (cs.q > best->q) best = &cs;  // strict: earlier (lower) class id wins ties
  return best->class_id;
}

ThresholdBank calibrate_thresholds(const std::map<int, std::vector<Vector>>& val_latents,
                                   const ModelState& state, const HyperParams& hp,
                                   double quantile) {
  if (!(quantile >= 0.0 && quantile < 1.0))
    throw CalibrationError("calibrate_thresholds: quantile must lie in [0, 1)");
  for (const auto& [task_id, _] : val_latents)
    if (!state.has_task(task_id))
      throw CalibrationError("calibrate_thresholds: task " + std::to_string(task_id) +
                             " not learned");

  ThresholdBank bank;
  for (const TaskArtifacts& task : state.tasks) {
    auto it = val_latents.find(task.task_id);
    if (it == val_latents.end() || it->second.empty())
      throw CalibrationError("calibrate_thresholds: empty validation set for task " +
                             std::to_string(task.task_id));
    std::vector<double> msps;
    msps.reserve(it->second.size());
    for (const Vector& x : it->second)
      msps.push_back(score_all(x, state, hp).msp.at(task.task_id));
    std::sort(msps.begin(), msps.end());

    std::size_t k = 0;
    if (quantile > 0.0) {
      const double pos = quantile * static_cast<double>(msps.size());
      k = static_cast<std::size_t>(std::ceil(pos));
      if (k > 0) --k;
      if (k >= msps.size()) k = msps.size() - 1;
    }
    double omega = msps[k];
    if (omega == msps.front()) omega -= 1e-9;  // keep the strict test accepting the minimum
    bank[task.task_id] = omega;
  }
  return bank;
}

std::set<int> detect_unknown(const ScoreBreakdown& breakdown, const ThresholdBank& thresholds) {
  std::set<int> accepted;
  for (const auto& [task_id, m] : breakdown.msp) {
    auto it = thresholds.find(task_id);
    if (it == thresholds.end())
      throw StateError("detect_unknown: no threshold for task " + std::to_string(task_id));
    if (m > it->second) accepted.insert(task_id);
  }
  return accepted;
}

FusionResult fused_zero_shot(const Vector& x_star,
                             const std::vector<Vector>& candidate_text_feats,
                             const ModelState& state) {
  if (state.tasks.empty()) throw StateError("fused_zero_shot: no task learned yet");
  if (candidate_text_feats.empty()) throw InputError("fused_zero_shot: empty candidate set");

  const std::size_t n_tasks = state.tasks.size();
  const std::size_t n_cand = candidate_text_feats.size();
  std::vector<double> confidence(n_tasks);
  std::vector<std::vector<double>> branch_scores(n_tasks, std::vector<double>(n_cand));
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const TaskArtifacts& task = state.tasks[t];
    const Vector v = encode_image(x_star, state.encoder, task.visual_adapter);
    double best = -1e300;
    for (int c : task.class_ids) best = std::max(best, dot(v, state.prototypes.at(c)));
    confidence[t] = best;
    for (std::size_t k = 0; k < n_cand; ++k)
      branch_scores[t][k] = dot(v, candidate_text_feats[k]);
  }

  const double rmax = *std::max_element(confidence.begin(), confidence.end());
  std::vector<double> expw(n_tasks);
  double denom = 0.0;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    expw[t] = std::exp(confidence[t] - rmax);
    denom += expw[t];
  }

  FusionResult out;
  out.weights.resize(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) out.weights[t] = expw[t] / denom;

  // Weighted mean centered on branch 0: identical branch scores pass through
  // unchanged, which realizes the frozen-encoder fallback exactly.
  out.fused_scores.resize(n_cand);
  for (std::size_t k = 0; k < n_cand; ++k) {
    double corr = 0.0;
    for (std::size_t t = 0; t < n_tasks; ++t)
      corr += expw[t] * (branch_scores[t][k] - branch_scores[0][k]);
    out.fused_scores[k] = branch_scores[0][k] + corr / denom;
  }

  out.predicted_index = 0;
  for (std::size_t k = 1; k < n_cand; ++k)
    if (out.fused_scores[k] > out.fused_scores[out.predicted_index]) out.predicted_index = k;
  return out;
}

double routing_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels,
                        const std::map<int, int>& class_task) {
  if (predictions.size() != labels.size())
    throw InputError("routing_accuracy: predictions and labels misaligned");
  if (predictions.empty()) throw InputError("routing_accuracy: empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto pit = class_task.find(predictions[i]);
    auto lit = class_task.find(labels[i]);
    if (pit == class_task.end())
      throw InputError("routing_accuracy: class " + std::to_string(predictions[i]) +
                       " unmapped");
    if (lit == class_task.end())
      throw InputError("routing_accuracy: class " + std::to_string(labels[i]) + " unmapped");
    if (pit->second == lit->second) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace cilab

#include "cilab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cilab/error.hpp"
#include "cilab/svd.hpp"

namespace cilab {

AccuracyCurve accuracy_curve(const std::vector<double>& stage_accuracies) {
  if (stage_accuracies.empty()) throw InputError("accuracy_curve: no stages");
  AccuracyCurve out;
  out.per_stage = stage_accuracies;
  out.avg_acc = std::accumulate(stage_accuracies.begin(), stage_accuracies.end(), 0.0) /
                static_cast<double>(stage_accuracies.size());
  out.last_acc = stage_accuracies.back();
  return out;
}

double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) throw InputError("auroc: empty score set");

  struct Entry {
    double score;
    bool is_id;
  };
  std::vector<Entry> combined;
  combined.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) combined.push_back({s, true});
  for (double s : ood_scores) combined.push_back({s, false});
  std::stable_sort(combined.begin(), combined.end(),
                   [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Midranks over tied blocks; rank sums stay sums of halves, so the
  // numerator is exact and matches the pairwise count bit for bit.
  double id_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < combined.size()) {
    std::size_t j = i;
    while (j < combined.size() && combined[j].score == combined[i].score) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (combined[k].is_id) id_rank_sum += midrank;
    i = j;
  }
  const double n = static_cast<double>(id_scores.size());
  const double m = static_cast<double>(ood_scores.size());
  const double u = id_rank_sum - n * (n + 1.0) / 2.0;
  return u / (n * m);
}

namespace {

void check_orthonormal(const Matrix& basis, const char* name) {
  for (std::size_t a = 0; a < basis.cols(); ++a)
    for (std::size_t b = a; b < basis.cols(); ++b) {
      double ip = 0.0;
      for (std::size_t i = 0; i < basis.rows(); ++i) ip += basis(i, a) * basis(i, b);
      if (std::fabs(ip - (a == b ? 1.0 : 0.0)) > 1e-8)
        throw InputError(std::string(name) + ": basis columns not orthonormal");
    }
}

}  // namespace

double directional_distance(const Matrix& b_src, const Matrix& b_tgt) {
  check_orthonormal(b_src, "directional_distance src");
  check_orthonormal(b_tgt, "directional_distance tgt");
  if (b_src.cols() == 0) return 0.0;
  if (b_tgt.cols() > 0 && b_src.rows() != b_tgt.rows())
    throw InputError("directional_distance: ambient dimensions differ");

  double total = 0.0;
  for (std::size_t j = 0; j < b_src.cols(); ++j) {
    const Vector b = b_src.col(j);
    Vector residual = b;
    // residual = b - B_tgt (B_tgt^T b), no projector materialized.
    if (b_tgt.cols() > 0) {
      const Vector coeffs = matvec_t(b_tgt, b);
      for (std::size_t c = 0; c < b_tgt.cols(); ++c) {
        const double w = coeffs[c];
        if (w == 0.0) continue;
        for (std::size_t r = 0; r < residual.size(); ++r) residual[r] -= w * b_tgt(r, c);
      }
    }
    total += norm(residual);
  }
  return total / static_cast<double>(b_src.cols());
}

double symmetric_distance(const Matrix& b1, const Matrix& b2) {
  return 0.5 * (directional_distance(b1, b2) + directional_distance(b2, b1));
}

double anchor_preservation(const ModelState& state) {
  if (state.anchors.empty()) throw InputError("anchor_preservation: no anchors cached");
  double total = 0.0;
  for (const auto& [class_id, anchor] : state.anchors.entries())
    total += cosine(state.text_feature(class_id), anchor);
  return total / static_cast<double>(state.anchors.entries().size());
}

MarginStats margin_stats(const std::vector<ScoreBreakdown>& breakdowns,
                         const std::vector<int>& labels,
                         const std::map<int, int>& class_task) {
  if (breakdowns.size() != labels.size())
    throw InputError("margin_stats: breakdowns and labels misaligned");
  std::set<int> tasks;
  for (const auto& [c, t] : class_task) tasks.insert(t);
  MarginStats out;
  if (tasks.size() < 2) return out;  // no competitor: margins absent

  double total = 0.0;
  for (std::size_t i = 0; i < breakdowns.size(); ++i) {
    auto lit = class_task.find(labels[i]);
    if (lit == class_task.end())
      throw InputError("margin_stats: class " + std::to_string(labels[i]) + " unmapped");
    const int gt_task = lit->second;
    double best_gt = -1e300, best_other = -1e300;
    for (const ClassScore& cs : breakdowns[i].per_class) {
      auto cit = class_task.find(cs.class_id);
      if (cit == class_task.end())
        throw InputError("margin_stats: class " + std::to_string(cs.class_id) + " unmapped");
      if (cit->second == gt_task)
        best_gt = std::max(best_gt, cs.q);
      else
        best_other = std::max(best_other, cs.q);
    }
    const double margin = best_gt - best_other;
    out.per_sample.push_back(margin);
    total += margin;
  }
  if (!out.per_sample.empty())
    out.mean = total / static_cast<double>(out.per_sample.size());
  return out;
}

namespace {

std::size_t adapter_params(const LowRankAdapter& ad) {
  return ad.a.rows() * ad.a.cols() + ad.b.rows() * ad.b.cols();
}

}  // namespace

ParameterCount parameter_count(const ModelState& state) {
  ParameterCount out;
  out.shared_text_adapter = adapter_params(state.text_adapter);
  for (const auto& task : state.tasks) {
    out.visual_adapters += adapter_params(task.visual_adapter);
    if (task.head) out.comp_heads += task.head->w_comp.rows() * task.head->w_comp.cols();
  }
  for (const auto& [c, p] : state.prototypes.prototypes()) out.prototypes += p.size();
  for (const auto& [c, z] : state.anchors.entries()) out.anchors += z.size();
  return out;
}

Matrix energy_basis(const Matrix& features, double energy, double rel_tol) {
  if (features.empty()) throw InputError("energy_basis: empty feature matrix");
  if (!(energy > 0.0 && energy <= 1.0))
    throw InputError("energy_basis: energy share must lie in (0, 1]");
  const SvdResult dec = svd(features);
  const double smax = dec.sigma.empty() ? 0.0 : dec.sigma.front();

  // Rank tolerance first, then the energy cut on what survives.
  std::size_t rank = 0;
  double total = 0.0;
  while (rank < dec.sigma.size() && smax > 0.0 && dec.sigma[rank] > rel_tol * smax) {
    total += dec.sigma[rank] * dec.sigma[rank];
    ++rank;
  }
  std::size_t keep = 0;
  double cum = 0.0;
  while (keep < rank) {
    cum += dec.sigma[keep] * dec.sigma[keep];
    ++keep;
    if (cum >= energy * total) break;
  }
  Matrix basis(features.rows(), keep);
  for (std::size_t j = 0; j < keep; ++j)
    for (std::size_t i = 0; i < features.rows(); ++i) basis(i, j) = dec.u(i, j);
  return basis;
}

}  // namespace cilab

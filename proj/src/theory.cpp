#include "cilab/theory.hpp"

#include <algorithm>
#include <cmath>

#include "cilab/error.hpp"
#include "cilab/svd.hpp"

namespace cilab {

namespace {

void check_square(const Matrix& p, const char* name) {
  if (p.rows() != p.cols()) throw InputError(std::string(name) + " must be square");
}

void check_idempotent(const Matrix& p, const char* name) {
  check_square(p, name);
  const double dev = frobenius_norm(p * p - p);
  if (dev > 1e-8)
    throw InputError(std::string(name) + " not idempotent, ||P^2 - P||_F = " +
                     std::to_string(dev));
}

// Relative scale for comparisons between energies of w_star.
double energy_scale(const Matrix& w_star) {
  return std::max(1.0, frobenius_norm_sq(w_star));
}

}  // namespace

double text_approx_error(const Matrix& w_star, const Matrix& p_t) {
  check_idempotent(p_t, "p_t");
  if (p_t.cols() != w_star.rows())
    throw InputError("text_approx_error: projector and classifier shapes incompatible");
  const Matrix residual = w_star - p_t * w_star;
  return frobenius_norm_sq(residual);
}

double dsum_approx_error(const Matrix& w_star, const Matrix& p_t, const Matrix& p_r) {
  check_idempotent(p_t, "p_t");
  check_idempotent(p_r, "p_r");
  const double overlap = frobenius_norm(p_t * p_r);
  if (overlap > 1e-8)
    throw InputError("dsum_approx_error: subspaces not orthogonal, ||P_t P_R||_F = " +
                     std::to_string(overlap));
  const Matrix residual = w_star - p_t * w_star - p_r * w_star;
  return frobenius_norm_sq(residual);
}

std::pair<double, double> reduction_identity(const Matrix& w_star, const Matrix& p_t,
                                             const Matrix& p_r) {
  const double e_text = text_approx_error(w_star, p_t);
  const double e_dsum = dsum_approx_error(w_star, p_t, p_r);
  const double reduction = e_text - e_dsum;
  const Matrix captured = p_r * (w_star - p_t * w_star);
  const double direct = frobenius_norm_sq(captured);
  const double residual = std::fabs(reduction - direct) / energy_scale(w_star);
  return {reduction, residual};
}

SingularValueBounds singular_value_bounds(const Matrix& w_star, std::size_t r_t,
                                          std::size_t k_t) {
  const std::size_t m_t = r_t + k_t;
  if (m_t > w_star.rows())
    throw InputError("singular_value_bounds: r_t + k_t exceeds the feature dimension");
  const SvdResult dec = svd(w_star);
  SingularValueBounds out;
  for (std::size_t j = 0; j < dec.sigma.size(); ++j) {
    const double e = dec.sigma[j] * dec.sigma[j];
    if (j >= r_t) out.lemma1_tail += e;
    if (j >= m_t) out.dsum_tail += e;
    if (j >= r_t && j < m_t) out.reduction_upper += e;
    if (j < k_t) out.reduction_cap += e;
  }
  return out;
}

TheoryReport theory_report(const Matrix& w_star, const Matrix& p_t, const Matrix& p_r,
                           std::size_t r_t, std::size_t k_t, double rank_rel_tol) {
  TheoryReport rep;
  rep.r_t = r_t;
  rep.k_t = k_t;
  rep.m_t = r_t + k_t;
  rep.e_text = text_approx_error(w_star, p_t);
  rep.e_dsum = dsum_approx_error(w_star, p_t, p_r);
  auto [reduction, residual] = reduction_identity(w_star, p_t, p_r);
  rep.reduction = reduction;
  rep.reduction_identity_residual = residual;
  rep.identity_holds = residual < 1e-8;

  const SingularValueBounds bounds = singular_value_bounds(w_star, r_t, k_t);
  rep.lemma1_tail = bounds.lemma1_tail;
  rep.dsum_tail = bounds.dsum_tail;
  rep.reduction_upper = bounds.reduction_upper;
  rep.reduction_cap = bounds.reduction_cap;

  const double tol = 1e-10 * energy_scale(w_star);
  rep.lemma1_holds = rep.e_text >= rep.lemma1_tail - tol;
  rep.dsum_bound_holds = rep.e_dsum >= rep.dsum_tail - tol;
  // The band bound is a consequence of the tail bounds only when the text
  // projector is tight against its own tail; certify the implication.
  rep.text_subspace_tight = rep.e_text <= rep.lemma1_tail + 1e-8 * energy_scale(w_star);
  rep.reduction_upper_holds =
      !rep.text_subspace_tight || rep.reduction <= rep.reduction_upper + tol;
  rep.reduction_cap_holds = rep.reduction <= rep.reduction_cap + tol;

  const SvdResult dec = svd(w_star);
  const double smax = dec.sigma.empty() ? 0.0 : dec.sigma.front();
  std::size_t rho = 0;
  while (rho < dec.sigma.size() && smax > 0.0 && dec.sigma[rho] > rank_rel_tol * smax) ++rho;
  rep.rho_t = rho;
  return rep;
}

Matrix ridge_fit_classifier(const Matrix& features, const std::vector<int>& labels,
                            const std::vector<int>& class_order, double lambda) {
  if (features.empty()) throw InputError("ridge_fit_classifier: empty features");
  if (features.cols() != labels.size())
    throw InputError("ridge_fit_classifier: labels misaligned with feature columns");
  if (!(lambda > 0.0)) throw InputError("ridge_fit_classifier: lambda must be > 0");

  const std::size_t d = features.rows();
  const std::size_t n = features.cols();
  const std::size_t n_cls = class_order.size();

  Matrix y(n, n_cls);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = std::find(class_order.begin(), class_order.end(), labels[i]);
    if (it == class_order.end())
      throw InputError("ridge_fit_classifier: label outside class order");
    y(i, static_cast<std::size_t>(it - class_order.begin())) = 1.0;
  }

  // W = argmin ||X^T W - Y||_F^2 + lambda ||W||_F^2
  //   = U diag(s / (s^2 + lambda)) V^T Y   with X = U diag(s) V^T.
  const SvdResult dec = svd(features);
  Matrix vty = transpose(dec.v) * y;  // k x n_cls
  for (std::size_t j = 0; j < dec.sigma.size(); ++j) {
    const double s = dec.sigma[j];
    const double f = s / (s * s + lambda);
    for (std::size_t c = 0; c < n_cls; ++c) vty(j, c) *= f;
  }
  Matrix w(d, n_cls);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < dec.sigma.size(); ++j) {
      const double u = dec.u(i, j);
      if (u == 0.0) continue;
      for (std::size_t c = 0; c < n_cls; ++c) w(i, c) += u * vty(j, c);
    }
  return w;
}

TheoryReport audit_pipeline_theory(const ModelState& state, int task_id,
                                   const TaskDataset& task, WStarSource source, Rng& rng,
                                   const HyperParams& hp) {
  const TaskArtifacts* art = state.find_task(task_id);
  if (!art) throw StateError("audit_pipeline_theory: task " + std::to_string(task_id) +
                             " not trained");
  if (!art->subspace)
    throw StateError("audit_pipeline_theory: text subspace for task " +
                     std::to_string(task_id) + " missing");
  const TextSubspace& sub = *art->subspace;
  const std::size_t d = state.encoder.feature_dim();

  // Observed compensation subspace: the orthonormalized columns of the
  // effective head. A missing or zero head contributes an empty subspace.
  Matrix p_r(d, d);
  std::size_t k_t = 0;
  if (art->head && !art->head->w_comp.is_zero()) {
    const Matrix effective = sub.p_perp * art->head->w_comp;
    const Matrix basis = orthonormal_basis(effective, hp.rank_rel_tol);
    k_t = basis.cols();
    if (k_t > 0) p_r = projectors(basis, d).p;
  }

  Matrix w_star(d, art->class_ids.size());
  if (source == WStarSource::Random) {
    for (auto& x : w_star.storage()) x = rng.gaussian();
  } else {
    Matrix features(d, task.train.size());
    std::vector<int> labels(task.train.size());
    for (std::size_t i = 0; i < task.train.size(); ++i) {
      features.set_col(i, encode_image(task.train[i].latent, state.encoder,
                                       art->visual_adapter));
      labels[i] = task.train[i].label;
    }
    w_star = ridge_fit_classifier(features, labels, art->class_ids, hp.ridge_lambda);
  }

  return theory_report(w_star, sub.p, p_r, sub.rank, k_t, hp.rank_rel_tol);
}

}  // namespace cilab

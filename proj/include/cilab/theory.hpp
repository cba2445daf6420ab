#pragma once

#include <cstdint>
#include <utility>

#include "cilab/rng.hpp"
#include "cilab/state.hpp"
#include "cilab/synth.hpp"
#include "cilab/training.hpp"

namespace cilab {

// Certificate for the subspace-approximation results on one (classifier,
// projector pair) instance. All energies are squared Frobenius norms; the
// bounds compare against singular-value tail sums of the analysis classifier.
//
// Naming note: m_t here is the combined projector rank r_t + k_t. The
// routing module's per-task MSP is a different quantity and lives under
// ScoreBreakdown::msp.
struct TheoryReport {
  double e_text = 0.0;       // ||(I - P_t) W*||_F^2
  double e_dsum = 0.0;       // ||(I - P_t - P_R) W*||_F^2
  double reduction = 0.0;    // e_text - e_dsum
  double reduction_identity_residual = 0.0;  // vs ||P_R (I - P_t) W*||_F^2, relative
  double lemma1_tail = 0.0;      // sum_{j > r_t} sigma_j^2
  bool lemma1_holds = false;     // e_text >= lemma1_tail
  double dsum_tail = 0.0;        // sum_{j > m_t} sigma_j^2
  bool dsum_bound_holds = false; // e_dsum >= dsum_tail
  // Band bound on the reduction. It is guaranteed only when the text
  // projector attains the tail lower bound (e_text == lemma1_tail), so the
  // flag certifies that implication: either the premise is off, or the band
  // bound holds. text_subspace_tight records the premise.
  double reduction_upper = 0.0;  // sum_{j = r_t+1}^{m_t} sigma_j^2
  bool reduction_upper_holds = false;
  bool text_subspace_tight = false;
  // Unconditional cap: reduction = ||P_R W*||_F^2 <= sum of the top k_t
  // squared singular values, for any orthogonal projector pair.
  double reduction_cap = 0.0;
  bool reduction_cap_holds = false;
  bool identity_holds = false;   // residual below 1e-8 relative
  std::size_t r_t = 0;
  std::size_t k_t = 0;
  std::size_t m_t = 0;
  std::size_t rho_t = 0;         // numerical rank of W*

  bool all_hold() const {
    return lemma1_holds && dsum_bound_holds && reduction_upper_holds &&
           reduction_cap_holds && identity_holds &&
           e_dsum <= e_text + 1e-12 * std::max(1.0, e_text);
  }
};

// ||(I - P_t) W*||_F^2. p_t must be idempotent within 1e-8.
double text_approx_error(const Matrix& w_star, const Matrix& p_t);

// ||(I - P_t - P_R) W*||_F^2. The two projectors must be orthogonal:
// ||P_t P_R||_F <= 1e-8, otherwise InputError reporting the violation.
double dsum_approx_error(const Matrix& w_star, const Matrix& p_t, const Matrix& p_r);

// (reduction, relative residual of reduction vs ||P_R (I - P_t) W*||_F^2).
std::pair<double, double> reduction_identity(const Matrix& w_star, const Matrix& p_t,
                                             const Matrix& p_r);

struct SingularValueBounds {
  double lemma1_tail = 0.0;
  double dsum_tail = 0.0;
  double reduction_upper = 0.0;  // the (r_t, m_t] band
  double reduction_cap = 0.0;    // top-k_t energy, unconditional
};

// Tail energies of w_star past ranks r_t and m_t = r_t + k_t, and the
// between-rank band that caps any reduction. m_t may not exceed the feature
// dimension (rows of w_star).
SingularValueBounds singular_value_bounds(const Matrix& w_star, std::size_t r_t,
                                          std::size_t k_t);

// Full certificate for explicit inputs.
TheoryReport theory_report(const Matrix& w_star, const Matrix& p_t, const Matrix& p_r,
                           std::size_t r_t, std::size_t k_t, double rank_rel_tol = 1e-10);

enum class WStarSource { Random, RidgeFit };

// Analysis-only classifier fit by ridge regression of one-hot targets on the
// given features (columns are samples). Solved through the SVD.
Matrix ridge_fit_classifier(const Matrix& features, const std::vector<int>& labels,
                            const std::vector<int>& class_order, double lambda);

// Audit of a trained task: P_t from the live text subspace, P_R from the
// orthonormalized span of the effective head columns, W* either drawn from
// rng or ridge-fit on the task's training features.
TheoryReport audit_pipeline_theory(const ModelState& state, int task_id,
                                   const TaskDataset& task, WStarSource source, Rng& rng,
                                   const HyperParams& hp);

}  // namespace cilab

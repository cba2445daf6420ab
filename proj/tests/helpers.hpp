#pragma once

// Shared fixtures and oracles for the test suites.

#include <cmath>
#include <vector>

#include "cilab/rng.hpp"
#include "cilab/state.hpp"
#include "cilab/synth.hpp"
#include "cilab/training.hpp"

namespace cilab::testing {

inline double grad_rel_err(double analytic, double fd) {
  return std::fabs(analytic - fd) /
         std::max({std::fabs(analytic), std::fabs(fd), 1e-4});
}

// Central finite differences of a scalar function with respect to every
// entry of a parameter matrix, compared against the analytic gradient.
// Returns the worst relative error seen.
template <class Fn>
double max_grad_err(Matrix& param, const Matrix& analytic, Fn value, double eps = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < param.storage().size(); ++i) {
    const double saved = param.storage()[i];
    param.storage()[i] = saved + eps;
    const double fp = value();
    param.storage()[i] = saved - eps;
    const double fm = value();
    param.storage()[i] = saved;
    const double fd = (fp - fm) / (2.0 * eps);
    worst = std::max(worst, grad_rel_err(analytic.storage()[i], fd));
  }
  return worst;
}

// A tiny task with well-separated classes and hand-chosen prompts.
inline TaskDataset make_task(int task_id, const std::vector<int>& class_ids,
                             std::size_t latent_dim, std::size_t samples_per_class,
                             double noise, Rng& rng) {
  TaskDataset task;
  task.task_id = task_id;
  task.class_ids = class_ids;
  for (int c : class_ids) {
    Vector mean = normalized(rng.gaussian_vector(latent_dim));
    task.prompts[c] = mean;
    for (std::size_t s = 0; s < samples_per_class; ++s) {
      Vector x = mean;
      for (auto& v : x) v += noise * rng.gaussian();
      task.train.push_back({x, c});
    }
  }
  return task;
}

inline ModelState make_state(std::size_t feature_dim, std::size_t latent_dim,
                             std::size_t rank, std::uint64_t seed) {
  Rng rng(seed);
  ModelState state;
  state.encoder = FrozenEncoder::random(feature_dim, latent_dim, rng);
  state.text_adapter = new_adapter(rank, latent_dim, feature_dim, seed + 1);
  return state;
}

inline void randomize_adapter(LowRankAdapter& ad, Rng& rng, double scale = 0.3) {
  for (auto& x : ad.a.storage()) x = scale * rng.gaussian();
  for (auto& x : ad.b.storage()) x = scale * rng.gaussian();
}

}  // namespace cilab::testing

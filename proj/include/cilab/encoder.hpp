#pragma once

#include <cstdint>

#include "cilab/matrix.hpp"
#include "cilab/rng.hpp"

namespace cilab {

// Frozen dual encoder: one linear map per branch, immutable after
// construction. Stands in for a pretrained backbone; all adaptation happens
// through additive low-rank deltas on top of it.
struct FrozenEncoder {
  Matrix w_img0;  // feature_dim x latent_dim
  Matrix w_txt0;  // feature_dim x latent_dim

  std::size_t feature_dim() const { return w_img0.rows(); }
  std::size_t latent_dim() const { return w_img0.cols(); }

  static FrozenEncoder random(std::size_t feature_dim, std::size_t latent_dim, Rng& rng);
};

// Trainable low-rank delta: effective weight is w0 + scale * b * a.
// a is Gaussian-initialized, b starts at zero, so a fresh adapter is an exact
// no-op on the frozen branch.
struct LowRankAdapter {
  Matrix a;  // rank x latent_dim
  Matrix b;  // feature_dim x rank
  double scale = 1.0;

  std::size_t rank() const { return a.rows(); }
  Matrix delta() const;  // scale * b * a, feature_dim x latent_dim
};

struct ClassPrompt {
  int class_id = 0;
  Vector prompt_latent;
};

LowRankAdapter new_adapter(std::size_t rank, std::size_t latent_dim,
                           std::size_t feature_dim, std::uint64_t seed);

// Unit-normalized (w_img0 + scale*b*a) x.
// Throws InputError on a dimension mismatch and DegenerateFeatureError when
// the pre-normalization output drops below 1e-12.
Vector encode_image(const Vector& x, const FrozenEncoder& enc, const LowRankAdapter& adapter);

// Same as encode_image on the text branch with the shared adapter.
Vector encode_text(const ClassPrompt& prompt, const FrozenEncoder& enc,
                   const LowRankAdapter& shared_adapter);

}  // namespace cilab

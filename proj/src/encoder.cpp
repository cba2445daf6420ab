#include "cilab/encoder.hpp"

#include <cmath>

#include "cilab/error.hpp"

namespace cilab {

FrozenEncoder FrozenEncoder::random(std::size_t feature_dim, std::size_t latent_dim, Rng& rng) {
  FrozenEncoder enc;
  enc.w_img0 = Matrix(feature_dim, latent_dim);
  enc.w_txt0 = Matrix(feature_dim, latent_dim);
  const double sd = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  for (auto& x : enc.w_img0.storage()) x = sd * rng.gaussian();
  for (auto& x : enc.w_txt0.storage()) x = sd * rng.gaussian();
  return enc;
}

Matrix LowRankAdapter::delta() const { return scale * (b * a); }

LowRankAdapter new_adapter(std::size_t rank, std::size_t latent_dim,
                           std::size_t feature_dim, std::uint64_t seed) {
  if (rank < 1 || latent_dim < 1 || feature_dim < 1)
    throw InputError("new_adapter: dimensions must be >= 1");
  LowRankAdapter ad;
  ad.a = Matrix(rank, latent_dim);
  ad.b = Matrix(feature_dim, rank);
  ad.scale = 1.0 / static_cast<double>(rank);
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  for (auto& x : ad.a.storage()) x = sd * rng.gaussian();
  return ad;
}

namespace {

Vector encode_linear(const Matrix& w0, const LowRankAdapter& ad, const Vector& x) {
  if (x.size() != w0.cols()) throw InputError("encode: input dimension mismatch");
  Vector y = matvec(w0, x);
  // b starts at zero; skipping a zero delta keeps fresh-adapter encodes
  // bit-identical to the frozen branch.
  if (!ad.b.is_zero()) {
    const Vector d = matvec(ad.a, x);
    const Vector z = matvec(ad.b, d);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += ad.scale * z[i];
  }
  const double n = norm(y);
  if (!(n > 1e-12))
    throw DegenerateFeatureError("encode: feature norm below 1e-12 before normalization");
  for (auto& v : y) v /= n;
  return y;
}

}  // namespace

Vector encode_image(const Vector& x, const FrozenEncoder& enc, const LowRankAdapter& adapter) {
  return encode_linear(enc.w_img0, adapter, x);
}

Vector encode_text(const ClassPrompt& prompt, const FrozenEncoder& enc,
                   const LowRankAdapter& shared_adapter) {
  return encode_linear(enc.w_txt0, shared_adapter, prompt.prompt_latent);
}

}  // namespace cilab

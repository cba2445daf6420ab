#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cilab/encoder.hpp"
#include "cilab/error.hpp"
#include "cilab/rng.hpp"

using namespace cilab;

TEST_CASE("fresh adapter is an exact no-op") {
  auto ad = new_adapter(2, 8, 6, 11);
  CHECK(ad.b.is_zero());
  CHECK(frobenius_norm(ad.delta()) == 0.0);
  CHECK(ad.delta().rows() == 6);
  CHECK(ad.delta().cols() == 8);
  CHECK(ad.scale == 0.5);

  Rng rng(3);
  auto enc = FrozenEncoder::random(6, 8, rng);
  Vector x = rng.gaussian_vector(8);
  Vector with_adapter = encode_image(x, enc, ad);
  Vector frozen = normalized(matvec(enc.w_img0, x));
  CHECK(with_adapter == frozen);  // bit-identical
}

TEST_CASE("same seed reproduces the adapter") {
  auto a = new_adapter(3, 5, 4, 77);
  auto b = new_adapter(3, 5, 4, 77);
  CHECK(a.a == b.a);
}

TEST_CASE("identity encoder passes basis vectors through") {
  FrozenEncoder enc;
  enc.w_img0 = Matrix::identity(4);
  enc.w_txt0 = Matrix::identity(4);
  auto ad = new_adapter(2, 4, 4, 1);
  Vector e1{1, 0, 0, 0};
  Vector out = encode_image(e1, enc, ad);
  CHECK(out == e1);
}

TEST_CASE("encode matches the materialized-delta oracle") {
  Rng rng(21);
  auto enc = FrozenEncoder::random(7, 5, rng);
  auto ad = new_adapter(3, 5, 7, 5);
  for (auto& v : ad.b.storage()) v = rng.gaussian();  // make the delta active
  for (int trial = 0; trial < 10; ++trial) {
    Vector x = rng.gaussian_vector(5);
    Vector got = encode_image(x, enc, ad);
    Vector expect = normalized(matvec(enc.w_img0 + ad.delta(), x));
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("encoded features are unit within 1e-12") {
  Rng rng(31);
  auto enc = FrozenEncoder::random(9, 6, rng);
  auto ad = new_adapter(2, 6, 9, 8);
  for (auto& v : ad.b.storage()) v = 0.3 * rng.gaussian();
  for (int trial = 0; trial < 20; ++trial) {
    Vector v = encode_image(rng.gaussian_vector(6), enc, ad);
    CHECK(std::abs(norm(v) - 1.0) < 1e-12);
  }
}

TEST_CASE("orthogonal prompts stay orthogonal under the identity text branch") {
  FrozenEncoder enc;
  enc.w_img0 = Matrix::identity(4);
  enc.w_txt0 = Matrix::identity(4);
  auto shared = new_adapter(2, 4, 4, 2);
  Vector ta = encode_text({0, {1, 0, 0, 0}}, enc, shared);
  Vector tb = encode_text({1, {0, 1, 0, 0}}, enc, shared);
  CHECK(dot(ta, tb) == doctest::Approx(0.0));
}

TEST_CASE("text encode matches the direct-arithmetic oracle") {
  Rng rng(41);
  auto enc = FrozenEncoder::random(6, 4, rng);
  auto shared = new_adapter(2, 4, 6, 9);
  for (auto& v : shared.b.storage()) v = rng.gaussian();
  ClassPrompt p{5, rng.gaussian_vector(4)};
  Vector got = encode_text(p, enc, shared);
  Vector expect = normalized(matvec(enc.w_txt0 + shared.delta(), p.prompt_latent));
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("degenerate feature raises") {
  FrozenEncoder enc;
  enc.w_img0 = Matrix(3, 3);  // zero map
  enc.w_txt0 = Matrix(3, 3);
  auto ad = new_adapter(1, 3, 3, 4);
  CHECK_THROWS_AS(encode_image(Vector{1, 0, 0}, enc, ad), DegenerateFeatureError);
}

TEST_CASE("dimension mismatch raises") {
  Rng rng(51);
  auto enc = FrozenEncoder::random(4, 3, rng);
  auto ad = new_adapter(1, 3, 4, 4);
  CHECK_THROWS_AS(encode_image(Vector{1, 0}, enc, ad), InputError);
  CHECK_THROWS_AS(new_adapter(0, 3, 4, 4), InputError);
}

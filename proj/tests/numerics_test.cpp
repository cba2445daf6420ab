#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cilab/error.hpp"
#include "cilab/matrix.hpp"
#include "cilab/rng.hpp"
#include "cilab/svd.hpp"

using namespace cilab;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& x : m.storage()) x = rng.gaussian();
  return m;
}

Matrix random_orthonormal(std::size_t dim, std::size_t k, Rng& rng) {
  return orthonormal_basis(random_matrix(dim, k, rng), 1e-10);
}

// Reconstruction oracle: multiply the factors back out directly.
Matrix reconstruct(const SvdResult& r) {
  Matrix us = r.u;
  for (std::size_t j = 0; j < r.sigma.size(); ++j)
    for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= r.sigma[j];
  return us * transpose(r.v);
}

double max_abs_dev_from_identity(const Matrix& q) {
  Matrix g = transpose(q) * q;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      worst = std::max(worst, std::fabs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

}  // namespace

TEST_CASE("svd of identity has unit singular values") {
  auto r = svd(Matrix::identity(3));
  REQUIRE(r.sigma.size() == 3);
  for (double s : r.sigma) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd of rank-1 outer product") {
  Rng rng(7);
  Vector u = normalized(rng.gaussian_vector(3));
  Vector v = normalized(rng.gaussian_vector(3));
  Matrix m(3, 3);
  add_outer(m, 1.0, u, v);
  auto r = svd(m);
  CHECK(r.sigma[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.sigma[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.sigma[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("svd reconstructs a random 4x3 matrix") {
  Rng rng(11);
  Matrix m = random_matrix(4, 3, rng);
  auto r = svd(m);
  const double resid = frobenius_norm(reconstruct(r) - m) / frobenius_norm(m);
  CHECK(resid < 1e-8);
}

TEST_CASE("svd factors are orthonormal and sigma nonincreasing") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t r = 1 + rng.uniform_int(8);
    const std::size_t c = 1 + rng.uniform_int(8);
    Matrix m = random_matrix(r, c, rng);
    auto res = svd(m);
    CHECK(max_abs_dev_from_identity(res.u) < 1e-10);
    CHECK(max_abs_dev_from_identity(res.v) < 1e-10);
    for (std::size_t j = 1; j < res.sigma.size(); ++j) CHECK(res.sigma[j] <= res.sigma[j - 1]);
    const double resid = frobenius_norm(reconstruct(res) - m);
    CHECK(resid < 1e-8 * std::max(1.0, frobenius_norm(m)));
  }
}

TEST_CASE("svd energy identity: sum sigma^2 equals squared Frobenius norm") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m = random_matrix(2 + rng.uniform_int(6), 2 + rng.uniform_int(6), rng);
    auto r = svd(m);
    double e = 0.0;
    for (double s : r.sigma) e += s * s;
    CHECK(e == doctest::Approx(frobenius_norm_sq(m)).epsilon(1e-8));
  }
}

TEST_CASE("svd is deterministic and sign-canonical") {
  Rng rng(19);
  Matrix m = random_matrix(5, 4, rng);
  auto a = svd(m);
  auto b = svd(m);
  CHECK(a.u == b.u);
  CHECK(a.v == b.v);
  CHECK(a.sigma == b.sigma);
  for (std::size_t j = 0; j < a.sigma.size(); ++j) {
    double lead = 0.0;
    for (std::size_t i = 0; i < a.u.rows(); ++i) {
      if (a.u(i, j) != 0.0) {
        lead = a.u(i, j);
        break;
      }
    }
    CHECK(lead >= 0.0);
  }
}

TEST_CASE("svd rejects bad input") {
  CHECK_THROWS_AS(svd(Matrix()), InputError);
  Matrix m(2, 2);
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(svd(m), InputError);
}

TEST_CASE("orthonormal_basis ranks") {
  CHECK(orthonormal_basis(Matrix::identity(3), 1e-10).cols() == 3);

  Rng rng(23);
  Vector u = normalized(rng.gaussian_vector(4));
  Vector v = normalized(rng.gaussian_vector(4));
  Matrix rank1(4, 4);
  add_outer(rank1, 1.0, u, v);
  CHECK(orthonormal_basis(rank1, 1e-10).cols() == 1);

  // Constructed via known factors: sigma = [1, 1e-12] falls under rel_tol 1e-10.
  Matrix q1 = random_orthonormal(5, 2, rng);
  Matrix q2 = random_orthonormal(2, 2, rng);
  Matrix s(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = 1e-12;
  Matrix m = q1 * (s * transpose(q2));
  CHECK(orthonormal_basis(m, 1e-10).cols() == 1);

  CHECK(orthonormal_basis(Matrix(3, 2), 1e-10).cols() == 0);
  CHECK_THROWS_AS(orthonormal_basis(Matrix::identity(2), 0.0), InputError);
  CHECK_THROWS_AS(orthonormal_basis(Matrix::identity(2), 1.0), InputError);
}

TEST_CASE("projectors from a single basis vector") {
  Matrix basis(3, 1);
  basis(0, 0) = 1.0;
  auto pp = projectors(basis, 3);
  CHECK(frobenius_norm(pp.p * pp.p - pp.p) < 1e-10);
  CHECK(pp.p(0, 0) == 1.0);
  CHECK(pp.p(1, 1) == 0.0);
}

TEST_CASE("projectors of the empty basis") {
  auto pp = projectors(Matrix(), 4);
  CHECK(frobenius_norm(pp.p) == 0.0);
  CHECK(frobenius_norm(pp.p_perp - Matrix::identity(4)) == 0.0);
}

TEST_CASE("projector complement maps basis to zero and complement to itself") {
  Matrix basis(3, 2);
  basis(0, 0) = 1.0;
  basis(1, 1) = 1.0;
  auto pp = projectors(basis, 3);
  Vector e1{1, 0, 0}, e3{0, 0, 1};
  Vector r1 = matvec(pp.p_perp, e1);
  Vector r3 = matvec(pp.p_perp, e3);
  CHECK(norm(r1) == doctest::Approx(0.0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(r3[i] == doctest::Approx(e3[i]));
}

TEST_CASE("projectors reject a non-orthonormal basis") {
  Matrix bad(3, 2);
  bad(0, 0) = 1.0;
  bad(0, 1) = 1.0;  // duplicated direction
  CHECK_THROWS_AS(projectors(bad, 3), InputError);
}

TEST_CASE("projector properties over random bases") {
  Rng rng(29);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t dim = 2 + rng.uniform_int(10);
    const std::size_t k = 1 + rng.uniform_int(dim);
    Matrix basis = random_orthonormal(dim, k, rng);
    auto pp = projectors(basis, dim);
    CHECK(frobenius_norm(pp.p * pp.p - pp.p) < 1e-10);
    CHECK(frobenius_norm(pp.p * pp.p_perp) < 1e-10);
    CHECK(frobenius_norm(pp.p + pp.p_perp - Matrix::identity(dim)) < 1e-12);
  }
}

TEST_CASE("cosine basics") {
  Vector u{1, 0};
  CHECK(cosine(u, u) == doctest::Approx(1.0));
  Vector v{0, 1};
  CHECK(cosine(u, v) == doctest::Approx(0.0));
  Vector w{1, 1};
  CHECK(cosine(w, u) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cosine(w, u) == cosine(u, w));
  CHECK_THROWS_AS(cosine(Vector{0, 0}, u), InputError);
  CHECK_THROWS_AS(cosine(Vector{1, 0, 0}, u), InputError);
}

#include "cilab/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cilab/error.hpp"

namespace cilab {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kRotTol = 1e-15;

// One-sided Jacobi on the columns of b (rows >= cols). On exit the columns of
// b are mutually orthogonal and v accumulates the applied right rotations.
void jacobi_orthogonalize(Matrix& b, Matrix& v) {
  const std::size_t n = b.cols();
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < b.rows(); ++i) {
          const double bp = b(i, p);
          const double bq = b(i, q);
          app += bp * bp;
          aqq += bq * bq;
          apq += bp * bq;
        }
        if (app == 0.0 || aqq == 0.0) continue;
        if (std::fabs(apq) <= kRotTol * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t i = 0; i < b.rows(); ++i) {
          const double bp = b(i, p);
          const double bq = b(i, q);
          b(i, p) = c * bp - s * bq;
          b(i, q) = s * bp + c * bq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("svd: Jacobi rotations did not converge after " +
                       std::to_string(kMaxSweeps) + " sweeps");
}

// Fill column j of u with a unit vector orthogonal to columns [0, j) by
// Gram-Schmidt against the standard basis, trying e_0, e_1, ... in order.
void complete_column(Matrix& u, std::size_t j) {
  const std::size_t m = u.rows();
  for (std::size_t k = 0; k < m; ++k) {
    Vector cand(m, 0.0);
    cand[k] = 1.0;
    for (std::size_t c = 0; c < j; ++c) {
      double proj = 0.0;
      for (std::size_t i = 0; i < m; ++i) proj += u(i, c) * cand[i];
      for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, c);
    }
    const double n = norm(cand);
    if (n > 0.5) {
      for (std::size_t i = 0; i < m; ++i) u(i, j) = cand[i] / n;
      return;
    }
  }
  throw NumericalError("svd: failed to complete an orthonormal basis");
}

// SVD for rows >= cols via one-sided Jacobi.
SvdResult svd_tall(const Matrix& m) {
  const std::size_t nr = m.rows();
  const std::size_t nc = m.cols();
  Matrix b = m;
  Matrix v = Matrix::identity(nc);
  jacobi_orthogonalize(b, v);

  Vector sig(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < nr; ++i) s += b(i, j) * b(i, j);
    sig[j] = std::sqrt(s);
  }

  // Stable descending order keeps ties deterministic.
  std::vector<std::size_t> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return sig[a] > sig[c]; });

  SvdResult out;
  out.u = Matrix(nr, nc);
  out.v = Matrix(nc, nc);
  out.sigma.resize(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    const std::size_t src = order[j];
    out.sigma[j] = sig[src];
    for (std::size_t i = 0; i < nc; ++i) out.v(i, j) = v(i, src);
    if (sig[src] > 1e-300) {
      for (std::size_t i = 0; i < nr; ++i) out.u(i, j) = b(i, src) / sig[src];
    } else {
      out.sigma[j] = 0.0;
      complete_column(out.u, j);
    }
  }
  return out;
}

void fix_signs(SvdResult& r) {
  for (std::size_t j = 0; j < r.sigma.size(); ++j) {
    double lead = 0.0;
    for (std::size_t i = 0; i < r.u.rows(); ++i) {
      if (r.u(i, j) != 0.0) {
        lead = r.u(i, j);
        break;
      }
    }
    if (lead < 0.0) {
      for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, j) = -r.u(i, j);
      for (std::size_t i = 0; i < r.v.rows(); ++i) r.v(i, j) = -r.v(i, j);
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& m) {
  if (m.empty()) throw InputError("svd: empty matrix");
  if (!m.all_finite()) throw InputError("svd: non-finite entries");
  SvdResult r;
  if (m.rows() >= m.cols()) {
    r = svd_tall(m);
  } else {
    // m = u s v^T  <=>  m^T = v s u^T
    SvdResult t = svd_tall(transpose(m));
    r.u = std::move(t.v);
    r.v = std::move(t.u);
    r.sigma = std::move(t.sigma);
  }
  fix_signs(r);
  return r;
}

Matrix orthonormal_basis(const Matrix& m, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0))
    throw InputError("orthonormal_basis: rel_tol must lie in (0,1)");
  const SvdResult r = svd(m);
  const double smax = r.sigma.empty() ? 0.0 : r.sigma.front();
  std::size_t rank = 0;
  while (rank < r.sigma.size() && r.sigma[rank] > rel_tol * smax && smax > 0.0) ++rank;
  Matrix basis(m.rows(), rank);
  for (std::size_t j = 0; j < rank; ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) basis(i, j) = r.u(i, j);
  return basis;
}

ProjectorPair projectors(const Matrix& basis, std::size_t ambient_dim) {
  if (basis.cols() > 0 && basis.rows() != ambient_dim)
    throw InputError("projectors: basis rows do not match ambient dimension");
  // Orthonormality gate: max deviation of B^T B from the identity.
  double worst = 0.0;
  for (std::size_t a = 0; a < basis.cols(); ++a) {
    for (std::size_t b = a; b < basis.cols(); ++b) {
      double ip = 0.0;
      for (std::size_t i = 0; i < basis.rows(); ++i) ip += basis(i, a) * basis(i, b);
      const double dev = std::fabs(ip - (a == b ? 1.0 : 0.0));
      worst = std::max(worst, dev);
    }
  }
  if (worst > 1e-10)
    throw InputError("projectors: basis not orthonormal, max column-pair inner product deviation " +
                     std::to_string(worst));

  ProjectorPair out;
  out.p = Matrix(ambient_dim, ambient_dim);
  for (std::size_t j = 0; j < basis.cols(); ++j)
    for (std::size_t r = 0; r < ambient_dim; ++r) {
      const double br = basis(r, j);
      if (br == 0.0) continue;
      for (std::size_t c = 0; c < ambient_dim; ++c) out.p(r, c) += br * basis(c, j);
    }
  out.p_perp = Matrix::identity(ambient_dim) - out.p;
  return out;
}

}  // namespace cilab

#pragma once

#include "cilab/matrix.hpp"

namespace cilab {

// Thin SVD m = u * diag(sigma) * v^T with k = min(rows, cols) columns.
//
// sigma is sorted nonincreasing. Both u and v have orthonormal columns even
// when the input is rank deficient (null directions are completed from the
// standard basis). The sign of each pair (u_j, v_j) is canonicalized so the
// first nonzero entry of u_j is nonnegative, which makes outputs byte-stable
// across runs.
struct SvdResult {
  Matrix u;      // rows x k
  Vector sigma;  // k, nonincreasing, nonnegative
  Matrix v;      // cols x k
};

// One-sided Jacobi SVD. Deterministic for a fixed input.
// Throws InputError on empty or non-finite input, NumericalError (with the
// sweep count in the message) if rotations fail to converge.
SvdResult svd(const Matrix& m);

// Columns of u whose singular value exceeds rel_tol * sigma_max. The column
// count is the numerical rank; a (numerically) zero input yields a matrix
// with zero columns. rel_tol must lie in (0, 1).
Matrix orthonormal_basis(const Matrix& m, double rel_tol = 1e-10);

struct ProjectorPair {
  Matrix p;       // basis * basis^T
  Matrix p_perp;  // I - p
};

// Orthogonal projectors onto span(basis) and its complement. The basis must
// have ambient_dim rows and orthonormal columns within 1e-10; an empty basis
// (zero columns) gives p = 0, p_perp = I.
ProjectorPair projectors(const Matrix& basis, std::size_t ambient_dim);

}  // namespace cilab

#include "cilab/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "cilab/error.hpp"

namespace cilab {

Vector Matrix::col(std::size_t j) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_col(std::size_t j, const Vector& v) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

bool Matrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InputError("matrix product: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError("matrix sum: shapes differ");
  Matrix c = a;
  for (std::size_t i = 0; i < c.storage().size(); ++i) c.storage()[i] += b.storage()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError("matrix difference: shapes differ");
  Matrix c = a;
  for (std::size_t i = 0; i < c.storage().size(); ++i) c.storage()[i] -= b.storage()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (auto& x : c.storage()) x *= s;
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.rows() != b.rows()) throw InputError("hcat: row counts differ");
  Matrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
  }
  return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw InputError("matvec: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
  if (a.rows() != x.size()) throw InputError("matvec_t: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

void add_outer(Matrix& a, double s, const Vector& x, const Vector& y) {
  if (a.rows() != x.size() || a.cols() != y.size())
    throw InputError("add_outer: dimension mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double sx = s * x[i];
    if (sx == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += sx * y[j];
  }
}

double frobenius_norm_sq(const Matrix& a) {
  double acc = 0.0;
  for (double x : a.storage()) acc += x * x;
  return acc;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(frobenius_norm_sq(a)); }

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InputError("dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

bool all_finite(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector normalized(const Vector& v) {
  const double n = norm(v);
  if (!(n > 1e-12)) throw InputError("normalized: vector norm below 1e-12");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double cosine(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) throw InputError("cosine: dimension mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw InputError("cosine: zero vector");
  const double c = dot(u, v) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace cilab

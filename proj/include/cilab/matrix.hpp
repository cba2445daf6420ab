#pragma once

#include <cstddef>
#include <vector>

namespace cilab {

using Vector = std::vector<double>;

// Dense real matrix, row-major. Small and value-semantic; everything in this
// project is desk-scale so there is no view machinery, just owning storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  Vector col(std::size_t j) const;
  void set_col(std::size_t j, const Vector& v);

  bool all_finite() const;
  bool is_zero() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix transpose(const Matrix& a);
Matrix hcat(const Matrix& a, const Matrix& b);

Vector matvec(const Matrix& a, const Vector& x);
// y = a^T x without materializing the transpose.
Vector matvec_t(const Matrix& a, const Vector& x);
// Rank-1 accumulate: a += s * x y^T.
void add_outer(Matrix& a, double s, const Vector& x, const Vector& y);

double frobenius_norm_sq(const Matrix& a);
double frobenius_norm(const Matrix& a);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);
bool all_finite(const Vector& v);

// Unit-normalized copy. Throws InputError if the norm is below 1e-12.
Vector normalized(const Vector& v);

// Cosine similarity of two nonzero vectors, clamped to [-1, 1].
// Throws InputError on dimension mismatch or (near-)zero input.
double cosine(const Vector& u, const Vector& v);

}  // namespace cilab

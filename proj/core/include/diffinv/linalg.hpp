#pragma once

#include <cstddef>
#include <vector>

#include "diffinv/expr.hpp"

namespace diffinv {

/// Dense row-major matrix of expressions.
class ExprMatrix {
 public:
  ExprMatrix() = default;
  ExprMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static ExprMatrix identity(std::size_t n);
  static ExprMatrix column(std::vector<Expr> entries);
  static ExprMatrix row(std::vector<Expr> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Expr& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Expr& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  ExprMatrix transposed() const;
  /// Copy with row `r` and column `c` removed.
  ExprMatrix minor_matrix(std::size_t r, std::size_t c) const;
  ExprMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  ExprMatrix map(Expr (*f)(const Expr&)) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Expr> data_;
};

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator*(const Expr& s, const ExprMatrix& a);
ExprMatrix operator-(const ExprMatrix& a);

/// Maximum size accepted by det(); cofactor expansion is exponential.
inline constexpr std::size_t kMaxCofactorSize = 6;

/// Determinant by cofactor (Laplace) expansion along the first row, with
/// minors shared between branches.
Expr det(const ExprMatrix& m);
/// Signed cofactor (-1)^(r+c) * det(minor(r, c)).
Expr cofactor(const ExprMatrix& m, std::size_t r, std::size_t c);
/// Transposed cofactor matrix, so that adj(m) * m = det(m) * E.
ExprMatrix adjugate(const ExprMatrix& m);
/// adjugate(m) / det(m).
ExprMatrix inverse(const ExprMatrix& m);

/// Numeric rank of a row-major rows x cols matrix: singular values below
/// rel_threshold * sigma_max count as zero.
std::size_t numeric_rank(const std::vector<double>& row_major, std::size_t rows, std::size_t cols,
                         double rel_threshold = 1e-8);

/// Solves a dense square system; returns false when the matrix is singular.
bool solve_dense(const std::vector<double>& row_major, std::size_t n, const std::vector<double>& rhs,
                 std::vector<double>& out);

}  // namespace diffinv

#include "diffinv/linalg.hpp"

#include <Eigen/Dense>
#include <map>
#include <stdexcept>

#include "diffinv/error.hpp"

namespace diffinv {

ExprMatrix ExprMatrix::identity(std::size_t n) {
  ExprMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = Expr(1);
  return m;
}

ExprMatrix ExprMatrix::column(std::vector<Expr> entries) {
  ExprMatrix m(entries.size(), 1);
  for (std::size_t i = 0; i < entries.size(); ++i) m(i, 0) = entries[i];
  return m;
}

ExprMatrix ExprMatrix::row(std::vector<Expr> entries) {
  ExprMatrix m(1, entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) m(0, i) = entries[i];
  return m;
}

ExprMatrix ExprMatrix::transposed() const {
  ExprMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

ExprMatrix ExprMatrix::minor_matrix(std::size_t r, std::size_t c) const {
  ExprMatrix out(rows_ - 1, cols_ - 1);
  for (std::size_t i = 0, oi = 0; i < rows_; ++i) {
    if (i == r) continue;
    for (std::size_t j = 0, oj = 0; j < cols_; ++j) {
      if (j == c) continue;
      out(oi, oj++) = (*this)(i, j);
    }
    ++oi;
  }
  return out;
}

ExprMatrix ExprMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  ExprMatrix out(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
  return out;
}

ExprMatrix ExprMatrix::map(Expr (*f)(const Expr&)) const {
  ExprMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = f(data_[i]);
  return out;
}

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("matrix size mismatch");
  ExprMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
  return out;
}

ExprMatrix operator-(const ExprMatrix& a) {
  ExprMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = neg(a(i, j));
  return out;
}

ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b) { return a + (-b); }

ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix size mismatch");
  ExprMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      std::vector<Expr> terms;
      terms.reserve(a.cols());
      for (std::size_t k = 0; k < a.cols(); ++k) terms.push_back(mul({a(i, k), b(k, j)}));
      out(i, j) = add(std::move(terms));
    }
  }
  return out;
}

ExprMatrix operator*(const Expr& s, const ExprMatrix& a) {
  ExprMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = mul({s, a(i, j)});
  return out;
}

namespace {

// Determinant of the submatrix on rows [row, n) and the columns in `mask`.
Expr det_rec(const ExprMatrix& m, std::size_t row, unsigned mask, std::map<unsigned, Expr>& memo) {
  const std::size_t n = m.rows();
  if (row == n) return Expr(1);
  if (auto it = memo.find(mask); it != memo.end()) return it->second;
  std::vector<Expr> terms;
  int sign = 1;
  for (std::size_t c = 0; c < n; ++c) {
    if (!(mask & (1u << c))) continue;
    if (!m(row, c).is_zero()) {
      Expr sub = det_rec(m, row + 1, mask & ~(1u << c), memo);
      Expr t = mul({m(row, c), sub});
      terms.push_back(sign > 0 ? t : neg(t));
    }
    sign = -sign;
  }
  Expr out = add(std::move(terms));
  memo.emplace(mask, out);
  return out;
}

}  // namespace

Expr det(const ExprMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("det: matrix not square");
  if (m.rows() == 0) return Expr(1);
  if (m.rows() > kMaxCofactorSize) {
    throw Error("det: size " + std::to_string(m.rows()) + " exceeds the cofactor limit " +
                std::to_string(kMaxCofactorSize));
  }
  std::map<unsigned, Expr> memo;
  return det_rec(m, 0, (1u << m.rows()) - 1, memo);
}

Expr cofactor(const ExprMatrix& m, std::size_t r, std::size_t c) {
  Expr d = det(m.minor_matrix(r, c));
  return (r + c) % 2 == 0 ? d : neg(d);
}

ExprMatrix adjugate(const ExprMatrix& m) {
  const std::size_t n = m.rows();
  ExprMatrix adj(n, n);
  if (n == 1) {
    adj(0, 0) = Expr(1);
    return adj;
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) adj(c, r) = cofactor(m, r, c);
  return adj;
}

ExprMatrix inverse(const ExprMatrix& m) {
  Expr inv_det = pow(det(m), Expr(-1));
  return inv_det * adjugate(m);
}

std::size_t numeric_rank(const std::vector<double>& row_major, std::size_t rows, std::size_t cols,
                         double rel_threshold) {
  if (rows == 0 || cols == 0) return 0;
  Eigen::MatrixXd a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) a(i, j) = row_major[i * cols + j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_threshold * s(0)) ++rank;
  }
  return rank;
}

bool solve_dense(const std::vector<double>& row_major, std::size_t n, const std::vector<double>& rhs,
                 std::vector<double>& out) {
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    b(i) = rhs[i];
    for (std::size_t j = 0; j < n; ++j) a(i, j) = row_major[i * n + j];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) return false;
  Eigen::VectorXd x = lu.solve(b);
  out.assign(x.data(), x.data() + n);
  return true;
}

}  // namespace diffinv

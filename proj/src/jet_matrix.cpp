#include "plane6/jet_matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace plane6 {

JetMatrix::JetMatrix(int rows, int cols, int order, const Point& base)
    : rows_(rows), cols_(cols) {
  m_.assign(static_cast<size_t>(rows) * cols, Jet(order, base));
}

JetMatrix JetMatrix::operator*(const JetMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw std::invalid_argument("JetMatrix: shape mismatch");
  JetMatrix out(rows_, rhs.cols_, std::min(m_[0].order(), rhs.m_[0].order()),
                m_[0].base_point());
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < rhs.cols_; ++c) {
      Jet acc = at(r, 0) * rhs.at(0, c);
      for (int k = 1; k < cols_; ++k) acc += at(r, k) * rhs.at(k, c);
      out.at(r, c) = acc;
    }
  return out;
}

JetMatrix JetMatrix::transpose() const {
  JetMatrix out(cols_, rows_, m_[0].order(), m_[0].base_point());
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out.at(c, r) = at(r, c);
  return out;
}

JetMatrix JetMatrix::inverse() const {
  if (rows_ != cols_) throw std::invalid_argument("JetMatrix: inverse of non-square matrix");
  const int n = rows_;
  int order = m_[0].order();
  for (const Jet& j : m_) order = std::min(order, j.order());
  const Point& base = m_[0].base_point();

  JetMatrix work(n, 2 * n, order, base);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) work.at(r, c) = at(r, c).truncated(order);
    work.at(r, n + r) = Jet::constant(1.0, order, base);
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(work.at(r, col).value()) > std::abs(work.at(piv, col).value())) piv = r;
    if (std::abs(work.at(piv, col).value()) < 1e-13)
      throw std::invalid_argument("JetMatrix: singular at base point");
    if (piv != col)
      for (int c = 0; c < 2 * n; ++c) std::swap(work.at(piv, c), work.at(col, c));
    const Jet inv_piv = work.at(col, col).reciprocal();
    for (int c = 0; c < 2 * n; ++c) work.at(col, c) = work.at(col, c) * inv_piv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet f = work.at(r, col);
      if (f.sup_norm() == 0.0) continue;
      for (int c = 0; c < 2 * n; ++c) work.at(r, c) -= f * work.at(col, c);
    }
  }
  JetMatrix out(n, n, order, base);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out.at(r, c) = work.at(r, n + c);
  return out;
}

}  // namespace plane6

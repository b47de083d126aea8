#pragma once

// Small dense matrices with Jet entries, enough for the 3x3 and 6x6 solves
// the coframe constructions need (inverse by Gauss-Jordan, pivoting on the
// base-point magnitude; a matrix is invertible here iff it is invertible at
// the base point).

#include <vector>

#include "plane6/jet.hpp"

namespace plane6 {

class JetMatrix {
 public:
  JetMatrix(int rows, int cols, int order, const Point& base);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Jet& at(int r, int c) { return m_[static_cast<size_t>(r) * cols_ + c]; }
  const Jet& at(int r, int c) const { return m_[static_cast<size_t>(r) * cols_ + c]; }

  JetMatrix operator*(const JetMatrix& rhs) const;
  JetMatrix transpose() const;
  JetMatrix inverse() const;

 private:
  int rows_, cols_;
  std::vector<Jet> m_;
};

}  // namespace plane6

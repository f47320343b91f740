#include "cbflearn/linalg.hpp"

#include <cmath>
#include <utility>

namespace cbflearn {

namespace {
constexpr double kPivotTol = 1e-12;
}

Matrix solve_linear(const Matrix& a, const Matrix& rhs) {
  if (a.rows() != a.cols()) throw std::invalid_argument("solve_linear: matrix not square");
  if (rhs.rows() != a.rows()) throw std::invalid_argument("solve_linear: rhs row mismatch");

  const std::size_t n = a.rows();
  Matrix lu = a;
  Matrix x = rhs;
  const std::size_t m = x.cols();

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot_row = col;
    double pivot_mag = std::abs(lu(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double mag = std::abs(lu(r, col));
      if (mag > pivot_mag) {
        pivot_mag = mag;
        pivot_row = r;
      }
    }
    if (pivot_mag < kPivotTol) throw SingularSystemError("solve_linear: pivot below 1e-12");
    if (pivot_row != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(col, j), lu(pivot_row, j));
      for (std::size_t j = 0; j < m; ++j) std::swap(x(col, j), x(pivot_row, j));
    }
    const double pivot = lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = lu(r, col) / pivot;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) lu(r, j) -= f * lu(col, j);
      for (std::size_t j = 0; j < m; ++j) x(r, j) -= f * x(col, j);
    }
  }

  for (std::size_t ri = n; ri-- > 0;) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = x(ri, j);
      for (std::size_t k = ri + 1; k < n; ++k) s -= lu(ri, k) * x(k, j);
      x(ri, j) = s / lu(ri, ri);
    }
  }
  return x;
}

}  // namespace cbflearn

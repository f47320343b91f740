#pragma once

#include <stdexcept>
#include <string>

#include "cbflearn/matrix.hpp"

namespace cbflearn {

struct SingularSystemError : std::runtime_error {
  explicit SingularSystemError(const std::string& what) : std::runtime_error(what) {}
};

// Solves a x = rhs by LU with partial pivoting. a must be square; rhs may
// carry multiple right-hand sides as columns. Throws SingularSystemError when
// the best available pivot falls below 1e-12 in magnitude.
Matrix solve_linear(const Matrix& a, const Matrix& rhs);

}  // namespace cbflearn

#pragma once

#include <vector>

#include "cbflearn/matrix.hpp"

namespace cbflearn {

// Reverse-mode gradient tape over Matrix values. Nodes are appended in
// evaluation order, so parents always precede children and a single reverse
// sweep visits each node exactly once.
//
// The absolute-value derivative at 0 is taken as 0.
class Tape {
 public:
  // Tracked input. Every leaf can receive an adjoint.
  int leaf(Matrix value);

  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);  // elementwise
  int matmul(int a, int b);
  int add_row(int a, int row);  // broadcast a 1xk row over the rows of a
  int mul_row(int a, int row);
  int abs(int a);
  int softplus(int a);
  int tanh(int a);
  int affine(int a, double scale, double shift);  // scale*a + shift, elementwise
  int sum(int a);                                 // 1x1
  int sum_squares(int a);                         // 1x1

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::size_t node_count() const { return nodes_.size(); }

  // Adjoints of every node with respect to a scalar root.
  // Throws std::invalid_argument if the root is not 1x1.
  std::vector<Matrix> backward(int root) const;

  // Vector-Jacobian product: adjoints given an upstream seed at root
  // (seed must match the root value's shape).
  std::vector<Matrix> vjp(int root, const Matrix& seed) const;

 private:
  enum class Op {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kMatMul,
    kAddRow,
    kMulRow,
    kAbs,
    kSoftplus,
    kTanh,
    kAffine,
    kSum,
    kSumSquares,
  };
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double s0 = 0.0;
    double s1 = 0.0;
    Matrix value;
  };

  int push(Op op, int a, int b, Matrix value, double s0 = 0.0, double s1 = 0.0);
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  std::vector<Node> nodes_;
};

double softplus(double x);
double sigmoid(double x);

}  // namespace cbflearn

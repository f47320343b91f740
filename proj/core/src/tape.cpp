#include "cbflearn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace cbflearn {

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int Tape::push(Op op, int a, int b, Matrix value, double s0, double s1) {
  nodes_.push_back(Node{op, a, b, s0, s1, std::move(value)});
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Matrix value) { return push(Op::kLeaf, -1, -1, std::move(value)); }

int Tape::add(int a, int b) {
  if (!value(a).same_shape(value(b))) throw std::invalid_argument("tape add: shape mismatch");
  return push(Op::kAdd, a, b, value(a) + value(b));
}

int Tape::sub(int a, int b) {
  if (!value(a).same_shape(value(b))) throw std::invalid_argument("tape sub: shape mismatch");
  return push(Op::kSub, a, b, value(a) - value(b));
}

int Tape::mul(int a, int b) {
  return push(Op::kMul, a, b, hadamard(value(a), value(b)));
}

int Tape::matmul(int a, int b) {
  return push(Op::kMatMul, a, b, cbflearn::matmul(value(a), value(b)));
}

int Tape::add_row(int a, int row) {
  const Matrix& m = value(a);
  const Matrix& r = value(row);
  if (r.rows() != 1 || r.cols() != m.cols())
    throw std::invalid_argument("tape add_row: row must be 1 x cols(a)");
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* oi = out.row_ptr(i);
    for (std::size_t j = 0; j < out.cols(); ++j) oi[j] += r[j];
  }
  return push(Op::kAddRow, a, row, std::move(out));
}

int Tape::mul_row(int a, int row) {
  const Matrix& m = value(a);
  const Matrix& r = value(row);
  if (r.rows() != 1 || r.cols() != m.cols())
    throw std::invalid_argument("tape mul_row: row must be 1 x cols(a)");
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* oi = out.row_ptr(i);
    for (std::size_t j = 0; j < out.cols(); ++j) oi[j] *= r[j];
  }
  return push(Op::kMulRow, a, row, std::move(out));
}

int Tape::abs(int a) {
  Matrix out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(out[i]);
  return push(Op::kAbs, a, -1, std::move(out));
}

int Tape::softplus(int a) {
  Matrix out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cbflearn::softplus(out[i]);
  return push(Op::kSoftplus, a, -1, std::move(out));
}

int Tape::tanh(int a) {
  Matrix out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return push(Op::kTanh, a, -1, std::move(out));
}

int Tape::affine(int a, double scale, double shift) {
  Matrix out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * out[i] + shift;
  return push(Op::kAffine, a, -1, std::move(out), scale, shift);
}

int Tape::sum(int a) {
  double s = 0.0;
  const Matrix& m = value(a);
  for (std::size_t i = 0; i < m.size(); ++i) s += m[i];
  Matrix out(1, 1);
  out[0] = s;
  return push(Op::kSum, a, -1, std::move(out));
}

int Tape::sum_squares(int a) {
  double s = 0.0;
  const Matrix& m = value(a);
  for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * m[i];
  Matrix out(1, 1);
  out[0] = s;
  return push(Op::kSumSquares, a, -1, std::move(out));
}

std::vector<Matrix> Tape::backward(int root) const {
  const Matrix& rv = value(root);
  if (rv.rows() != 1 || rv.cols() != 1)
    throw std::invalid_argument("tape backward: root must be scalar (1x1)");
  Matrix seed(1, 1);
  seed[0] = 1.0;
  return vjp(root, seed);
}

std::vector<Matrix> Tape::vjp(int root, const Matrix& seed) const {
  if (root < 0 || root >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape vjp: bad root id");
  if (!seed.same_shape(value(root))) throw std::invalid_argument("tape vjp: seed shape mismatch");

  std::vector<Matrix> adj(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    adj[i] = Matrix(nodes_[i].value.rows(), nodes_[i].value.cols());
  adj[static_cast<std::size_t>(root)] = seed;

  for (int id = root; id >= 0; --id) {
    const Node& n = node(id);
    const Matrix& d = adj[static_cast<std::size_t>(id)];
    if (d.inf_norm() == 0.0) continue;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        adj[n.a] += d;
        adj[n.b] += d;
        break;
      case Op::kSub:
        adj[n.a] += d;
        adj[n.b] -= d;
        break;
      case Op::kMul:
        adj[n.a] += hadamard(d, value(n.b));
        adj[n.b] += hadamard(d, value(n.a));
        break;
      case Op::kMatMul:
        adj[n.a] += cbflearn::matmul(d, value(n.b).transposed());
        adj[n.b] += cbflearn::matmul(value(n.a).transposed(), d);
        break;
      case Op::kAddRow: {
        adj[n.a] += d;
        Matrix& db = adj[n.b];
        for (std::size_t i = 0; i < d.rows(); ++i) {
          const double* di = d.row_ptr(i);
          for (std::size_t j = 0; j < d.cols(); ++j) db[j] += di[j];
        }
        break;
      }
      case Op::kMulRow: {
        const Matrix& r = value(n.b);
        const Matrix& a = value(n.a);
        Matrix& da = adj[n.a];
        Matrix& dr = adj[n.b];
        for (std::size_t i = 0; i < d.rows(); ++i) {
          const double* di = d.row_ptr(i);
          const double* ai = a.row_ptr(i);
          double* dai = da.row_ptr(i);
          for (std::size_t j = 0; j < d.cols(); ++j) {
            dai[j] += di[j] * r[j];
            dr[j] += di[j] * ai[j];
          }
        }
        break;
      }
      case Op::kAbs: {
        const Matrix& a = value(n.a);
        Matrix& da = adj[n.a];
        for (std::size_t i = 0; i < a.size(); ++i) {
          const double s = a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0);
          da[i] += d[i] * s;
        }
        break;
      }
      case Op::kSoftplus: {
        const Matrix& a = value(n.a);
        Matrix& da = adj[n.a];
        for (std::size_t i = 0; i < a.size(); ++i) da[i] += d[i] * sigmoid(a[i]);
        break;
      }
      case Op::kTanh: {
        const Matrix& t = n.value;
        Matrix& da = adj[n.a];
        for (std::size_t i = 0; i < t.size(); ++i) da[i] += d[i] * (1.0 - t[i] * t[i]);
        break;
      }
      case Op::kAffine: {
        Matrix& da = adj[n.a];
        for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * n.s0;
        break;
      }
      case Op::kSum: {
        Matrix& da = adj[n.a];
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += d[0];
        break;
      }
      case Op::kSumSquares: {
        const Matrix& a = value(n.a);
        Matrix& da = adj[n.a];
        for (std::size_t i = 0; i < a.size(); ++i) da[i] += d[0] * 2.0 * a[i];
        break;
      }
    }
  }
  return adj;
}

}  // namespace cbflearn

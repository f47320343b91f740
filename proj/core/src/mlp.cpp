#include "cbflearn/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace cbflearn {

Mlp Mlp::make(const std::vector<std::size_t>& layer_sizes, Rng& rng, Hidden hidden) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output");
  Mlp net;
  net.hidden = hidden;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    Matrix b(1, fan_out);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Matrix Mlp::forward(const Matrix& input) const {
  Matrix x = input;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Matrix y = matmul(x, weights[l]);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double* yi = y.row_ptr(i);
      const double* b = biases[l].data();
      for (std::size_t j = 0; j < y.cols(); ++j) yi[j] += b[j];
    }
    if (l + 1 < weights.size()) {
      if (hidden == Hidden::kTanh) {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
      } else {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = softplus(y[i]);
      }
    }
    x = std::move(y);
  }
  return x;
}

int Mlp::forward_traced(Tape& tape, int input_node, std::vector<int>* param_nodes) const {
  int x = input_node;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const int w = tape.leaf(weights[l]);
    const int b = tape.leaf(biases[l]);
    if (param_nodes) {
      param_nodes->push_back(w);
      param_nodes->push_back(b);
    }
    int y = tape.add_row(tape.matmul(x, w), b);
    if (l + 1 < weights.size())
      y = hidden == Hidden::kTanh ? tape.tanh(y) : tape.softplus(y);
    x = y;
  }
  return x;
}

std::vector<Matrix*> Mlp::params() {
  std::vector<Matrix*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const Matrix*> Mlp::params() const {
  std::vector<const Matrix*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

void Adam::init_like(const std::vector<Matrix*>& params) {
  m.clear();
  v.clear();
  for (const Matrix* p : params) {
    m.emplace_back(p->rows(), p->cols());
    v.emplace_back(p->rows(), p->cols());
  }
  step_count = 0;
}

void Adam::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr) {
  if (!initialized()) init_like(params);
  if (params.size() != grads.size() || params.size() != m.size())
    throw std::invalid_argument("Adam: parameter/gradient count mismatch");
  if (lr == 0.0) return;
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = grads[i];
    if (!p.same_shape(g)) throw std::invalid_argument("Adam: gradient shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g[j];
      v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g[j] * g[j];
      const double mhat = m[i][j] / bc1;
      const double vhat = v[i][j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + epsilon);
    }
  }
}

void soft_update(std::vector<Matrix*> target, const std::vector<const Matrix*>& online,
                 double tau) {
  if (target.size() != online.size())
    throw std::invalid_argument("soft_update: parameter count mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    Matrix& t = *target[i];
    const Matrix& o = *online[i];
    if (!t.same_shape(o)) throw std::invalid_argument("soft_update: shape mismatch");
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = tau * o[j] + (1.0 - tau) * t[j];
  }
}

}  // namespace cbflearn

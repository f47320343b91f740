#pragma once

#include <cstddef>
#include <vector>

#include "cbflearn/matrix.hpp"
#include "cbflearn/rng.hpp"
#include "cbflearn/tape.hpp"

namespace cbflearn {

// Fully connected network, linear output layer. Batch convention: inputs are
// B x in rows, outputs B x out.
struct Mlp {
  std::vector<Matrix> weights;  // layer l: in_l x out_l
  std::vector<Matrix> biases;   // layer l: 1 x out_l

  enum class Hidden { kTanh, kSoftplus };
  Hidden hidden = Hidden::kTanh;

  // Fan-in scaled uniform init, as is conventional for DDPG-style nets.
  static Mlp make(const std::vector<std::size_t>& layer_sizes, Rng& rng,
                  Hidden hidden = Hidden::kTanh);

  Matrix forward(const Matrix& input) const;
  // Records the forward pass; if param_nodes is non-null it receives leaf ids
  // aligned with params().
  int forward_traced(Tape& tape, int input_node, std::vector<int>* param_nodes) const;

  std::vector<Matrix*> params();
  std::vector<const Matrix*> params() const;
};

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  void init_like(const std::vector<Matrix*>& params);
  bool initialized() const { return !m.empty(); }
  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr);
};

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(std::vector<Matrix*> target, const std::vector<const Matrix*>& online,
                 double tau);

}  // namespace cbflearn

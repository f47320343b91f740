#pragma once

#include <cstddef>
#include <vector>

#include "cbflearn/matrix.hpp"
#include "cbflearn/rng.hpp"
#include "cbflearn/tape.hpp"

namespace cbflearn {

// A kappa evaluation recorded on its own tape, so the barrier-constraint
// right-hand side can later be differentiated with respect to the free
// network parameters.
struct KappaTrace {
  Tape tape;
  int out = -1;
  std::vector<int> param_nodes;  // aligned with KappaNet::params()
  double value = 0.0;
};

// Extended class-K function: strictly increasing with kappa(0) = 0.
class KappaFn {
 public:
  virtual ~KappaFn() = default;
  virtual double eval(double z) const = 0;
  virtual bool trainable() const { return false; }
  virtual KappaTrace eval_traced(double z) const;
};

class LinearKappa final : public KappaFn {
 public:
  explicit LinearKappa(double alpha) : alpha_(alpha) {}
  double eval(double z) const override { return alpha_ * z; }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

// Monotone scalar network with two softplus hidden layers. Effective weights
// are the absolute values of the free parameters (biases unconstrained), so
// the raw network is non-decreasing; a fixed bypass lambda0 * z makes the
// result strictly increasing, and subtracting the z = 0 output pins
// kappa(0) = 0 exactly.
class KappaNet final : public KappaFn {
 public:
  KappaNet() = default;
  static KappaNet make(std::size_t hidden, double lambda0, Rng& rng);

  double eval(double z) const override;
  bool trainable() const override { return true; }
  KappaTrace eval_traced(double z) const override;

  std::vector<Matrix*> params();
  std::vector<const Matrix*> params() const;
  double lambda0() const { return lambda0_; }
  std::size_t hidden() const { return b1_.cols(); }

 private:
  Matrix w1_, b1_;  // 1xH, 1xH
  Matrix w2_, b2_;  // HxH, 1xH
  Matrix w3_, b3_;  // Hx1, 1x1
  double lambda0_ = 0.01;
};

}  // namespace cbflearn

#include "cbflearn/kappa.hpp"

#include <cmath>
#include <stdexcept>

namespace cbflearn {

KappaTrace KappaFn::eval_traced(double) const {
  throw std::logic_error("eval_traced: kappa function has no trainable parameters");
}

KappaNet KappaNet::make(std::size_t hidden, double lambda0, Rng& rng) {
  if (hidden == 0) throw std::invalid_argument("KappaNet: hidden width must be positive");
  if (!(lambda0 > 0.0)) throw std::invalid_argument("KappaNet: lambda0 must be positive");
  KappaNet net;
  net.lambda0_ = lambda0;
  auto init = [&rng](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-0.5, 0.5);
    return m;
  };
  net.w1_ = init(1, hidden);
  net.b1_ = init(1, hidden);
  net.w2_ = init(hidden, hidden);
  net.b2_ = init(1, hidden);
  net.w3_ = init(hidden, 1);
  net.b3_ = init(1, 1);
  return net;
}

double KappaNet::eval(double z) const {
  const std::size_t h = hidden();
  auto raw = [&](double zin) {
    std::vector<double> h1(h), h2(h);
    for (std::size_t j = 0; j < h; ++j) h1[j] = softplus(std::abs(w1_[j]) * zin + b1_[j]);
    for (std::size_t k = 0; k < h; ++k) {
      double s = b2_[k];
      for (std::size_t j = 0; j < h; ++j) s += std::abs(w2_(j, k)) * h1[j];
      h2[k] = softplus(s);
    }
    double y = b3_[0];
    for (std::size_t k = 0; k < h; ++k) y += std::abs(w3_(k, 0)) * h2[k];
    return y;
  };
  return raw(z) - raw(0.0) + lambda0_ * z;
}

KappaTrace KappaNet::eval_traced(double z) const {
  KappaTrace trace;
  Tape& t = trace.tape;

  const int w1 = t.leaf(w1_);
  const int b1 = t.leaf(b1_);
  const int w2 = t.leaf(w2_);
  const int b2 = t.leaf(b2_);
  const int w3 = t.leaf(w3_);
  const int b3 = t.leaf(b3_);
  trace.param_nodes = {w1, b1, w2, b2, w3, b3};

  const int aw1 = t.abs(w1);
  const int aw2 = t.abs(w2);
  const int aw3 = t.abs(w3);

  auto raw = [&](double zin) {
    Matrix zm(1, 1);
    zm[0] = zin;
    const int zn = t.leaf(zm);
    const int h1 = t.softplus(t.add(t.matmul(zn, aw1), b1));
    const int h2 = t.softplus(t.add(t.matmul(h1, aw2), b2));
    return t.add(t.matmul(h2, aw3), b3);
  };

  const int yz = raw(z);
  const int y0 = raw(0.0);
  trace.out = t.affine(t.sub(yz, y0), 1.0, lambda0_ * z);
  trace.value = t.value(trace.out)(0, 0);
  return trace;
}

std::vector<Matrix*> KappaNet::params() { return {&w1_, &b1_, &w2_, &b2_, &w3_, &b3_}; }

std::vector<const Matrix*> KappaNet::params() const {
  return {&w1_, &b1_, &w2_, &b2_, &w3_, &b3_};
}

}  // namespace cbflearn

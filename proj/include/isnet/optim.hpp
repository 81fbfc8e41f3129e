// Adam with bias correction, acting on a ParamStore.
#pragma once

#include <cmath>
#include <stdexcept>

#include "isnet/nn.hpp"

namespace isnet {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One synchronized step over every parameter in the store. Gradients must
// have been produced by a backward pass (or zero_grads) beforehand.
template <class Real>
inline void adam_step(ParamStore<Real>& ps, const AdamConfig& cfg = {}) {
  const std::uint64_t t = ps.adam_step + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < ps.count(); ++i) {
    Param<Real>& p = ps.at(i);
    if (p.grad.size() != p.value.size())
      throw std::runtime_error("adam: missing gradient for parameter " + p.name);
    if (p.m.size() != p.value.size()) {
      p.m = Tensor<Real>::zeros(p.value.shape);
      p.v = Tensor<Real>::zeros(p.value.shape);
    }
    const Real b1 = static_cast<Real>(cfg.beta1), b2 = static_cast<Real>(cfg.beta2);
    const Real lr = static_cast<Real>(cfg.lr), eps = static_cast<Real>(cfg.eps);
    const Real ibc1 = static_cast<Real>(1.0 / bc1), ibc2 = static_cast<Real>(1.0 / bc2);
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const Real g = p.grad.v[j];
      p.m.v[j] = b1 * p.m.v[j] + (Real(1) - b1) * g;
      p.v.v[j] = b2 * p.v.v[j] + (Real(1) - b2) * g * g;
      const Real mhat = p.m.v[j] * ibc1;
      const Real vhat = p.v.v[j] * ibc2;
      p.value.v[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  ps.adam_step = t;
}

}  // namespace isnet

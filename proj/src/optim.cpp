#include "mfgnet/optim.hpp"

#include <cmath>

namespace mfg {

void Sgd::AddGroup(const ParamList& params, double lr_mult) {
  for (const NamedParam& p : params) {
    slots_.push_back({p.var, Tensor::Zeros(p.var.shape()), lr_mult});
  }
}

void Sgd::Step() {
  for (Slot& s : slots_) {
    if (!s.var.has_grad()) continue;
    Tensor& w = s.var.mutable_value();
    const Tensor& g = s.var.grad();
    double lr = lr_ * s.lr_mult;
    for (std::size_t i = 0; i < w.size(); ++i) {
      double d = g[i] + weight_decay_ * w[i];
      s.velocity[i] = momentum_ * s.velocity[i] + d;
      w[i] -= lr * s.velocity[i];
    }
  }
}

void Sgd::ZeroGrad() {
  for (Slot& s : slots_) s.var.ZeroGrad();
}

void Adagrad::AddGroup(const ParamList& params) {
  for (const NamedParam& p : params) slots_.push_back({p.var, Tensor::Zeros(p.var.shape())});
}

void Adagrad::Step() {
  for (Slot& s : slots_) {
    if (!s.var.has_grad()) continue;
    Tensor& w = s.var.mutable_value();
    const Tensor& g = s.var.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      s.accum[i] += g[i] * g[i];
      w[i] -= lr_ * g[i] / (std::sqrt(s.accum[i]) + eps_);
    }
  }
}

void Adagrad::ZeroGrad() {
  for (Slot& s : slots_) s.var.ZeroGrad();
}

}  // namespace mfg

#ifndef MFGNET_OPTIM_HPP_
#define MFGNET_OPTIM_HPP_

#include <vector>

#include "mfgnet/nn.hpp"

namespace mfg {

// SGD with momentum and L2 weight decay. Parameter groups carry a learning
// rate multiplier.
class Sgd {
 public:
  Sgd(double lr, double momentum, double weight_decay)
      : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}

  void AddGroup(const ParamList& params, double lr_mult = 1.0);
  void Step();
  void ZeroGrad();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  struct Slot {
    Var var;
    Tensor velocity;
    double lr_mult;
  };
  double lr_, momentum_, weight_decay_;
  std::vector<Slot> slots_;
};

class Adagrad {
 public:
  explicit Adagrad(double lr, double eps = 1e-10) : lr_(lr), eps_(eps) {}

  void AddGroup(const ParamList& params);
  void Step();
  void ZeroGrad();

 private:
  struct Slot {
    Var var;
    Tensor accum;
  };
  double lr_, eps_;
  std::vector<Slot> slots_;
};

}  // namespace mfg

#endif  // MFGNET_OPTIM_HPP_

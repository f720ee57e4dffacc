#ifndef MFGNET_AUTOGRAD_HPP_
#define MFGNET_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "mfgnet/tensor.hpp"

namespace mfg {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Propagates node.grad into the grads of node.parents.
using BackwardFn = std::function<void(Node&)>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  BackwardFn backward;

  // Allocates a zero gradient on first use.
  Tensor& GradBuffer();
};

// Handle to a node in the dynamic computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  int dim(int i) const { return node_->value.dim(i); }
  const NodePtr& node() const { return node_; }

  // Reverse-mode sweep from this (scalar) var, seeding d(this)=1.
  void Backward() const;
  // Reverse-mode sweep with an explicit upstream gradient.
  void Backward(const Tensor& seed) const;
  void ZeroGrad();

 private:
  NodePtr node_;
};

// True unless a NoGradGuard is alive on this thread.
bool GradEnabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op result. The backward closure is recorded only when grad mode
// is on and at least one parent requires grad; otherwise a constant is returned.
Var MakeResult(Tensor value, const std::vector<Var>& parents, BackwardFn backward);

}  // namespace mfg

#endif  // MFGNET_AUTOGRAD_HPP_

#include "mfgnet/autograd.hpp"

#include <unordered_set>

namespace mfg {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

Tensor& Node::GradBuffer() {
  if (grad.empty() && !value.empty()) grad = Tensor::Zeros(value.shape());
  if (grad.shape() != value.shape()) grad = Tensor::Zeros(value.shape());
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::Backward() const {
  if (node_->value.size() != 1) {
    throw ShapeError("Backward() without seed needs a scalar, got " +
                     ShapeString(node_->value.shape()));
  }
  Backward(Tensor::Full(node_->value.shape(), 1.0));
}

void Var::Backward(const Tensor& seed) const {
  CheckSameShape(node_->value, seed, "Backward seed");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->GradBuffer() += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

void Var::ZeroGrad() {
  if (node_) node_->grad = Tensor();
}

bool GradEnabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var MakeResult(Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const Var& p : parents) needs = needs || p.requires_grad();
  }
  if (!needs) return Var(std::move(value));
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->parents.reserve(parents.size());
  for (const Var& p : parents) node->parents.push_back(p.node());
  node->backward = std::move(backward);
  return Var(std::move(node));
}

}  // namespace mfg

#ifndef MFGNET_TESTS_TEST_UTIL_HPP_
#define MFGNET_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mfgnet/autograd.hpp"
#include "mfgnet/image.hpp"
#include "mfgnet/nn.hpp"
#include "mfgnet/ops.hpp"
#include "mfgnet/tensor.hpp"

namespace mfg::testing {

inline Tensor RandomTensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double& v : t.storage()) v = u(rng);
  return t;
}

inline Var RandomVar(const Shape& shape, Rng& rng, bool requires_grad = true) {
  return Var(RandomTensor(shape, rng), requires_grad);
}

inline FramePair RandomFrame(int h, int w, Rng& rng) {
  Tensor v = RandomTensor({3, h, w}, rng, 0.0, 1.0);
  Tensor g = RandomTensor({1, h, w}, rng, 0.0, 1.0);
  return {{v, Modality::kVisible}, ThermalFromGray(g)};
}

// Scalar probe sum(out * weights) with fixed random weights, so every output
// entry contributes to the checked gradient.
class Probe {
 public:
  Probe(const Shape& shape, Rng& rng) : weights_(RandomTensor(shape, rng)) {}
  Var operator()(const Var& out) const {
    return ops::Sum(ops::Mul(out, Var(weights_)));
  }

 private:
  Tensor weights_;
};

struct GradCheckResult {
  double max_rel = 0.0;
  int checked = 0;
};

// Compares reverse-mode gradients of `loss` with fourth-order central
// differences on up to `per_tensor` randomly chosen entries of each input.
// The five-point stencil keeps both truncation (O(eps^4)) and roundoff
// (~1e-16 / eps) far below the checked tolerance, so small gradients are not
// swamped by finite-difference noise. The relative error is
// |a - n| / max(|a|, |n|, floor).
inline GradCheckResult GradCheck(const std::function<Var()>& loss, std::vector<Var> inputs,
                                 Rng& rng, int per_tensor = 40, double eps = 1e-4,
                                 double floor = 1e-6) {
  for (Var& v : inputs) v.ZeroGrad();
  Var l = loss();
  l.Backward();
  std::vector<Tensor> analytic;
  for (Var& v : inputs) analytic.push_back(v.has_grad() ? v.grad() : Tensor(v.shape()));
  GradCheckResult res;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& x = inputs[k].mutable_value();
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), per_tensor));
    for (std::size_t i : idx) {
      double keep = x[i];
      auto at = [&](double offset) {
        x[i] = keep + offset;
        return loss().value()[0];
      };
      double d1 = at(eps) - at(-eps), d2 = at(2 * eps) - at(-2 * eps);
      x[i] = keep;
      double numeric = (8 * d1 - d2) / (12 * eps);
      double a = analytic[k][i];
      double denom = std::max({std::abs(a), std::abs(numeric), floor});
      res.max_rel = std::max(res.max_rel, std::abs(a - numeric) / denom);
      ++res.checked;
    }
  }
  return res;
}

}  // namespace mfg::testing

#endif  // MFGNET_TESTS_TEST_UTIL_HPP_

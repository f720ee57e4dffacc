#include "mfgnet/nn.hpp"

#include <cmath>

#include "mfgnet/ops.hpp"

namespace mfg {

Var NormalParam(const Shape& shape, double stddev, Rng& rng) {
  Tensor t(shape);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return Var(std::move(t), true);
}

Var ZeroParam(const Shape& shape) { return Var(Tensor::Zeros(shape), true); }

std::map<std::string, Tensor> SnapshotParams(const ParamList& params) {
  std::map<std::string, Tensor> out;
  for (const NamedParam& p : params) out[p.name] = p.var.value();
  return out;
}

void RestoreParams(const ParamList& params, const std::map<std::string, Tensor>& values,
                   bool strict) {
  for (const NamedParam& p : params) {
    auto it = values.find(p.name);
    if (it == values.end()) {
      if (strict) throw ShapeError("missing parameter '" + p.name + "'");
      continue;
    }
    if (it->second.shape() != p.var.shape()) {
      throw ShapeError("parameter '" + p.name + "' has shape " + ShapeString(p.var.shape()) +
                       " but archive holds " + ShapeString(it->second.shape()));
    }
    Var v = p.var;
    v.mutable_value() = it->second;
  }
}

void ZeroGrads(const ParamList& params) {
  for (const NamedParam& p : params) {
    Var v = p.var;
    v.ZeroGrad();
  }
}

std::size_t CountParams(const ParamList& params) {
  std::size_t n = 0;
  for (const NamedParam& p : params) n += p.var.value().size();
  return n;
}

Conv2dLayer::Conv2dLayer(int in_channels, int out_channels, int kernel, int stride_, int pad_,
                         bool with_bias, Rng& rng)
    : stride(stride_), pad(pad_) {
  double fan_in = static_cast<double>(in_channels) * kernel * kernel;
  weight = NormalParam({out_channels, in_channels, kernel, kernel}, std::sqrt(2.0 / fan_in), rng);
  if (with_bias) bias = ZeroParam({out_channels});
}

Var Conv2dLayer::Forward(const Var& x) const { return ops::Conv2d(x, weight, bias, stride, pad); }

void Conv2dLayer::CollectParams(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

ConvTranspose2dLayer::ConvTranspose2dLayer(int in_channels, int out_channels, int kernel,
                                           int stride_, int pad_, bool with_bias, Rng& rng)
    : stride(stride_), pad(pad_) {
  double fan_in = static_cast<double>(in_channels) * kernel * kernel;
  weight = NormalParam({in_channels, out_channels, kernel, kernel}, std::sqrt(2.0 / fan_in), rng);
  if (with_bias) bias = ZeroParam({out_channels});
}

Var ConvTranspose2dLayer::Forward(const Var& x) const {
  return ops::ConvTranspose2d(x, weight, bias, stride, pad);
}

void ConvTranspose2dLayer::CollectParams(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

LinearLayer::LinearLayer(int in_features, int out_features, bool with_bias, Rng& rng,
                         double stddev) {
  if (stddev < 0) stddev = std::sqrt(2.0 / in_features);
  weight = NormalParam({out_features, in_features}, stddev, rng);
  if (with_bias) bias = ZeroParam({out_features});
}

Var LinearLayer::Forward(const Var& x) const { return ops::Linear(x, weight, bias); }

void LinearLayer::CollectParams(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

}  // namespace mfg

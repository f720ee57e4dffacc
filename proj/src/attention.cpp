#include "mfgnet/attention.hpp"

#include <algorithm>
#include <cmath>

#include "mfgnet/ops.hpp"

namespace mfg {

CbamOptions CbamOptions::FromConfig(const Config& cfg) {
  CbamOptions o;
  o.enabled = cfg.GetBool("cbam.enabled");
  o.reduction = cfg.GetInt("cbam.reduction");
  o.spatial_kernel = cfg.GetInt("cbam.spatial_kernel");
  if (o.reduction < 1) throw ConfigError("cbam.reduction must be >= 1");
  if (o.spatial_kernel < 1 || o.spatial_kernel % 2 == 0) {
    throw ConfigError("cbam.spatial_kernel must be odd and positive");
  }
  return o;
}

Cbam::Cbam(int channels, const CbamOptions& opts, Rng& rng)
    : channels_(channels), hidden_(std::max(channels / opts.reduction, 4)) {
  fc1_ = LinearLayer(channels, hidden_, true, rng);
  fc2_ = LinearLayer(hidden_, channels, true, rng, std::sqrt(1.0 / hidden_));
  int k = opts.spatial_kernel;
  spatial_ = Conv2dLayer(2, 1, k, 1, k / 2, false, rng);
}

Var Cbam::Mlp(const Var& v) const {
  Var row = ops::Reshape(v, {1, channels_});
  return ops::Reshape(fc2_.Forward(ops::Relu(fc1_.Forward(row))), {channels_});
}

Var Cbam::ChannelAttention(const Var& f) const {
  if (f.shape().size() != 3 || f.dim(0) != channels_) {
    throw ShapeError("channel attention expects " + std::to_string(channels_) +
                     " channels, got " + ShapeString(f.shape()));
  }
  return ops::Sigmoid(ops::Add(Mlp(ops::GlobalMaxPool(f)), Mlp(ops::GlobalAvgPool(f))));
}

Var Cbam::SpatialAttention(const Var& f) const {
  Var pooled = ops::Concat({ops::ChannelMax(f), ops::ChannelMean(f)});
  return ops::Sigmoid(spatial_.Forward(pooled));
}

Var Cbam::Apply(const Var& f) const {
  Var f1 = ops::ChannelGate(f, ChannelAttention(f));
  return ops::SpatialGate(f1, SpatialAttention(f1));
}

void Cbam::CollectParams(ParamList& out, const std::string& prefix) const {
  fc1_.CollectParams(out, prefix + ".fc1");
  fc2_.CollectParams(out, prefix + ".fc2");
  spatial_.CollectParams(out, prefix + ".spatial");
}

}  // namespace mfg

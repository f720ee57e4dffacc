#include "mfgnet/backbone.hpp"

#include <algorithm>

#include "mfgnet/ops.hpp"

namespace mfg {

BackboneOptions BackboneOptions::FromConfig(const Config& cfg) {
  BackboneOptions o;
  o.channels = cfg.GetInt("backbone.channels");
  if (o.channels < 4) throw ConfigError("backbone.channels must be >= 4");
  return o;
}

Backbone::Backbone(const BackboneOptions& opts, Rng& rng) : opts_(opts) {
  int c1 = std::max(opts.channels / 4, 1);
  int c2 = std::max(opts.channels / 2, 1);
  conv1_ = Conv2dLayer(3, c1, 7, 2, 3, true, rng);
  conv2_ = Conv2dLayer(c1, c2, 5, 2, 2, true, rng);
  conv3_ = Conv2dLayer(c2, opts.channels, 3, 2, 1, true, rng);
}

Var Backbone::Encode(const Var& image) const {
  const Shape& s = image.shape();
  if (s.size() != 3 || s[0] != 3) {
    throw ShapeError("backbone expects a 3xHxW image, got " + ShapeString(s));
  }
  if (s[1] % 8 != 0 || s[2] % 8 != 0 || s[1] == 0 || s[2] == 0) {
    throw ShapeError("backbone input " + ShapeString(s) + ": H and W must be divisible by 8");
  }
  Var x = ops::Relu(conv1_.Forward(image));
  x = ops::Relu(conv2_.Forward(x));
  return ops::Relu(conv3_.Forward(x));
}

std::pair<Var, Var> Backbone::EncodePair(const FramePair& pair) const {
  CheckFramePair(pair);
  return {Encode(pair.visible), Encode(pair.thermal)};
}

void Backbone::CollectParams(ParamList& out, const std::string& prefix) const {
  conv1_.CollectParams(out, prefix + ".conv1");
  conv2_.CollectParams(out, prefix + ".conv2");
  conv3_.CollectParams(out, prefix + ".conv3");
}

}  // namespace mfg

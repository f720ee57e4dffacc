#ifndef MFGNET_BACKBONE_HPP_
#define MFGNET_BACKBONE_HPP_

#include <utility>

#include "mfgnet/config.hpp"
#include "mfgnet/image.hpp"
#include "mfgnet/nn.hpp"

namespace mfg {

struct BackboneOptions {
  int channels = 32;  // 512 in the full profile
  static BackboneOptions FromConfig(const Config& cfg);
};

// Three stride-2 convolutions with ReLU, 3xHxW -> channels x H/8 x W/8:
//   conv1 7x7/2 pad 3 -> channels/4
//   conv2 5x5/2 pad 2 -> channels/2
//   conv3 3x3/2 pad 1 -> channels
// One parameter set serves both modalities.
class Backbone {
 public:
  Backbone(const BackboneOptions& opts, Rng& rng);

  // Throws ShapeError unless H and W are multiples of 8.
  Var Encode(const Var& image) const;
  Var Encode(const ImageTensor& image) const { return Encode(Var(image.data)); }
  std::pair<Var, Var> EncodePair(const FramePair& pair) const;

  int channels() const { return opts_.channels; }
  void CollectParams(ParamList& out, const std::string& prefix) const;

  const Conv2dLayer& conv1() const { return conv1_; }

 private:
  BackboneOptions opts_;
  Conv2dLayer conv1_, conv2_, conv3_;
};

}  // namespace mfg

#endif  // MFGNET_BACKBONE_HPP_

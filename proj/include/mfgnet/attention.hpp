#ifndef MFGNET_ATTENTION_HPP_
#define MFGNET_ATTENTION_HPP_

#include "mfgnet/config.hpp"
#include "mfgnet/nn.hpp"

namespace mfg {

struct CbamOptions {
  bool enabled = true;
  int reduction = 16;
  int spatial_kernel = 7;
  static CbamOptions FromConfig(const Config& cfg);
};

// Channel-then-spatial attention gating (CBAM).
class Cbam {
 public:
  Cbam(int channels, const CbamOptions& opts, Rng& rng);

  // sigmoid(mlp(maxpool(f)) + mlp(avgpool(f))), shape [C].
  Var ChannelAttention(const Var& f) const;
  // sigmoid(conv_kxk([max_c f; mean_c f])), shape [1, H, W].
  Var SpatialAttention(const Var& f) const;
  // f1 = f * channel(f); out = f1 * spatial(f1).
  Var Apply(const Var& f) const;

  int channels() const { return channels_; }
  int hidden() const { return hidden_; }
  void CollectParams(ParamList& out, const std::string& prefix) const;

  LinearLayer& fc1() { return fc1_; }
  LinearLayer& fc2() { return fc2_; }
  Conv2dLayer& spatial_conv() { return spatial_; }

 private:
  Var Mlp(const Var& v) const;

  int channels_;
  int hidden_;
  LinearLayer fc1_, fc2_;
  Conv2dLayer spatial_;
};

}  // namespace mfg

#endif  // MFGNET_ATTENTION_HPP_

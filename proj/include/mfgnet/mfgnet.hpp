#ifndef MFGNET_MFGNET_HPP_
#define MFGNET_MFGNET_HPP_

#include <string>
#include <utility>

#include "mfgnet/config.hpp"
#include "mfgnet/image.hpp"
#include "mfgnet/nn.hpp"

namespace mfg {

enum class FilterMode { kOff, kNaive, kMfg };

FilterMode ParseFilterMode(const std::string& s);
std::string FilterModeName(FilterMode m);

struct MfgOptions {
  int kernel_size = 3;
  FilterMode mode = FilterMode::kMfg;
  bool squash = false;  // tanh on predicted kernels
  static MfgOptions FromConfig(const Config& cfg);
};

// One predicted s x s kernel per feature channel.
struct DynamicFilterSet {
  Var kernels;  // [C, s, s]
  Modality modality = Modality::kVisible;

  int channels() const { return kernels.dim(0); }
  int size() const { return kernels.dim(1); }
};

struct KeyQueryFeatures {
  Var key;    // [C, h, w]
  Var query;  // [s*s, h, w]
};

// Key/query filter generator for one modality. Both transforms are 1x1
// convolutions without bias over the concatenated 2C-channel input; the
// filter bank is key[C, hw] * query[hw, s*s] reshaped to [C, s, s].
class FilterGenerator {
 public:
  FilterGenerator() = default;
  FilterGenerator(int channels, int kernel_size, bool squash, Rng& rng);

  KeyQueryFeatures Transform(const Var& concat) const;
  Var Generate(const Var& concat) const;
  void CollectParams(ParamList& out, const std::string& prefix) const;

  Var key_weight;    // [C, 2C, 1, 1]
  Var query_weight;  // [s*s, 2C, 1, 1]

 private:
  int channels_ = 0;
  int kernel_size_ = 0;
  bool squash_ = false;
};

// Channel c of the output is channel c of f convolved with kernel c of z
// (zero padded, same size).
Var DynamicConvolve(const Var& f, const DynamicFilterSet& z);
// [dyn(f_v, z_v) + f_v ; dyn(f_t, z_t) + f_t].
Var Fuse(const Var& f_v, const Var& f_t, const DynamicFilterSet& z_v, const DynamicFilterSet& z_t);

// Modality-aware filter generation network with two symmetric branches.
class Mfgnet {
 public:
  Mfgnet(int channels, const MfgOptions& opts, Rng& rng);

  // concat: [2C, h, w]. Returns (z_v, z_t). In naive mode both sets share one
  // generator.
  std::pair<DynamicFilterSet, DynamicFilterSet> GenerateFilters(const Var& concat) const;
  // Full fusion of two C-channel maps into a 2C-channel map according to mode.
  Var Forward(const Var& f_v, const Var& f_t) const;

  const MfgOptions& options() const { return opts_; }
  int channels() const { return channels_; }
  FilterGenerator& visible_branch() { return visible_; }
  FilterGenerator& thermal_branch() { return thermal_; }
  void CollectParams(ParamList& out, const std::string& prefix) const;

 private:
  int channels_;
  MfgOptions opts_;
  FilterGenerator visible_, thermal_;
};

}  // namespace mfg

#endif  // MFGNET_MFGNET_HPP_

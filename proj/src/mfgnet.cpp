#include "mfgnet/mfgnet.hpp"

#include <cmath>

#include "mfgnet/ops.hpp"

namespace mfg {

FilterMode ParseFilterMode(const std::string& s) {
  if (s == "off") return FilterMode::kOff;
  if (s == "naive") return FilterMode::kNaive;
  if (s == "mfg") return FilterMode::kMfg;
  throw ConfigError("mfgnet.mode: expected off, naive or mfg, got '" + s + "'");
}

std::string FilterModeName(FilterMode m) {
  switch (m) {
    case FilterMode::kOff:
      return "off";
    case FilterMode::kNaive:
      return "naive";
    case FilterMode::kMfg:
      return "mfg";
  }
  return "?";
}

MfgOptions MfgOptions::FromConfig(const Config& cfg) {
  MfgOptions o;
  o.kernel_size = cfg.GetInt("mfgnet.kernel_size");
  o.mode = ParseFilterMode(cfg.GetString("mfgnet.mode"));
  o.squash = cfg.GetBool("mfgnet.squash");
  return o;
}

FilterGenerator::FilterGenerator(int channels, int kernel_size, bool squash, Rng& rng)
    : channels_(channels), kernel_size_(kernel_size), squash_(squash) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ShapeError("dynamic kernel size must be odd and >= 1, got " +
                     std::to_string(kernel_size));
  }
  int in = 2 * channels;
  // Query starts small so the residual path dominates before training.
  key_weight = NormalParam({channels, in, 1, 1}, std::sqrt(1.0 / in), rng);
  query_weight =
      NormalParam({kernel_size * kernel_size, in, 1, 1}, 0.1 * std::sqrt(1.0 / in), rng);
}

KeyQueryFeatures FilterGenerator::Transform(const Var& concat) const {
  if (concat.shape().size() != 3 || concat.dim(0) != 2 * channels_) {
    throw ShapeError("filter generation expects " + std::to_string(2 * channels_) +
                     " input channels, got " + ShapeString(concat.shape()));
  }
  return {ops::Conv2d(concat, key_weight, Var(), 1, 0),
          ops::Conv2d(concat, query_weight, Var(), 1, 0)};
}

Var FilterGenerator::Generate(const Var& concat) const {
  KeyQueryFeatures kq = Transform(concat);
  int hw = concat.dim(1) * concat.dim(2);
  int ss = kernel_size_ * kernel_size_;
  Var key = ops::Reshape(kq.key, {channels_, hw});
  Var query = ops::Transpose(ops::Reshape(kq.query, {ss, hw}));
  Var bank = ops::MatMul(key, query);
  if (squash_) bank = ops::Tanh(bank);
  return ops::Reshape(bank, {channels_, kernel_size_, kernel_size_});
}

void FilterGenerator::CollectParams(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".key.weight", key_weight});
  out.push_back({prefix + ".query.weight", query_weight});
}

Var DynamicConvolve(const Var& f, const DynamicFilterSet& z) {
  if (f.shape().size() != 3 || f.dim(0) != z.channels()) {
    throw ShapeError("dynamic convolution: feature " + ShapeString(f.shape()) +
                     " vs filter bank " + ShapeString(z.kernels.shape()));
  }
  return ops::DepthwiseConv(f, z.kernels);
}

Var Fuse(const Var& f_v, const Var& f_t, const DynamicFilterSet& z_v,
         const DynamicFilterSet& z_t) {
  if (f_v.shape() != f_t.shape()) {
    throw ShapeError("fuse: visible " + ShapeString(f_v.shape()) + " vs thermal " +
                     ShapeString(f_t.shape()));
  }
  Var v = ops::Add(DynamicConvolve(f_v, z_v), f_v);
  Var t = ops::Add(DynamicConvolve(f_t, z_t), f_t);
  return ops::Concat({v, t});
}

Mfgnet::Mfgnet(int channels, const MfgOptions& opts, Rng& rng)
    : channels_(channels), opts_(opts) {
  if (opts.kernel_size < 1 || opts.kernel_size % 2 == 0) {
    throw ShapeError("mfgnet.kernel_size must be odd, got " + std::to_string(opts.kernel_size));
  }
  visible_ = FilterGenerator(channels, opts.kernel_size, opts.squash, rng);
  thermal_ = FilterGenerator(channels, opts.kernel_size, opts.squash, rng);
}

std::pair<DynamicFilterSet, DynamicFilterSet> Mfgnet::GenerateFilters(const Var& concat) const {
  Var zv = visible_.Generate(concat);
  Var zt = opts_.mode == FilterMode::kNaive ? zv : thermal_.Generate(concat);
  return {DynamicFilterSet{zv, Modality::kVisible}, DynamicFilterSet{zt, Modality::kThermal}};
}

Var Mfgnet::Forward(const Var& f_v, const Var& f_t) const {
  if (f_v.shape() != f_t.shape()) {
    throw ShapeError("mfgnet: visible " + ShapeString(f_v.shape()) + " vs thermal " +
                     ShapeString(f_t.shape()));
  }
  if (opts_.mode == FilterMode::kOff) return ops::Concat({f_v, f_t});
  auto [zv, zt] = GenerateFilters(ops::Concat({f_v, f_t}));
  return Fuse(f_v, f_t, zv, zt);
}

void Mfgnet::CollectParams(ParamList& out, const std::string& prefix) const {
  if (opts_.mode == FilterMode::kOff) return;
  visible_.CollectParams(out, prefix + ".visible");
  if (opts_.mode == FilterMode::kMfg) thermal_.CollectParams(out, prefix + ".thermal");
}

}  // namespace mfg

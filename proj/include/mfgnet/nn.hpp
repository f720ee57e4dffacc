#ifndef MFGNET_NN_HPP_
#define MFGNET_NN_HPP_

#include <map>
#include <random>
#include <string>
#include <vector>

#include "mfgnet/autograd.hpp"

namespace mfg {

using Rng = std::mt19937_64;

struct NamedParam {
  std::string name;
  Var var;
};
using ParamList = std::vector<NamedParam>;

// Trainable leaf initialised from N(0, stddev^2).
Var NormalParam(const Shape& shape, double stddev, Rng& rng);
Var ZeroParam(const Shape& shape);

// Deep copies of parameter values keyed by name, and the reverse.
std::map<std::string, Tensor> SnapshotParams(const ParamList& params);
// Copies matching values into params. Missing keys throw when strict.
void RestoreParams(const ParamList& params, const std::map<std::string, Tensor>& values,
                   bool strict = true);
void ZeroGrads(const ParamList& params);
std::size_t CountParams(const ParamList& params);

class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(int in_channels, int out_channels, int kernel, int stride, int pad, bool bias,
              Rng& rng);

  Var Forward(const Var& x) const;
  void CollectParams(ParamList& out, const std::string& prefix) const;

  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;
};

class ConvTranspose2dLayer {
 public:
  ConvTranspose2dLayer() = default;
  ConvTranspose2dLayer(int in_channels, int out_channels, int kernel, int stride, int pad,
                       bool bias, Rng& rng);

  Var Forward(const Var& x) const;
  void CollectParams(ParamList& out, const std::string& prefix) const;

  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;
};

class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(int in_features, int out_features, bool bias, Rng& rng, double stddev = -1.0);

  Var Forward(const Var& x) const;
  void CollectParams(ParamList& out, const std::string& prefix) const;

  Var weight;
  Var bias;
};

}  // namespace mfg

#endif  // MFGNET_NN_HPP_

#ifndef MFGNET_OPS_HPP_
#define MFGNET_OPS_HPP_

#include <vector>

#include "mfgnet/autograd.hpp"

// Differentiable tensor operations. Feature maps are laid out C x H x W,
// matrices N x D. Every op checks its shape contract and throws ShapeError.
namespace mfg::ops {

// Elementwise.
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
Var OneMinus(const Var& a);
Var Relu(const Var& a);
Var Sigmoid(const Var& a);
Var Tanh(const Var& a);

// Reductions to a scalar of shape [1].
Var Sum(const Var& a);
Var Mean(const Var& a);

Var Reshape(const Var& a, Shape shape);
// [M, N] -> [N, M].
Var Transpose(const Var& a);
// a [M, K] * b [K, N] -> [M, N].
Var MatMul(const Var& a, const Var& b);
// x [N, D], w [O, D], optional b [O] -> [N, O].
Var Linear(const Var& x, const Var& w, const Var& b);
// Picks columns of x [N, D] -> [N, cols.size()].
Var SelectColumns(const Var& x, const std::vector<int>& cols);

// Concatenation / slicing along axis 0.
Var Concat(const std::vector<Var>& parts);
Var SliceRows(const Var& a, int begin, int end);

// x [C, H, W], w [O, C, k, k], optional b [O].
Var Conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x [C, H, W], w [C, O, k, k], optional b [O]; output (H-1)*stride - 2*pad + k.
Var ConvTranspose2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// Per-channel 2-D convolution of f [C, H, W] with kernels [C, s, s], s odd,
// zero padding s/2 (output keeps H x W). Both inputs are differentiable.
Var DepthwiseConv(const Var& f, const Var& kernels);

// Broadcast gating: f [C, H, W] times g [C] (per channel) or s [1, H, W].
Var ChannelGate(const Var& f, const Var& g);
Var SpatialGate(const Var& f, const Var& s);

// [C, H, W] -> [C] and [C, H, W] -> [1, H, W] poolings.
Var GlobalMaxPool(const Var& f);
Var GlobalAvgPool(const Var& f);
Var ChannelMax(const Var& f);
Var ChannelMean(const Var& f);

// Bilinear resize (half-pixel centres) of [C, H, W] to [C, out_h, out_w].
Var UpsampleBilinear(const Var& x, int out_h, int out_w);

// First-order gated scan along axis 1 (rows, top->bottom) or 2 (cols,
// left->right) of [C, H, W] maps: c_t = f_t * c_{t-1} + (1 - f_t) * x_t,
// c_{-1} = 0. `reverse` runs the scan in the opposite direction.
Var GatedScan(const Var& forget, const Var& input, int axis, bool reverse);

// Region of interest in feature-map coordinates (continuous, pixel centres
// at integers).
struct FeatureRoi {
  double x0, y0, x1, y1;
};

// Bilinear RoI alignment of f [C, H, W] onto a grid x grid bin lattice with
// samples x samples points per bin. Returns [N, C * grid * grid], laid out
// channel-major (c, bin_y, bin_x).
Var RoiAlign(const Var& f, const std::vector<FeatureRoi>& rois, int grid, int samples);

// Mean softmax cross entropy of logits [N, K] against class labels.
Var SoftmaxCrossEntropy(const Var& logits, const std::vector<int>& labels);
// Mean binary cross entropy of sigmoid(logits) against targets in [0, 1].
Var BceWithLogits(const Var& logits, const Tensor& targets, double pos_weight = 1.0);

}  // namespace mfg::ops

#endif  // MFGNET_OPS_HPP_

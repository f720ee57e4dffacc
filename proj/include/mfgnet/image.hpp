#ifndef MFGNET_IMAGE_HPP_
#define MFGNET_IMAGE_HPP_

#include "mfgnet/box.hpp"
#include "mfgnet/tensor.hpp"

namespace mfg {

enum class Modality { kVisible, kThermal };

// 3 x H x W image with values in [0, 1]. Thermal frames are stored with the
// gray channel replicated three times.
struct ImageTensor {
  Tensor data;
  Modality modality = Modality::kVisible;

  int height() const { return data.dim(1); }
  int width() const { return data.dim(2); }
};

// Aligned visible + thermal frame for one timestamp.
struct FramePair {
  ImageTensor visible;
  ImageTensor thermal;

  int height() const { return visible.height(); }
  int width() const { return visible.width(); }
};

// Replicates a 1 x H x W (or H x W) gray map into a thermal ImageTensor.
ImageTensor ThermalFromGray(const Tensor& gray);
// Throws ShapeError unless the pair is 3 x H x W with matching sizes.
void CheckFramePair(const FramePair& pair);

// Bilinear (half-pixel) resize of a C x H x W tensor.
Tensor ResizeTensor(const Tensor& src, int out_h, int out_w);
ImageTensor ResizeImage(const ImageTensor& img, int out_h, int out_w);
FramePair ResizePair(const FramePair& pair, int out_h, int out_w);

// Integer translation by (dx, dy) pixels with border replication.
Tensor ShiftTensor(const Tensor& src, int dx, int dy);
FramePair ShiftPair(const FramePair& pair, int dx, int dy);

// Bilinear crop of `box` (image pixels) resampled to out_h x out_w; samples
// outside the image are clamped to the border.
Tensor CropAndResize(const Tensor& src, const BoundingBox& box, int out_h, int out_w);

}  // namespace mfg

#endif  // MFGNET_IMAGE_HPP_

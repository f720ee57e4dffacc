#include "mfgnet/image.hpp"

#include <algorithm>
#include <cmath>

#include "mfgnet/ops.hpp"

namespace mfg {

ImageTensor ThermalFromGray(const Tensor& gray) {
  int h, w;
  if (gray.ndim() == 2) {
    h = gray.dim(0);
    w = gray.dim(1);
  } else if (gray.ndim() == 3 && gray.dim(0) == 1) {
    h = gray.dim(1);
    w = gray.dim(2);
  } else {
    throw ShapeError("ThermalFromGray: expected HxW or 1xHxW, got " + ShapeString(gray.shape()));
  }
  Tensor out({3, h, w});
  std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < 3; ++c) std::copy(gray.data(), gray.data() + plane, out.data() + c * plane);
  return {std::move(out), Modality::kThermal};
}

void CheckFramePair(const FramePair& pair) {
  const Tensor& v = pair.visible.data;
  const Tensor& t = pair.thermal.data;
  if (v.ndim() != 3 || v.dim(0) != 3 || t.ndim() != 3 || t.dim(0) != 3) {
    throw ShapeError("frame pair images must be 3xHxW, got " + ShapeString(v.shape()) + " and " +
                     ShapeString(t.shape()));
  }
  if (v.shape() != t.shape()) {
    throw ShapeError("frame pair size mismatch: visible " + ShapeString(v.shape()) +
                     " vs thermal " + ShapeString(t.shape()));
  }
}

Tensor ResizeTensor(const Tensor& src, int out_h, int out_w) {
  if (src.dim(1) == out_h && src.dim(2) == out_w) return src;
  NoGradGuard guard;
  return ops::UpsampleBilinear(Var(src), out_h, out_w).value();
}

ImageTensor ResizeImage(const ImageTensor& img, int out_h, int out_w) {
  return {ResizeTensor(img.data, out_h, out_w), img.modality};
}

FramePair ResizePair(const FramePair& pair, int out_h, int out_w) {
  return {ResizeImage(pair.visible, out_h, out_w), ResizeImage(pair.thermal, out_h, out_w)};
}

Tensor ShiftTensor(const Tensor& src, int dx, int dy) {
  if (src.ndim() != 3) throw ShapeError("ShiftTensor: expected CxHxW");
  int c = src.dim(0), h = src.dim(1), w = src.dim(2);
  Tensor out(src.shape());
  for (int k = 0; k < c; ++k)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        out.at(k, i, j) = src.at(k, std::clamp(i - dy, 0, h - 1), std::clamp(j - dx, 0, w - 1));
  return out;
}

FramePair ShiftPair(const FramePair& pair, int dx, int dy) {
  return {{ShiftTensor(pair.visible.data, dx, dy), pair.visible.modality},
          {ShiftTensor(pair.thermal.data, dx, dy), pair.thermal.modality}};
}

Tensor CropAndResize(const Tensor& src, const BoundingBox& box, int out_h, int out_w) {
  if (src.ndim() != 3) throw ShapeError("CropAndResize: expected CxHxW");
  if (!box.valid()) throw ShapeError("CropAndResize: empty box");
  int c = src.dim(0), h = src.dim(1), w = src.dim(2);
  Tensor out({c, out_h, out_w});
  for (int oy = 0; oy < out_h; ++oy) {
    double y = box.y + (oy + 0.5) * box.h / out_h - 0.5;
    y = std::clamp(y, 0.0, h - 1.0);
    int y0 = static_cast<int>(y);
    int y1 = std::min(y0 + 1, h - 1);
    double fy = y - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      double x = box.x + (ox + 0.5) * box.w / out_w - 0.5;
      x = std::clamp(x, 0.0, w - 1.0);
      int x0 = static_cast<int>(x);
      int x1 = std::min(x0 + 1, w - 1);
      double fx = x - x0;
      for (int ch = 0; ch < c; ++ch) {
        out.at(ch, oy, ox) = (1 - fy) * ((1 - fx) * src.at(ch, y0, x0) + fx * src.at(ch, y0, x1)) +
                             fy * ((1 - fx) * src.at(ch, y1, x0) + fx * src.at(ch, y1, x1));
      }
    }
  }
  return out;
}

}  // namespace mfg

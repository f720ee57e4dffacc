#ifndef MFGNET_BOX_HPP_
#define MFGNET_BOX_HPP_

#include <vector>

namespace mfg {

// Axis-aligned box, top-left corner plus size, in image pixels.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  static BoundingBox FromCenter(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }
  bool operator==(const BoundingBox&) const = default;
};

double Iou(const BoundingBox& a, const BoundingBox& b);
double CenterDistance(const BoundingBox& a, const BoundingBox& b);

// Shrinks to at most the image size (and at least min_size), then shifts the
// box so it lies fully inside [0, width] x [0, height].
BoundingBox ClipToImage(const BoundingBox& b, double width, double height, double min_size = 4.0);
bool InsideImage(const BoundingBox& b, double width, double height, double tol = 1e-9);

}  // namespace mfg

#endif  // MFGNET_BOX_HPP_

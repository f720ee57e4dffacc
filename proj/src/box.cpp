#include "mfgnet/box.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

double Iou(const BoundingBox& a, const BoundingBox& b) {
  double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  double inter = ix * iy;
  double uni = a.area() + b.area() - inter;
  // (x + w) - x need not round back to w, so identical boxes can land a few
  // ulps above 1.
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

double CenterDistance(const BoundingBox& a, const BoundingBox& b) {
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

BoundingBox ClipToImage(const BoundingBox& b, double width, double height, double min_size) {
  BoundingBox r = b;
  r.w = std::clamp(r.w, std::min(min_size, width), width);
  r.h = std::clamp(r.h, std::min(min_size, height), height);
  double cx = b.cx(), cy = b.cy();
  r.x = std::clamp(cx - 0.5 * r.w, 0.0, width - r.w);
  r.y = std::clamp(cy - 0.5 * r.h, 0.0, height - r.h);
  return r;
}

bool InsideImage(const BoundingBox& b, double width, double height, double tol) {
  return b.valid() && b.x >= -tol && b.y >= -tol && b.x + b.w <= width + tol &&
         b.y + b.h <= height + tol;
}

}  // namespace mfg

#ifndef MFGNET_SEQUENCE_HPP_
#define MFGNET_SEQUENCE_HPP_

#include <string>
#include <vector>

#include "mfgnet/box.hpp"
#include "mfgnet/image.hpp"

namespace mfg {

// Aligned RGB-T video with one ground-truth box per frame.
struct SequenceRecord {
  std::string name;
  std::vector<FramePair> frames;
  std::vector<BoundingBox> boxes;
  std::vector<std::string> attributes;  // e.g. "occlusion", "fast_motion"

  int size() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames[0].width(); }
  int height() const { return frames.empty() ? 0 : frames[0].height(); }
  bool HasAttribute(const std::string& tag) const;
};

// Throws ShapeError when frame and box counts differ or frame sizes vary.
void CheckSequence(const SequenceRecord& seq);

}  // namespace mfg

#endif  // MFGNET_SEQUENCE_HPP_

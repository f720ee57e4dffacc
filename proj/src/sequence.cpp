#include "mfgnet/sequence.hpp"

#include <algorithm>

namespace mfg {

bool SequenceRecord::HasAttribute(const std::string& tag) const {
  return std::find(attributes.begin(), attributes.end(), tag) != attributes.end();
}

void CheckSequence(const SequenceRecord& seq) {
  if (seq.frames.size() != seq.boxes.size()) {
    throw ShapeError("sequence '" + seq.name + "': " + std::to_string(seq.frames.size()) +
                     " frames but " + std::to_string(seq.boxes.size()) + " boxes");
  }
  for (const FramePair& f : seq.frames) {
    CheckFramePair(f);
    if (f.width() != seq.width() || f.height() != seq.height()) {
      throw ShapeError("sequence '" + seq.name + "': frame sizes differ");
    }
  }
}

}  // namespace mfg

#ifndef MFGNET_SYNTH_HPP_
#define MFGNET_SYNTH_HPP_

#include <cstdint>

#include "mfgnet/config.hpp"
#include "mfgnet/nn.hpp"
#include "mfgnet/sequence.hpp"

namespace mfg {

// Scripted RGB-T scene: a target that is textured in the visible band and
// bright in the thermal band moves along random waypoints; distractors share
// the visible texture but are thermally cold.
struct SyntheticSpec {
  int width = 128;
  int height = 128;
  int frames = 100;
  double target_w = 28.0;
  double target_h = 24.0;
  double speed = 1.5;
  int waypoints = 4;
  int occlusion_start = -1;
  int occlusion_length = 0;
  int teleport_frame = -1;
  double teleport_min_dist = 50.0;
  int distractors = 1;
  double noise = 0.03;

  static SyntheticSpec FromConfig(const Config& cfg);
  // Throws ConfigError on an inconsistent spec (e.g. target larger than canvas).
  void Validate() const;
  bool Occluded(int frame) const {
    return occlusion_start >= 0 && frame >= occlusion_start &&
           frame < occlusion_start + occlusion_length;
  }
};

// Grey value of the occluder in the visible and thermal bands.
inline constexpr double kOccluderVisible = 0.5;
inline constexpr double kOccluderThermal = 0.3;
// Margin by which the occluder exceeds the target box on every side.
inline constexpr double kOccluderMargin = 3.0;

// Speeds at or above this (pixels/frame) tag a sequence as fast motion.
inline constexpr double kFastSpeed = 3.0;

// Deterministic for a fixed (spec, seed).
SequenceRecord GenerateSequence(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace mfg

#endif  // MFGNET_SYNTH_HPP_

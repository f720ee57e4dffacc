#ifndef MFGNET_SEQUENCE_IO_HPP_
#define MFGNET_SEQUENCE_IO_HPP_

#include <string>
#include <vector>

#include "mfgnet/archive.hpp"
#include "mfgnet/box.hpp"
#include "mfgnet/sequence.hpp"

namespace mfg {

enum class BoxFormat { kAuto, kXywh, kCorners };

// Shortest decimal text that parses back to exactly `v`.
std::string FormatDouble(double v);

// One "x,y,w,h" line per box.
void WriteBoxes(const std::string& path, const std::vector<BoundingBox>& boxes);

// Parses comma-, tab- or space-separated box lines. With kAuto, files named
// groundTruth_* (GTOT style) are read as corners; otherwise rows are read as
// x,y,w,h unless every row is a valid corner box inside the image while some
// row read as x,y,w,h would leave it (needs image_w/h > 0). Unparsable lines
// raise IoError naming the line number.
std::vector<BoundingBox> ReadBoxes(const std::string& path, BoxFormat format = BoxFormat::kAuto,
                                   int image_w = 0, int image_h = 0);
// The format kAuto resolves to for these rows.
BoxFormat DetectBoxFormat(const std::string& filename,
                          const std::vector<std::vector<double>>& rows, int image_w,
                          int image_h);

// Ground-truth file names searched by LoadSequence, in order.
const std::vector<std::string>& GroundTruthNames();

// Directory layout: visible/, infrared/ (frames paired by sorted file name),
// a ground-truth file and an optional attributes.txt.
SequenceRecord LoadSequence(const std::string& dir);
void SaveSequence(const SequenceRecord& seq, const std::string& dir);

// 8-bit grayscale export of an H x W (or 1 x H x W) map in [0, 1].
void SaveGray8(const Tensor& map, const std::string& path);
// Binary mask (white = target) resized to size x size with nearest sampling.
Tensor LoadMask(const std::string& path, int size);

}  // namespace mfg

#endif  // MFGNET_SEQUENCE_IO_HPP_

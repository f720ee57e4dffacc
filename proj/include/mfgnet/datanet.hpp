#ifndef MFGNET_DATANET_HPP_
#define MFGNET_DATANET_HPP_

#include <string>
#include <utility>
#include <vector>

#include "mfgnet/config.hpp"
#include "mfgnet/image.hpp"
#include "mfgnet/nn.hpp"
#include "mfgnet/sequence.hpp"

namespace mfg {

// Side length every clip image is resized to, and the sweep map size it
// encodes to.
inline constexpr int kClipImageSize = 300;
inline constexpr int kSweepMapSize = 19;
inline constexpr int kTemporalChannels = 19;

// Channel budget of the attention network.
struct DatanetProfile {
  std::string name;
  std::vector<int> encoder_widths;  // stem + four residual stages
  int spatial_channels = 0;         // 1x1 reduction ahead of the spatial sweep
  int sweep_hidden = 0;             // per direction
  std::vector<int> decoder_widths;  // five groups

  // Per-image feature width: stage-3 and stage-4 maps are concatenated.
  int image_channels() const { return encoder_widths[3] + encoder_widths[4]; }
  int clip_channels(int clip_len) const { return (clip_len + 1) * image_channels(); }
  int combined_channels() const { return 4 * sweep_hidden + kTemporalChannels; }

  static DatanetProfile Full();
  static DatanetProfile Desk();
  static DatanetProfile FromName(const std::string& name);
};

struct DatanetOptions {
  DatanetProfile profile = DatanetProfile::Desk();
  int clip_len = 2;
  static DatanetOptions FromConfig(const Config& cfg);
};

// T consecutive frame pairs plus the first-frame template crop, all 300x300.
struct ClipInput {
  std::vector<FramePair> frames;
  FramePair templ;
};

// Throws ShapeError unless the clip has `clip_len` frames and every image is
// 3 x 300 x 300.
void CheckClip(const ClipInput& clip, int clip_len);

// Recurrent cell with a highway skip:
//   x^ = W x, f = sigmoid(W_f x + b_f), r = sigmoid(W_r x + b_r)
//   c_t = f * c_{t-1} + (1 - f) * x^
//   h_t = r * tanh(c_t) + (1 - r) * skip,  skip = x if dims agree, else x^.
class RecurrentCell {
 public:
  RecurrentCell() = default;
  RecurrentCell(int input_size, int hidden_size, Rng& rng);

  // x [N, D], c_prev [N, H] -> (h_t, c_t), both [N, H].
  std::pair<Var, Var> Step(const Var& x, const Var& c_prev) const;
  // Runs the cell along rows (axis 1) or columns (axis 2) of a [D, h, w] map,
  // treating every other position as an independent sequence. Returns [H, h, w].
  Var Sweep(const Var& map, int axis, bool reverse) const;
  // Both directions of one axis sharing the input transforms.
  std::pair<Var, Var> SweepBoth(const Var& map, int axis) const;

  int input_size() const { return input_size_; }
  int hidden_size() const { return hidden_size_; }
  void CollectParams(ParamList& out, const std::string& prefix) const;

  Var w, w_f, b_f, w_r, b_r;  // [H, D], [H, D], [H], [H, D], [H]

 private:
  struct Gates {
    Var x_hat, forget, reset, skip;
  };
  Gates MapGates(const Var& map) const;
  Var Emit(const Gates& g, const Var& c) const;

  int input_size_ = 0;
  int hidden_size_ = 0;
};

// Stride-2 residual stage: relu(conv3x3/2 -> relu -> conv3x3 + proj1x1/2).
class ResidualStage {
 public:
  ResidualStage() = default;
  ResidualStage(int in, int out, Rng& rng);
  Var Forward(const Var& x) const;
  void CollectParams(ParamList& out, const std::string& prefix) const;

 private:
  Conv2dLayer conv_a_, conv_b_, proj_;
};

// Per-image encoder 3x300x300 -> image_channels x 19 x 19.
class ClipEncoder {
 public:
  ClipEncoder(const DatanetProfile& profile, Rng& rng);
  Var EncodeImage(const Var& image) const;
  void CollectParams(ParamList& out, const std::string& prefix) const;

 private:
  Conv2dLayer stem_;
  std::vector<ResidualStage> stages_;
};

// Direction-aware target-driven attention network.
class Datanet {
 public:
  Datanet(const DatanetOptions& opts, Rng& rng);

  // [frame_1 .. frame_T, template] features, visible + thermal summed per
  // pair: (T+1)*image_channels x 19 x 19.
  Var EncodeClip(const ClipInput& clip) const;
  // Square [spatial_channels, S, S] -> [4*hidden, S, S], blocks ordered
  // (left, right, down, up).
  Var SpatialSweep(const Var& f) const;
  // clip features -> [19, S, S] for the temporal path.
  Var TemporalEncode(const Var& clip_features) const;
  // [19, S, S] -> [19, S, S]: bidirectional recurrence across rows with the
  // 19 channels as the state, directions averaged.
  Var TemporalSweep(const Var& f) const;
  // clip features -> [4*hidden + 19, S, S].
  Var Combine(const Var& clip_features) const;
  // combined -> 1 x 300 x 300 logits; DecodeAttention squashes to [0, 1].
  Var DecodeLogits(const Var& combined) const;
  Var DecodeAttention(const Var& combined) const;
  Var ForwardLogits(const ClipInput& clip) const;
  // Inference without gradient tracking; returns a 300 x 300 map.
  Tensor Predict(const ClipInput& clip) const;

  const DatanetOptions& options() const { return opts_; }
  const DatanetProfile& profile() const { return opts_.profile; }
  RecurrentCell& horizontal_cell() { return horizontal_; }
  RecurrentCell& vertical_cell() { return vertical_; }
  RecurrentCell& temporal_cell() { return temporal_; }
  ParamList Params() const;

 private:
  DatanetOptions opts_;
  ClipEncoder encoder_;
  Conv2dLayer spatial_reduce_, temporal_reduce_;
  RecurrentCell horizontal_, vertical_, temporal_;
  std::vector<std::vector<ConvTranspose2dLayer>> decoder_;
};

// Decoder upsample targets of the five groups.
const std::vector<int>& DecoderSizes();

// Mean BCE between an attention map in [0, 1] and a binary mask, with
// probabilities clamped to [eps, 1 - eps].
double AttentionBce(const Tensor& attention, const Tensor& mask, double eps = 1e-12);

// One forward/backward pass on a clip and its 300x300 target mask. Returns
// the loss; parameter gradients are accumulated.
Var AttentionTrainingStep(const Datanet& net, const ClipInput& clip, const Tensor& mask,
                          double pos_weight = 1.0);

// 300 x 300 mask with ones inside `box` (given in a width x height frame).
Tensor BoxMask(const BoundingBox& box, int width, int height, int size = kClipImageSize);

// Clip ending at frame t of `seq` (earlier indices clamped to 0); the template
// is the first-frame target crop.
ClipInput MakeClip(const SequenceRecord& seq, int t, int clip_len);
FramePair MakeTemplate(const FramePair& first, const BoundingBox& box);
ClipInput MakeClip(const std::vector<const FramePair*>& frames, const FramePair& templ);

// Attention-mass centroid (x, y) of a map in its own pixel coordinates.
std::pair<double, double> AttentionCentroid(const Tensor& attention);

struct GlobalProposalOptions {
  int count = 64;
  int max_peaks = 5;
  double scale_jitter = 0.2;
  // Peaks weaker than this fraction of the strongest one are dropped.
  double min_relative_peak = 0.25;
  static GlobalProposalOptions FromConfig(const Config& cfg);
};

struct GlobalProposals {
  std::vector<BoundingBox> boxes;
  std::vector<std::pair<int, int>> peaks;  // (row, col) in map pixels
  bool fallback = false;                   // all-zero map: uniform grid used
};

// Peak-NMS proposals from an attention map covering a width x height frame.
// Boxes take the prior's size; the first box of every peak is unjittered, the
// rest get uniform +-scale_jitter relative size jitter. Peaks are cycled when
// there are fewer than `count`. Ties are broken by raster order.
GlobalProposals SampleGlobalProposals(const Tensor& attention, const BoundingBox& prior,
                                      int width, int height, const GlobalProposalOptions& opts,
                                      Rng& rng);

struct AttentionTrainOptions {
  int steps = 300;
  double lr = 0.01;
  double pos_weight = 3.0;
  static AttentionTrainOptions FromConfig(const Config& cfg);
};

// Adagrad training over random clips of the given sequences. Returns the
// per-step losses.
std::vector<double> TrainAttention(Datanet& net, const std::vector<SequenceRecord>& sequences,
                                   const AttentionTrainOptions& opts, Rng& rng);

}  // namespace mfg

#endif  // MFGNET_DATANET_HPP_

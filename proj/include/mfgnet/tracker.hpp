#ifndef MFGNET_TRACKER_HPP_
#define MFGNET_TRACKER_HPP_

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "mfgnet/archive.hpp"
#include "mfgnet/attention.hpp"
#include "mfgnet/backbone.hpp"
#include "mfgnet/box.hpp"
#include "mfgnet/config.hpp"
#include "mfgnet/datanet.hpp"
#include "mfgnet/mfgnet.hpp"
#include "mfgnet/ops.hpp"
#include "mfgnet/optim.hpp"
#include "mfgnet/sequence.hpp"

namespace mfg {

// Weight of the instance-embedding term in the multi-domain loss.
inline constexpr double kInstanceLossWeight = 0.1;

struct TrackerOptions {
  int failure_threshold = 8;
  int update_interval = 10;
  int local_proposals = 256;
  double sigma_xy = 0.3;
  double sigma_scale = 0.5;  // in units of log(1.05)
  int roi_grid = 3;
  int roi_samples = 2;
  int hidden = 128;
  double lr_init = 5e-4;
  double lr_update = 1e-4;
  double head_lr_mult = 10.0;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int init_iters = 50;
  int update_iters = 15;
  int batch_pos = 32;
  int batch_neg = 96;
  int hard_neg_pool = 1024;
  int long_term_frames = 100;
  int short_term_frames = 20;
  bool global_search = true;
  // Sample budgets (first frame / per tracked frame / regressor).
  int init_pos = 500;
  int init_neg = 2000;
  int update_pos = 50;
  int update_neg = 200;
  int bbreg_samples = 1000;
  // First-frame augmentation: extra copies translated by up to +-init_shift
  // pixels, so the classifier sees more than one feature-grid phase.
  int init_shifts = 4;
  int init_shift = 4;
  static TrackerOptions FromConfig(const Config& cfg);
};

// Backbone + per-modality CBAM + filter generation, producing the fused
// 2C-channel map the tracker classifies.
struct FeatureNetOptions {
  BackboneOptions backbone;
  CbamOptions cbam;
  MfgOptions mfg;
  int input_size = 0;  // square resize ahead of the backbone; 0 keeps frame size
  static FeatureNetOptions FromConfig(const Config& cfg);
};

// Fused features of one frame and the image->feature coordinate scales.
// Instance features are multiplied by `gain`.
struct FeatureFrame {
  Var map;
  double gain = 1.0;
  double scale_x = 0.125;
  double scale_y = 0.125;
  int image_width = 0;
  int image_height = 0;
};

class FeatureNet {
 public:
  FeatureNet(const FeatureNetOptions& opts, Rng& rng);

  FeatureFrame Forward(const FramePair& pair) const;
  // Per-modality features before fusion (after CBAM when enabled).
  std::pair<Var, Var> ModalityFeatures(const FramePair& pair) const;

  int out_channels() const { return 2 * backbone_.channels(); }
  const FeatureNetOptions& options() const { return opts_; }
  Mfgnet& mfgnet() { return mfgnet_; }
  const Mfgnet& mfgnet() const { return mfgnet_; }
  ParamList Params() const;

 private:
  FeatureNetOptions opts_;
  Backbone backbone_;
  Cbam cbam_v_, cbam_t_;
  Mfgnet mfgnet_;
};

// 1 / RMS of a feature map (1 for an all-zero map). The tracker fixes this on
// the first frame so instance features enter the classifier at unit scale.
double UnitRmsGain(const Tensor& map);

// Projects an image box onto a feature map (pixel centres at integer
// feature coordinates).
ops::FeatureRoi ToFeatureRoi(const BoundingBox& box, double scale_x, double scale_y);
// Bilinear RoI-aligned instance features [N, C * grid * grid].
Var RoiInstanceFeatures(const FeatureFrame& frame, const std::vector<BoundingBox>& boxes,
                        int grid, int samples = 2);

// ---------------------------------------------------------------------------
// Sampling

// Gaussian proposals around `center`: translation ~ N(0, sigma_xy * mean(w, h)),
// size multiplied by 1.05^(sigma_scale * N(0, 1)); clipped into the image.
std::vector<BoundingBox> SampleGaussian(const BoundingBox& center, int n, double sigma_xy,
                                        double sigma_scale, int width, int height, Rng& rng);
// Uniformly placed boxes of roughly the centre's size anywhere in the image.
std::vector<BoundingBox> SampleUniform(const BoundingBox& center, int n, int width, int height,
                                       Rng& rng);

struct LabeledSamples {
  std::vector<BoundingBox> positives;  // IoU >= 0.7
  std::vector<BoundingBox> negatives;  // IoU < 0.5
};
inline constexpr double kPositiveIou = 0.7;
inline constexpr double kNegativeIou = 0.5;
LabeledSamples LabelSamples(const std::vector<BoundingBox>& samples, const BoundingBox& gt);

// Up to n positives around gt, tightening the spread when too few land in the
// positive band.
std::vector<BoundingBox> DrawPositives(const BoundingBox& gt, int n, int width, int height,
                                       Rng& rng);
// n negatives: half from a wide Gaussian around gt, half uniform.
std::vector<BoundingBox> DrawNegatives(const BoundingBox& gt, int n, int width, int height,
                                       Rng& rng);

// ---------------------------------------------------------------------------
// Classifier and losses

// fc4 -> relu -> fc5 -> relu -> per-domain 2-way heads, logits [N, 2D] with
// columns (bg_d, fg_d).
class Classifier {
 public:
  Classifier(int in_features, int hidden, int domains, Rng& rng);

  Var Forward(const Var& x) const;
  // Logits [N, 2] of one domain head.
  Var DomainLogits(const Var& x, int domain) const;
  // Foreground logits of every domain, [N, D].
  Var ForegroundLogits(const Var& x) const;

  int domains() const { return domains_; }
  int in_features() const { return in_features_; }
  void ResetHead(int domains, Rng& rng);
  ParamList SharedParams() const;
  ParamList HeadParams() const;
  ParamList Params() const;

 private:
  int in_features_, hidden_, domains_;
  LinearLayer fc4_, fc5_, head_;
};

// fg - bg logit margin for each row of [N, 2] logits.
std::vector<double> ForegroundScores(const Tensor& logits);

// Mean softmax cross entropy over binary labels (1 = target).
Var LossCls(const Var& logits, const std::vector<int>& labels);
// Instance loss over positive-class scores [N, D] against the own domain.
Var LossInst(const Var& fg_scores, int domain);

struct LossBreakdown {
  double cls = 0.0;
  double inst = 0.0;
  double total = 0.0;
};
LossBreakdown LossTotal(double cls, double inst);

// ---------------------------------------------------------------------------
// Bounding-box regression

// Ridge regression from instance features to (dx, dy, dlog w, dlog h).
class BoxRegressor {
 public:
  BoxRegressor() = default;

  void Train(const Tensor& features, const std::vector<BoundingBox>& boxes,
             const BoundingBox& gt, double lambda = 1000.0);
  // Identity until trained.
  BoundingBox Apply(const double* feature, int dim, const BoundingBox& box) const;
  bool trained() const { return trained_; }
  const Tensor& weights() const { return weights_; }

  static constexpr double kMinIou = 0.6;

 private:
  bool trained_ = false;
  Tensor weights_;  // [dim + 1, 4], last row bias
};

// ---------------------------------------------------------------------------
// Sample stores and online updates

// Bounded per-frame feature buffer; the oldest frame is evicted first.
class SampleStore {
 public:
  explicit SampleStore(int capacity_frames) : capacity_(capacity_frames) {}

  void Push(int frame, Tensor features);
  // Newest-first concatenation [N, F]; empty tensor when nothing stored.
  Tensor Gather() const;
  std::vector<int> Frames() const;  // newest first
  int frames() const { return static_cast<int>(items_.size()); }
  int samples() const;
  int capacity() const { return capacity_; }

 private:
  int capacity_;
  std::deque<std::pair<int, Tensor>> items_;  // front = newest
};

// Indices of the k highest scores, highest first (ties by lower index).
std::vector<int> SelectHardNegatives(const std::vector<double>& scores, int k);

struct UpdateStats {
  std::vector<double> losses;
  double final_before = 0.0;  // loss of the last minibatch before its step
  double final_after = 0.0;   // and after it
};

// Minibatch SGD on LossCls with hard negative mining. `pos` and `neg` are
// feature rows [N, F].
UpdateStats OnlineUpdate(const Classifier& clf, Sgd& opt, const Tensor& pos, const Tensor& neg,
                         int iters, const TrackerOptions& opts, Rng& rng);

// ---------------------------------------------------------------------------
// Search switch and update schedule

enum class UpdateKind { kNone, kShortTerm, kLongTerm };

class TrackController {
 public:
  TrackController(int failure_threshold, int update_interval, bool global_enabled = true)
      : threshold_(failure_threshold), interval_(update_interval), global_(global_enabled) {}

  // Decision for the frame about to be tracked.
  bool UseGlobalSearch() const { return global_ && failure_streak_ >= threshold_; }

  struct Decision {
    bool success;
    UpdateKind update;
  };
  // Records the best score of the current frame and advances the frame
  // counter. The init frame has index 0; the first tracked frame is 1.
  Decision Observe(double max_score);

  int failure_streak() const { return failure_streak_; }
  int frame_index() const { return frame_index_; }

 private:
  int threshold_, interval_;
  bool global_;
  int failure_streak_ = 0;
  int frame_index_ = 0;
};

// ---------------------------------------------------------------------------
// Tracker

enum class ProposalSource { kLocal, kGlobal };

struct Proposal {
  BoundingBox box;
  double score = 0.0;
  ProposalSource source = ProposalSource::kLocal;
};

struct TrackResult {
  int frame_index = 0;
  BoundingBox box;
  double score = 0.0;
  bool success = false;
  bool used_global = false;
  bool fallback_grid = false;
  Proposal best_proposal;
  int failure_streak = 0;
  UpdateKind update = UpdateKind::kNone;
  Tensor attention;  // 300 x 300 map on global-search frames, else empty
};

class Tracker {
 public:
  // `datanet` may be null (local search only). `pretrained` optionally holds
  // offline-trained classifier weights (shared layers only are used).
  Tracker(const FeatureNet& net, const TrackerOptions& opts, const Datanet* datanet,
          const GlobalProposalOptions& global_opts, std::uint64_t seed,
          const TensorArchive* pretrained = nullptr);

  void Initialize(const FramePair& frame, const BoundingBox& box);
  TrackResult Track(const FramePair& frame);

  const TrackController& controller() const { return controller_; }
  const Classifier& classifier() const { return classifier_; }
  const BoxRegressor& regressor() const { return regressor_; }
  const SampleStore& long_term_positives() const { return long_pos_; }
  const SampleStore& long_term_negatives() const { return long_neg_; }
  const SampleStore& short_term_positives() const { return short_pos_; }
  const SampleStore& short_term_negatives() const { return short_neg_; }
  const BoundingBox& current_box() const { return box_; }
  // Scores proposals on a frame with the current classifier.
  std::vector<double> Score(const FeatureFrame& feat, const std::vector<BoundingBox>& boxes) const;

 private:
  void CollectSamples(const FeatureFrame& feat, const BoundingBox& box, int frame, int n_pos,
                      int n_neg);
  void Update(UpdateKind kind);
  Tensor GlobalAttention(const FramePair& frame);

  const FeatureNet& net_;
  TrackerOptions opts_;
  const Datanet* datanet_;
  GlobalProposalOptions global_opts_;
  Rng rng_;
  Classifier classifier_;
  Sgd update_opt_;
  BoxRegressor regressor_;
  SampleStore long_pos_, long_neg_, short_pos_, short_neg_;
  TrackController controller_;
  BoundingBox box_;
  double gain_ = 1.0;
  int width_ = 0, height_ = 0;
  FramePair template_;
  std::deque<FramePair> history_;  // resized previous frames for clips
};

// ---------------------------------------------------------------------------
// Offline multi-domain training

struct OfflineTrainOptions {
  int iterations = 300;
  double lr = 1e-3;
  int batch_pos = 32;
  int batch_neg = 96;
  static OfflineTrainOptions FromConfig(const Config& cfg);
};

struct OfflineTrainStats {
  std::vector<double> cls;
  std::vector<double> inst;
};

// Trains the feature network and a D-head classifier (one head per sequence)
// with LossCls + 0.1 * LossInst.
OfflineTrainStats TrainMultiDomain(FeatureNet& net, Classifier& clf,
                                   const std::vector<SequenceRecord>& sequences,
                                   const OfflineTrainOptions& opts, const TrackerOptions& topts,
                                   Rng& rng);

// Checkpoint of the feature network and the shared classifier layers.
void SaveTrackerCheckpoint(const std::string& path, const FeatureNet& net, const Classifier& clf);
// Loads feature-net weights into `net`; returns the full archive so the
// classifier layers can be handed to a Tracker.
TensorArchive LoadTrackerCheckpoint(const std::string& path, FeatureNet& net);

}  // namespace mfg

#endif  // MFGNET_TRACKER_HPP_

#include "mfgnet/tracker.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mfg {

TrackerOptions TrackerOptions::FromConfig(const Config& cfg) {
  TrackerOptions o;
  o.failure_threshold = cfg.GetInt("tracker.failure_threshold");
  o.update_interval = cfg.GetInt("tracker.update_interval");
  o.local_proposals = cfg.GetInt("tracker.local_proposals");
  o.sigma_xy = cfg.GetDouble("tracker.sigma_xy");
  o.sigma_scale = cfg.GetDouble("tracker.sigma_scale");
  o.roi_grid = cfg.GetInt("tracker.roi_grid");
  o.hidden = cfg.GetInt("tracker.hidden");
  o.lr_init = cfg.GetDouble("tracker.lr_init");
  o.lr_update = cfg.GetDouble("tracker.lr_update");
  o.head_lr_mult = cfg.GetDouble("tracker.head_lr_mult");
  o.momentum = cfg.GetDouble("tracker.momentum");
  o.weight_decay = cfg.GetDouble("tracker.weight_decay");
  o.init_iters = cfg.GetInt("tracker.init_iters");
  o.update_iters = cfg.GetInt("tracker.update_iters");
  o.batch_pos = cfg.GetInt("tracker.batch_pos");
  o.batch_neg = cfg.GetInt("tracker.batch_neg");
  o.hard_neg_pool = cfg.GetInt("tracker.hard_neg_pool");
  o.long_term_frames = cfg.GetInt("tracker.long_term_frames");
  o.short_term_frames = cfg.GetInt("tracker.short_term_frames");
  o.global_search = cfg.GetBool("tracker.global_search");
  if (o.failure_threshold < 1) throw ConfigError("tracker.failure_threshold must be >= 1");
  if (o.update_interval < 1) throw ConfigError("tracker.update_interval must be >= 1");
  if (o.local_proposals < 1) throw ConfigError("tracker.local_proposals must be >= 1");
  if (o.roi_grid < 1) throw ConfigError("tracker.roi_grid must be >= 1");
  if (o.batch_pos < 1 || o.batch_neg < 1) throw ConfigError("tracker batch sizes must be >= 1");
  if (o.long_term_frames < 1 || o.short_term_frames < 1) {
    throw ConfigError("tracker store capacities must be >= 1");
  }
  return o;
}

FeatureNetOptions FeatureNetOptions::FromConfig(const Config& cfg) {
  FeatureNetOptions o;
  o.backbone = BackboneOptions::FromConfig(cfg);
  o.cbam = CbamOptions::FromConfig(cfg);
  o.mfg = MfgOptions::FromConfig(cfg);
  o.input_size = cfg.GetInt("backbone.input_size");
  if (o.input_size < 0 || o.input_size % 8 != 0) {
    throw ConfigError("backbone.input_size must be 0 or a positive multiple of 8");
  }
  return o;
}

// ---------------------------------------------------------------------------
// FeatureNet

FeatureNet::FeatureNet(const FeatureNetOptions& opts, Rng& rng)
    : opts_(opts),
      backbone_(opts.backbone, rng),
      cbam_v_(opts.backbone.channels, opts.cbam, rng),
      cbam_t_(opts.backbone.channels, opts.cbam, rng),
      mfgnet_(opts.backbone.channels, opts.mfg, rng) {}

std::pair<Var, Var> FeatureNet::ModalityFeatures(const FramePair& pair) const {
  CheckFramePair(pair);
  auto [fv, ft] = opts_.input_size > 0
                      ? backbone_.EncodePair(ResizePair(pair, opts_.input_size, opts_.input_size))
                      : backbone_.EncodePair(pair);
  if (opts_.cbam.enabled) {
    fv = cbam_v_.Apply(fv);
    ft = cbam_t_.Apply(ft);
  }
  return {fv, ft};
}

FeatureFrame FeatureNet::Forward(const FramePair& pair) const {
  auto [fv, ft] = ModalityFeatures(pair);
  FeatureFrame out;
  out.map = mfgnet_.Forward(fv, ft);
  out.image_width = pair.width();
  out.image_height = pair.height();
  out.scale_x = static_cast<double>(out.map.dim(2)) / pair.width();
  out.scale_y = static_cast<double>(out.map.dim(1)) / pair.height();
  return out;
}

ParamList FeatureNet::Params() const {
  ParamList out;
  backbone_.CollectParams(out, "backbone");
  if (opts_.cbam.enabled) {
    cbam_v_.CollectParams(out, "cbam.visible");
    cbam_t_.CollectParams(out, "cbam.thermal");
  }
  mfgnet_.CollectParams(out, "mfgnet");
  return out;
}

double UnitRmsGain(const Tensor& map) {
  double ss = 0.0;
  for (double v : map.values()) ss += v * v;
  return ss > 0.0 ? 1.0 / std::sqrt(ss / map.size()) : 1.0;
}

ops::FeatureRoi ToFeatureRoi(const BoundingBox& box, double scale_x, double scale_y) {
  return {box.x * scale_x - 0.5, box.y * scale_y - 0.5, (box.x + box.w) * scale_x - 0.5,
          (box.y + box.h) * scale_y - 0.5};
}

Var RoiInstanceFeatures(const FeatureFrame& frame, const std::vector<BoundingBox>& boxes,
                        int grid, int samples) {
  std::vector<ops::FeatureRoi> rois;
  rois.reserve(boxes.size());
  for (const BoundingBox& b : boxes) rois.push_back(ToFeatureRoi(b, frame.scale_x, frame.scale_y));
  Var f = ops::RoiAlign(frame.map, rois, grid, samples);
  return frame.gain == 1.0 ? f : ops::Scale(f, frame.gain);
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<BoundingBox> SampleGaussian(const BoundingBox& center, int n, double sigma_xy,
                                        double sigma_scale, int width, int height, Rng& rng) {
  if (n < 1) throw std::invalid_argument("SampleGaussian: n must be >= 1");
  if (!center.valid()) throw std::invalid_argument("SampleGaussian: invalid centre box");
  if (center.cx() < 0 || center.cy() < 0 || center.cx() > width || center.cy() > height) {
    throw std::invalid_argument("SampleGaussian: centre lies outside the image");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  double spread = sigma_xy * 0.5 * (center.w + center.h);
  std::vector<BoundingBox> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double dx = normal(rng) * spread, dy = normal(rng) * spread;
    double s = std::pow(1.05, sigma_scale * normal(rng));
    out.push_back(ClipToImage(
        BoundingBox::FromCenter(center.cx() + dx, center.cy() + dy, center.w * s, center.h * s),
        width, height));
  }
  return out;
}

std::vector<BoundingBox> SampleUniform(const BoundingBox& center, int n, int width, int height,
                                       Rng& rng) {
  std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height), us(-3.0, 3.0);
  std::vector<BoundingBox> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double s = std::pow(1.05, us(rng));
    out.push_back(ClipToImage(
        BoundingBox::FromCenter(ux(rng), uy(rng), center.w * s, center.h * s), width, height));
  }
  return out;
}

LabeledSamples LabelSamples(const std::vector<BoundingBox>& samples, const BoundingBox& gt) {
  if (!gt.valid()) throw std::invalid_argument("LabelSamples: invalid ground-truth box");
  LabeledSamples out;
  for (const BoundingBox& b : samples) {
    double iou = Iou(b, gt);
    if (iou >= kPositiveIou) {
      out.positives.push_back(b);
    } else if (iou < kNegativeIou) {
      out.negatives.push_back(b);
    }
  }
  return out;
}

std::vector<BoundingBox> DrawPositives(const BoundingBox& gt, int n, int width, int height,
                                       Rng& rng) {
  std::vector<BoundingBox> out;
  double sigma = 0.1;
  for (int round = 0; round < 6 && static_cast<int>(out.size()) < n; ++round) {
    auto cand = SampleGaussian(gt, 2 * n, sigma, 1.0, width, height, rng);
    for (const BoundingBox& b : LabelSamples(cand, gt).positives) {
      if (static_cast<int>(out.size()) == n) break;
      out.push_back(b);
    }
    sigma *= 0.5;  // too few positives: tighten the spread
  }
  if (out.empty()) out.push_back(ClipToImage(gt, width, height));
  return out;
}

std::vector<BoundingBox> DrawNegatives(const BoundingBox& gt, int n, int width, int height,
                                       Rng& rng) {
  std::vector<BoundingBox> out;
  int n_near = n / 2;
  for (int round = 0; round < 20 && static_cast<int>(out.size()) < n_near; ++round) {
    auto cand = SampleGaussian(gt, n, 1.0, 2.0, width, height, rng);
    for (const BoundingBox& b : LabelSamples(cand, gt).negatives) {
      if (static_cast<int>(out.size()) == n_near) break;
      out.push_back(b);
    }
  }
  for (int round = 0; round < 20 && static_cast<int>(out.size()) < n; ++round) {
    auto cand = SampleUniform(gt, n, width, height, rng);
    for (const BoundingBox& b : LabelSamples(cand, gt).negatives) {
      if (static_cast<int>(out.size()) == n) break;
      out.push_back(b);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classifier and losses

Classifier::Classifier(int in_features, int hidden, int domains, Rng& rng)
    : in_features_(in_features), hidden_(hidden), domains_(domains) {
  if (domains < 1) throw std::invalid_argument("Classifier: need at least one domain");
  fc4_ = LinearLayer(in_features, hidden, true, rng);
  fc5_ = LinearLayer(hidden, hidden, true, rng);
  head_ = LinearLayer(hidden, 2 * domains, true, rng, 0.01);
}

Var Classifier::Forward(const Var& x) const {
  if (x.shape().size() != 2 || x.dim(1) != in_features_) {
    throw ShapeError("classifier expects [N, " + std::to_string(in_features_) + "], got " +
                     ShapeString(x.shape()));
  }
  Var h = ops::Relu(fc4_.Forward(x));
  h = ops::Relu(fc5_.Forward(h));
  return head_.Forward(h);
}

Var Classifier::DomainLogits(const Var& x, int domain) const {
  if (domain < 0 || domain >= domains_) throw std::out_of_range("classifier domain");
  return ops::SelectColumns(Forward(x), {2 * domain, 2 * domain + 1});
}

Var Classifier::ForegroundLogits(const Var& x) const {
  std::vector<int> cols(domains_);
  for (int d = 0; d < domains_; ++d) cols[d] = 2 * d + 1;
  return ops::SelectColumns(Forward(x), cols);
}

void Classifier::ResetHead(int domains, Rng& rng) {
  domains_ = domains;
  head_ = LinearLayer(hidden_, 2 * domains, true, rng, 0.01);
}

ParamList Classifier::SharedParams() const {
  ParamList out;
  fc4_.CollectParams(out, "classifier.fc4");
  fc5_.CollectParams(out, "classifier.fc5");
  return out;
}

ParamList Classifier::HeadParams() const {
  ParamList out;
  head_.CollectParams(out, "classifier.head");
  return out;
}

ParamList Classifier::Params() const {
  ParamList out = SharedParams();
  for (NamedParam& p : HeadParams()) out.push_back(p);
  return out;
}

std::vector<double> ForegroundScores(const Tensor& logits) {
  std::vector<double> s(logits.dim(0));
  for (int i = 0; i < logits.dim(0); ++i) s[i] = logits.at(i, 1) - logits.at(i, 0);
  return s;
}

Var LossCls(const Var& logits, const std::vector<int>& labels) {
  if (logits.shape().size() != 2 || logits.dim(1) != 2) {
    throw ShapeError("LossCls expects [N, 2] logits, got " + ShapeString(logits.shape()));
  }
  return ops::SoftmaxCrossEntropy(logits, labels);
}

Var LossInst(const Var& fg_scores, int domain) {
  if (fg_scores.shape().size() != 2) {
    throw ShapeError("LossInst expects [N, D] scores, got " + ShapeString(fg_scores.shape()));
  }
  return ops::SoftmaxCrossEntropy(fg_scores, std::vector<int>(fg_scores.dim(0), domain));
}

LossBreakdown LossTotal(double cls, double inst) {
  return {cls, inst, cls + kInstanceLossWeight * inst};
}

// ---------------------------------------------------------------------------
// BoxRegressor

namespace {

Eigen::Vector4d RegressionTarget(const BoundingBox& b, const BoundingBox& gt) {
  return {(gt.cx() - b.cx()) / b.w, (gt.cy() - b.cy()) / b.h, std::log(gt.w / b.w),
          std::log(gt.h / b.h)};
}

}  // namespace

void BoxRegressor::Train(const Tensor& features, const std::vector<BoundingBox>& boxes,
                         const BoundingBox& gt, double lambda) {
  if (features.ndim() != 2 || features.dim(0) != static_cast<int>(boxes.size())) {
    throw ShapeError("BoxRegressor: features " + ShapeString(features.shape()) + " for " +
                     std::to_string(boxes.size()) + " boxes");
  }
  int dim = features.dim(1);
  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
    if (Iou(boxes[i], gt) >= kMinIou) keep.push_back(i);
  }
  if (keep.empty()) return;
  Eigen::MatrixXd x(keep.size(), dim + 1);
  Eigen::MatrixXd y(keep.size(), 4);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    for (int c = 0; c < dim; ++c) x(r, c) = features.at(keep[r], c);
    x(r, dim) = 1.0;
    y.row(r) = RegressionTarget(boxes[keep[r]], gt).transpose();
  }
  Eigen::MatrixXd a = x.transpose() * x;
  a.diagonal().array() += lambda;
  Eigen::MatrixXd w = a.ldlt().solve(x.transpose() * y);
  weights_ = Tensor({dim + 1, 4});
  for (int r = 0; r <= dim; ++r)
    for (int c = 0; c < 4; ++c) weights_.at(r, c) = w(r, c);
  trained_ = true;
}

BoundingBox BoxRegressor::Apply(const double* feature, int dim, const BoundingBox& box) const {
  if (!trained_) return box;
  if (dim + 1 != weights_.dim(0)) throw ShapeError("BoxRegressor: feature length mismatch");
  double d[4];
  for (int c = 0; c < 4; ++c) {
    double acc = weights_.at(dim, c);
    for (int i = 0; i < dim; ++i) acc += feature[i] * weights_.at(i, c);
    d[c] = acc;
  }
  const double max_log = std::log(1.5);
  double w = box.w * std::exp(std::clamp(d[2], -max_log, max_log));
  double h = box.h * std::exp(std::clamp(d[3], -max_log, max_log));
  return BoundingBox::FromCenter(box.cx() + d[0] * box.w, box.cy() + d[1] * box.h, w, h);
}

// ---------------------------------------------------------------------------
// SampleStore

void SampleStore::Push(int frame, Tensor features) {
  if (features.empty()) return;
  items_.emplace_front(frame, std::move(features));
  while (static_cast<int>(items_.size()) > capacity_) items_.pop_back();
}

Tensor SampleStore::Gather() const {
  std::vector<Tensor> parts;
  for (const auto& item : items_) parts.push_back(item.second);
  return ConcatRows(parts);
}

std::vector<int> SampleStore::Frames() const {
  std::vector<int> out;
  for (const auto& item : items_) out.push_back(item.first);
  return out;
}

int SampleStore::samples() const {
  int n = 0;
  for (const auto& item : items_) n += item.second.dim(0);
  return n;
}

// ---------------------------------------------------------------------------
// Online update

std::vector<int> SelectHardNegatives(const std::vector<double>& scores, int k) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  idx.resize(std::min<std::size_t>(idx.size(), std::max(k, 0)));
  return idx;
}

namespace {

Tensor GatherRows(const Tensor& src, const std::vector<int>& rows) {
  int dim = src.dim(1);
  Tensor out({static_cast<int>(rows.size()), dim});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(src.data() + static_cast<std::size_t>(rows[r]) * dim, dim,
                out.data() + r * dim);
  }
  return out;
}

// Cycles through a shuffled index list, reshuffling at each wrap.
class IndexCycler {
 public:
  IndexCycler(int n, Rng& rng) : idx_(n), rng_(rng) {
    std::iota(idx_.begin(), idx_.end(), 0);
    std::shuffle(idx_.begin(), idx_.end(), rng_);
  }
  std::vector<int> Next(int k) {
    std::vector<int> out;
    for (int i = 0; i < k; ++i) {
      if (pos_ == idx_.size()) {
        std::shuffle(idx_.begin(), idx_.end(), rng_);
        pos_ = 0;
      }
      out.push_back(idx_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<int> idx_;
  std::size_t pos_ = 0;
  Rng& rng_;
};

}  // namespace

UpdateStats OnlineUpdate(const Classifier& clf, Sgd& opt, const Tensor& pos, const Tensor& neg,
                         int iters, const TrackerOptions& opts, Rng& rng) {
  UpdateStats stats;
  if (pos.empty() || neg.empty() || iters < 1) return stats;
  IndexCycler pos_cycle(pos.dim(0), rng), neg_cycle(neg.dim(0), rng);
  int pool = std::min(opts.hard_neg_pool, neg.dim(0));
  int n_neg = std::min(opts.batch_neg, pool);
  for (int it = 0; it < iters; ++it) {
    Tensor pos_batch = GatherRows(pos, pos_cycle.Next(opts.batch_pos));
    Tensor cand = GatherRows(neg, neg_cycle.Next(pool));
    std::vector<double> cand_scores;
    {
      NoGradGuard no_grad;
      cand_scores = ForegroundScores(clf.DomainLogits(Var(cand), 0).value());
    }
    Tensor neg_batch = GatherRows(cand, SelectHardNegatives(cand_scores, n_neg));

    Tensor batch({pos_batch.dim(0) + neg_batch.dim(0), pos.dim(1)});
    std::copy(pos_batch.storage().begin(), pos_batch.storage().end(), batch.storage().begin());
    std::copy(neg_batch.storage().begin(), neg_batch.storage().end(),
              batch.storage().begin() + pos_batch.size());
    std::vector<int> labels(batch.dim(0), 0);
    std::fill_n(labels.begin(), pos_batch.dim(0), 1);

    opt.ZeroGrad();
    Var loss = LossCls(clf.DomainLogits(Var(batch), 0), labels);
    loss.Backward();
    opt.Step();
    stats.losses.push_back(loss.value()[0]);
    if (it == iters - 1) {
      stats.final_before = loss.value()[0];
      NoGradGuard no_grad;
      stats.final_after = LossCls(clf.DomainLogits(Var(batch), 0), labels).value()[0];
    }
  }
  opt.ZeroGrad();
  return stats;
}

// ---------------------------------------------------------------------------
// TrackController

TrackController::Decision TrackController::Observe(double max_score) {
  ++frame_index_;
  Decision d{max_score > 0.0, UpdateKind::kNone};
  if (d.success) {
    failure_streak_ = 0;
    if (frame_index_ % interval_ == 0) d.update = UpdateKind::kLongTerm;
  } else {
    ++failure_streak_;
    d.update = UpdateKind::kShortTerm;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Tracker

Tracker::Tracker(const FeatureNet& net, const TrackerOptions& opts, const Datanet* datanet,
                 const GlobalProposalOptions& global_opts, std::uint64_t seed,
                 const TensorArchive* pretrained)
    : net_(net),
      opts_(opts),
      datanet_(datanet),
      global_opts_(global_opts),
      rng_(seed),
      classifier_(net.out_channels() * opts.roi_grid * opts.roi_grid, opts.hidden, 1, rng_),
      update_opt_(opts.lr_update, opts.momentum, opts.weight_decay),
      long_pos_(opts.long_term_frames),
      long_neg_(opts.short_term_frames),
      short_pos_(opts.short_term_frames),
      short_neg_(opts.short_term_frames),
      controller_(opts.failure_threshold, opts.update_interval,
                  opts.global_search && datanet != nullptr) {
  if (pretrained) RestoreParams(classifier_.SharedParams(), *pretrained, true);
  update_opt_.AddGroup(classifier_.SharedParams(), 1.0);
  update_opt_.AddGroup(classifier_.HeadParams(), opts.head_lr_mult);
}

std::vector<double> Tracker::Score(const FeatureFrame& feat,
                                   const std::vector<BoundingBox>& boxes) const {
  NoGradGuard no_grad;
  Var x = RoiInstanceFeatures(feat, boxes, opts_.roi_grid, opts_.roi_samples);
  return ForegroundScores(classifier_.DomainLogits(x, 0).value());
}

void Tracker::CollectSamples(const FeatureFrame& feat, const BoundingBox& box, int frame,
                             int n_pos, int n_neg) {
  NoGradGuard no_grad;
  auto pos = DrawPositives(box, n_pos, width_, height_, rng_);
  auto neg = DrawNegatives(box, n_neg, width_, height_, rng_);
  Tensor pf = RoiInstanceFeatures(feat, pos, opts_.roi_grid, opts_.roi_samples).value();
  Tensor nf = RoiInstanceFeatures(feat, neg, opts_.roi_grid, opts_.roi_samples).value();
  long_pos_.Push(frame, pf);
  short_pos_.Push(frame, std::move(pf));
  long_neg_.Push(frame, nf);
  short_neg_.Push(frame, std::move(nf));
}

void Tracker::Initialize(const FramePair& frame, const BoundingBox& box) {
  CheckFramePair(frame);
  width_ = frame.width();
  height_ = frame.height();
  if (!InsideImage(box, width_, height_, 0.5 * std::max(box.w, box.h))) {
    throw std::invalid_argument("Tracker::Initialize: box outside the image");
  }
  box_ = ClipToImage(box, width_, height_);
  FeatureFrame feat;
  Tensor pf, nf;
  {
    NoGradGuard no_grad;
    feat = net_.Forward(frame);
    gain_ = UnitRmsGain(feat.map.value());
    feat.gain = gain_;
    int copies = opts_.init_shifts + 1;
    std::vector<Tensor> pos_parts, neg_parts;
    std::uniform_int_distribution<int> offset(-opts_.init_shift, opts_.init_shift);
    for (int k = 0; k < copies; ++k) {
      FeatureFrame view = feat;
      BoundingBox target = box_;
      if (k > 0) {
        int dx = offset(rng_), dy = offset(rng_);
        view = net_.Forward(ShiftPair(frame, dx, dy));
        view.gain = gain_;
        target.x += dx;
        target.y += dy;
        target = ClipToImage(target, width_, height_);
      }
      int n_pos = opts_.init_pos / copies + (k == 0 ? opts_.init_pos % copies : 0);
      int n_neg = opts_.init_neg / copies + (k == 0 ? opts_.init_neg % copies : 0);
      auto pos = DrawPositives(target, n_pos, width_, height_, rng_);
      auto neg = DrawNegatives(target, n_neg, width_, height_, rng_);
      pos_parts.push_back(RoiInstanceFeatures(view, pos, opts_.roi_grid, opts_.roi_samples).value());
      neg_parts.push_back(RoiInstanceFeatures(view, neg, opts_.roi_grid, opts_.roi_samples).value());
    }
    pf = ConcatRows(pos_parts);
    nf = ConcatRows(neg_parts);

    auto reg_boxes =
        SampleGaussian(box_, 2 * opts_.bbreg_samples, 0.3, 4.0, width_, height_, rng_);
    std::vector<BoundingBox> keep;
    for (const BoundingBox& b : reg_boxes) {
      if (Iou(b, box_) >= BoxRegressor::kMinIou &&
          static_cast<int>(keep.size()) < opts_.bbreg_samples) {
        keep.push_back(b);
      }
    }
    if (!keep.empty()) {
      Tensor rf = RoiInstanceFeatures(feat, keep, opts_.roi_grid, opts_.roi_samples).value();
      regressor_.Train(rf, keep, box_);
    }
  }

  Sgd init_opt(opts_.lr_init, opts_.momentum, opts_.weight_decay);
  init_opt.AddGroup(classifier_.SharedParams(), 1.0);
  init_opt.AddGroup(classifier_.HeadParams(), opts_.head_lr_mult);
  OnlineUpdate(classifier_, init_opt, pf, nf, opts_.init_iters, opts_, rng_);

  auto head_rows = [](const Tensor& t, int n) {
    int rows = std::min(n, t.dim(0));
    return Tensor({rows, t.dim(1)},
                  std::vector<double>(t.storage().begin(),
                                      t.storage().begin() + static_cast<std::ptrdiff_t>(rows) *
                                                                t.dim(1)));
  };
  long_pos_.Push(0, head_rows(pf, opts_.update_pos));
  short_pos_.Push(0, head_rows(pf, opts_.update_pos));
  long_neg_.Push(0, head_rows(nf, opts_.update_neg));
  short_neg_.Push(0, head_rows(nf, opts_.update_neg));

  if (datanet_) {
    template_ = MakeTemplate(frame, box_);
    history_.clear();
    history_.push_back(ResizePair(frame, kClipImageSize, kClipImageSize));
  }
}

Tensor Tracker::GlobalAttention(const FramePair& frame) {
  int clip_len = datanet_->options().clip_len;
  FramePair current = ResizePair(frame, kClipImageSize, kClipImageSize);
  std::vector<const FramePair*> frames;
  int need = clip_len - 1;
  int have = static_cast<int>(history_.size());
  for (int i = 0; i < need; ++i) {
    int idx = std::max(0, have - need + i);
    frames.push_back(&history_[std::min(idx, have - 1)]);
  }
  frames.push_back(&current);
  return datanet_->Predict(MakeClip(frames, template_));
}

void Tracker::Update(UpdateKind kind) {
  if (kind == UpdateKind::kNone) return;
  Tensor pos = kind == UpdateKind::kLongTerm ? long_pos_.Gather() : short_pos_.Gather();
  Tensor neg = kind == UpdateKind::kLongTerm ? long_neg_.Gather() : short_neg_.Gather();
  if (pos.empty() || neg.empty()) return;  // nothing to learn from yet
  OnlineUpdate(classifier_, update_opt_, pos, neg, opts_.update_iters, opts_, rng_);
}

TrackResult Tracker::Track(const FramePair& frame) {
  CheckFramePair(frame);
  if (frame.width() != width_ || frame.height() != height_) {
    throw ShapeError("Tracker::Track: frame size differs from the initial frame");
  }
  TrackResult res;
  res.used_global = controller_.UseGlobalSearch();
  FeatureFrame feat;
  {
    NoGradGuard no_grad;
    feat = net_.Forward(frame);
    feat.gain = gain_;
  }

  std::vector<BoundingBox> boxes;
  if (res.used_global) {
    res.attention = GlobalAttention(frame);
    GlobalProposals gp =
        SampleGlobalProposals(res.attention, box_, width_, height_, global_opts_, rng_);
    boxes = std::move(gp.boxes);
    res.fallback_grid = gp.fallback;
  } else {
    boxes = SampleGaussian(box_, opts_.local_proposals, opts_.sigma_xy, opts_.sigma_scale, width_,
                           height_, rng_);
  }

  Tensor feats;
  std::vector<double> scores;
  {
    NoGradGuard no_grad;
    feats = RoiInstanceFeatures(feat, boxes, opts_.roi_grid, opts_.roi_samples).value();
    scores = ForegroundScores(classifier_.DomainLogits(Var(feats), 0).value());
  }
  int best = static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  res.best_proposal = {boxes[best], scores[best],
                       res.used_global ? ProposalSource::kGlobal : ProposalSource::kLocal};
  res.score = scores[best];

  TrackController::Decision d = controller_.Observe(res.score);
  res.frame_index = controller_.frame_index();
  res.success = d.success;
  res.failure_streak = controller_.failure_streak();
  res.update = d.update;
  if (d.success) {
    BoundingBox refined = regressor_.Apply(feats.data() + static_cast<std::size_t>(best) *
                                                              feats.dim(1),
                                           feats.dim(1), boxes[best]);
    box_ = ClipToImage(refined, width_, height_);
    CollectSamples(feat, box_, res.frame_index, opts_.update_pos, opts_.update_neg);
  }
  res.box = box_;
  Update(d.update);

  if (datanet_) {
    history_.push_back(ResizePair(frame, kClipImageSize, kClipImageSize));
    while (static_cast<int>(history_.size()) > std::max(1, datanet_->options().clip_len - 1)) {
      history_.pop_front();
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Offline training

OfflineTrainOptions OfflineTrainOptions::FromConfig(const Config& cfg) {
  OfflineTrainOptions o;
  o.iterations = cfg.GetInt("train.iterations");
  o.lr = cfg.GetDouble("train.lr");
  o.batch_pos = cfg.GetInt("tracker.batch_pos");
  o.batch_neg = cfg.GetInt("tracker.batch_neg");
  if (o.iterations < 0) throw ConfigError("train.iterations must be >= 0");
  if (o.lr <= 0) throw ConfigError("train.lr must be positive");
  return o;
}

OfflineTrainStats TrainMultiDomain(FeatureNet& net, Classifier& clf,
                                   const std::vector<SequenceRecord>& sequences,
                                   const OfflineTrainOptions& opts, const TrackerOptions& topts,
                                   Rng& rng) {
  int domains = static_cast<int>(sequences.size());
  if (domains < 1) throw std::invalid_argument("TrainMultiDomain: no sequences");
  if (clf.domains() != domains) clf.ResetHead(domains, rng);
  for (const SequenceRecord& s : sequences) CheckSequence(s);

  Sgd opt(opts.lr, topts.momentum, topts.weight_decay);
  opt.AddGroup(net.Params(), 1.0);
  opt.AddGroup(clf.SharedParams(), 1.0);
  opt.AddGroup(clf.HeadParams(), topts.head_lr_mult);

  std::vector<int> fg_cols(domains);
  for (int d = 0; d < domains; ++d) fg_cols[d] = 2 * d + 1;

  OfflineTrainStats stats;
  for (int it = 0; it < opts.iterations; ++it) {
    int d = it % domains;
    const SequenceRecord& seq = sequences[d];
    std::uniform_int_distribution<int> pick(0, seq.size() - 1);
    int t = pick(rng);
    const BoundingBox& gt = seq.boxes[t];
    auto boxes = DrawPositives(gt, opts.batch_pos, seq.width(), seq.height(), rng);
    int n_pos = static_cast<int>(boxes.size());
    for (const BoundingBox& b : DrawNegatives(gt, opts.batch_neg, seq.width(), seq.height(), rng)) {
      boxes.push_back(b);
    }
    std::vector<int> labels(boxes.size(), 0);
    std::fill_n(labels.begin(), n_pos, 1);

    opt.ZeroGrad();
    FeatureFrame feat = net.Forward(seq.frames[t]);
    feat.gain = UnitRmsGain(feat.map.value());
    Var logits = clf.Forward(RoiInstanceFeatures(feat, boxes, topts.roi_grid, topts.roi_samples));
    Var cls = LossCls(ops::SelectColumns(logits, {2 * d, 2 * d + 1}), labels);
    Var inst = LossInst(ops::SelectColumns(ops::SliceRows(logits, 0, n_pos), fg_cols), d);
    Var total = ops::Add(cls, ops::Scale(inst, kInstanceLossWeight));
    total.Backward();
    opt.Step();
    stats.cls.push_back(cls.value()[0]);
    stats.inst.push_back(inst.value()[0]);
  }
  opt.ZeroGrad();
  return stats;
}

void SaveTrackerCheckpoint(const std::string& path, const FeatureNet& net, const Classifier& clf) {
  ParamList params = net.Params();
  for (NamedParam& p : clf.SharedParams()) params.push_back(p);
  SaveParams(path, params);
}

TensorArchive LoadTrackerCheckpoint(const std::string& path, FeatureNet& net) {
  TensorArchive archive = LoadArchive(path);
  RestoreParams(net.Params(), archive, true);
  return archive;
}

}  // namespace mfg

#include "mfgnet/datanet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfgnet/ops.hpp"
#include "mfgnet/optim.hpp"

namespace mfg {

DatanetProfile DatanetProfile::Full() {
  return {"full", {64, 128, 256, 512, 512}, 1024, 256, {256, 128, 64, 32, 16}};
}

DatanetProfile DatanetProfile::Desk() {
  return {"desk", {8, 16, 16, 16, 16}, 32, 8, {16, 16, 8, 8, 4}};
}

DatanetProfile DatanetProfile::FromName(const std::string& name) {
  if (name == "full") return Full();
  if (name == "desk") return Desk();
  throw ConfigError("datanet.profile: expected desk or full, got '" + name + "'");
}

DatanetOptions DatanetOptions::FromConfig(const Config& cfg) {
  DatanetOptions o;
  o.profile = DatanetProfile::FromName(cfg.GetString("datanet.profile"));
  o.clip_len = cfg.GetInt("datanet.clip_len");
  if (o.clip_len < 1) throw ConfigError("datanet.clip_len must be >= 1");
  return o;
}

namespace {

void CheckClipImage(const ImageTensor& img, const char* what) {
  const Shape& s = img.data.shape();
  if (s.size() != 3 || s[0] != 3 || s[1] != kClipImageSize || s[2] != kClipImageSize) {
    throw ShapeError(std::string("clip ") + what + " must be 3x300x300, got " + ShapeString(s));
  }
}

void CheckClipPair(const FramePair& p, const char* what) {
  CheckClipImage(p.visible, what);
  CheckClipImage(p.thermal, what);
}

Var PointwiseWeight(const Var& w) { return ops::Reshape(w, {w.dim(0), w.dim(1), 1, 1}); }

}  // namespace

void CheckClip(const ClipInput& clip, int clip_len) {
  if (static_cast<int>(clip.frames.size()) != clip_len) {
    throw ShapeError("clip has " + std::to_string(clip.frames.size()) + " frames, expected " +
                     std::to_string(clip_len));
  }
  for (const FramePair& p : clip.frames) CheckClipPair(p, "frame");
  CheckClipPair(clip.templ, "template");
}

// ---------------------------------------------------------------------------
// RecurrentCell

RecurrentCell::RecurrentCell(int input_size, int hidden_size, Rng& rng)
    : input_size_(input_size), hidden_size_(hidden_size) {
  double std = std::sqrt(1.0 / input_size);
  w = NormalParam({hidden_size, input_size}, std, rng);
  w_f = NormalParam({hidden_size, input_size}, std, rng);
  b_f = ZeroParam({hidden_size});
  w_r = NormalParam({hidden_size, input_size}, std, rng);
  b_r = ZeroParam({hidden_size});
}

std::pair<Var, Var> RecurrentCell::Step(const Var& x, const Var& c_prev) const {
  if (x.shape().size() != 2 || x.dim(1) != input_size_) {
    throw ShapeError("recurrent step: input " + ShapeString(x.shape()) + ", cell expects D=" +
                     std::to_string(input_size_));
  }
  if (c_prev.shape() != Shape{x.dim(0), hidden_size_}) {
    throw ShapeError("recurrent step: state " + ShapeString(c_prev.shape()) + ", expected [" +
                     std::to_string(x.dim(0)) + ", " + std::to_string(hidden_size_) + "]");
  }
  Var x_hat = ops::Linear(x, w, Var());
  Var f = ops::Sigmoid(ops::Linear(x, w_f, b_f));
  Var r = ops::Sigmoid(ops::Linear(x, w_r, b_r));
  Var c = ops::Add(ops::Mul(f, c_prev), ops::Mul(ops::OneMinus(f), x_hat));
  Var skip = input_size_ == hidden_size_ ? x : x_hat;
  Var h = ops::Add(ops::Mul(r, ops::Tanh(c)), ops::Mul(ops::OneMinus(r), skip));
  return {h, c};
}

RecurrentCell::Gates RecurrentCell::MapGates(const Var& map) const {
  if (map.shape().size() != 3 || map.dim(0) != input_size_) {
    throw ShapeError("recurrent sweep: input " + ShapeString(map.shape()) + ", cell expects D=" +
                     std::to_string(input_size_));
  }
  Gates g;
  g.x_hat = ops::Conv2d(map, PointwiseWeight(w), Var(), 1, 0);
  g.forget = ops::Sigmoid(ops::Conv2d(map, PointwiseWeight(w_f), b_f, 1, 0));
  g.reset = ops::Sigmoid(ops::Conv2d(map, PointwiseWeight(w_r), b_r, 1, 0));
  g.skip = input_size_ == hidden_size_ ? map : g.x_hat;
  return g;
}

Var RecurrentCell::Emit(const Gates& g, const Var& c) const {
  return ops::Add(ops::Mul(g.reset, ops::Tanh(c)), ops::Mul(ops::OneMinus(g.reset), g.skip));
}

Var RecurrentCell::Sweep(const Var& map, int axis, bool reverse) const {
  Gates g = MapGates(map);
  return Emit(g, ops::GatedScan(g.forget, g.x_hat, axis, reverse));
}

std::pair<Var, Var> RecurrentCell::SweepBoth(const Var& map, int axis) const {
  Gates g = MapGates(map);
  return {Emit(g, ops::GatedScan(g.forget, g.x_hat, axis, false)),
          Emit(g, ops::GatedScan(g.forget, g.x_hat, axis, true))};
}

void RecurrentCell::CollectParams(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".w", w});
  out.push_back({prefix + ".w_f", w_f});
  out.push_back({prefix + ".b_f", b_f});
  out.push_back({prefix + ".w_r", w_r});
  out.push_back({prefix + ".b_r", b_r});
}

// ---------------------------------------------------------------------------
// Encoder

ResidualStage::ResidualStage(int in, int out, Rng& rng)
    : conv_a_(in, out, 3, 2, 1, true, rng),
      conv_b_(out, out, 3, 1, 1, true, rng),
      proj_(in, out, 1, 2, 0, false, rng) {}

Var ResidualStage::Forward(const Var& x) const {
  Var y = conv_b_.Forward(ops::Relu(conv_a_.Forward(x)));
  return ops::Relu(ops::Add(y, proj_.Forward(x)));
}

void ResidualStage::CollectParams(ParamList& out, const std::string& prefix) const {
  conv_a_.CollectParams(out, prefix + ".conv_a");
  conv_b_.CollectParams(out, prefix + ".conv_b");
  proj_.CollectParams(out, prefix + ".proj");
}

ClipEncoder::ClipEncoder(const DatanetProfile& profile, Rng& rng) {
  const std::vector<int>& w = profile.encoder_widths;
  if (w.size() != 5) throw ShapeError("clip encoder needs five widths");
  stem_ = Conv2dLayer(3, w[0], 3, 2, 1, true, rng);
  for (int i = 1; i < 5; ++i) stages_.emplace_back(w[i - 1], w[i], rng);
}

Var ClipEncoder::EncodeImage(const Var& image) const {
  Var x = ops::Relu(stem_.Forward(image));  // 150
  x = stages_[0].Forward(x);                // 75
  x = stages_[1].Forward(x);                // 38
  Var s3 = stages_[2].Forward(x);           // 19
  Var s4 = stages_[3].Forward(s3);          // 10
  return ops::Concat({s3, ops::UpsampleBilinear(s4, s3.dim(1), s3.dim(2))});
}

void ClipEncoder::CollectParams(ParamList& out, const std::string& prefix) const {
  stem_.CollectParams(out, prefix + ".stem");
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    stages_[i].CollectParams(out, prefix + ".stage" + std::to_string(i + 1));
  }
}

// ---------------------------------------------------------------------------
// Datanet

const std::vector<int>& DecoderSizes() {
  static const std::vector<int> sizes = {30, 60, 100, 150, kClipImageSize};
  return sizes;
}

Datanet::Datanet(const DatanetOptions& opts, Rng& rng)
    : opts_(opts), encoder_(opts.profile, rng) {
  const DatanetProfile& p = opts.profile;
  int clip_ch = p.clip_channels(opts.clip_len);
  spatial_reduce_ = Conv2dLayer(clip_ch, p.spatial_channels, 1, 1, 0, true, rng);
  temporal_reduce_ = Conv2dLayer(clip_ch, kTemporalChannels, 1, 1, 0, true, rng);
  horizontal_ = RecurrentCell(p.spatial_channels, p.sweep_hidden, rng);
  vertical_ = RecurrentCell(p.spatial_channels, p.sweep_hidden, rng);
  temporal_ = RecurrentCell(kTemporalChannels, kTemporalChannels, rng);
  if (p.decoder_widths.size() != 5) throw ShapeError("decoder needs five group widths");
  int in = p.combined_channels();
  for (int g = 0; g < 5; ++g) {
    int c = p.decoder_widths[g];
    std::vector<ConvTranspose2dLayer> group;
    group.emplace_back(in, c, 3, 1, 1, true, rng);
    group.emplace_back(c, c, 3, 1, 1, true, rng);
    group.emplace_back(c, g == 4 ? 1 : c, 3, 1, 1, true, rng);
    decoder_.push_back(std::move(group));
    in = c;
  }
}

Var Datanet::EncodeClip(const ClipInput& clip) const {
  CheckClip(clip, opts_.clip_len);
  std::vector<Var> parts;
  auto encode_pair = [&](const FramePair& p) {
    return ops::Add(encoder_.EncodeImage(Var(p.visible.data)),
                    encoder_.EncodeImage(Var(p.thermal.data)));
  };
  for (const FramePair& p : clip.frames) parts.push_back(encode_pair(p));
  parts.push_back(encode_pair(clip.templ));
  return ops::Concat(parts);
}

Var Datanet::SpatialSweep(const Var& f) const {
  if (f.shape().size() != 3 || f.dim(1) != f.dim(2)) {
    throw ShapeError("spatial sweep needs a square map, got " + ShapeString(f.shape()));
  }
  auto [left, right] = horizontal_.SweepBoth(f, 2);
  auto [down, up] = vertical_.SweepBoth(f, 1);
  return ops::Concat({left, right, down, up});
}

Var Datanet::TemporalEncode(const Var& clip_features) const {
  return temporal_reduce_.Forward(clip_features);
}

Var Datanet::TemporalSweep(const Var& f) const {
  if (f.shape().size() != 3 || f.dim(0) != kTemporalChannels) {
    throw ShapeError("temporal sweep expects 19 channels, got " + ShapeString(f.shape()));
  }
  auto [fwd, bwd] = temporal_.SweepBoth(f, 1);
  return ops::Scale(ops::Add(fwd, bwd), 0.5);
}

Var Datanet::Combine(const Var& clip_features) const {
  Var spatial = SpatialSweep(ops::Relu(spatial_reduce_.Forward(clip_features)));
  Var temporal = TemporalSweep(TemporalEncode(clip_features));
  return ops::Concat({spatial, temporal});
}

Var Datanet::DecodeLogits(const Var& combined) const {
  if (combined.shape().size() != 3 || combined.dim(0) != profile().combined_channels()) {
    throw ShapeError("decoder expects " + std::to_string(profile().combined_channels()) +
                     " channels, got " + ShapeString(combined.shape()));
  }
  Var x = combined;
  for (int g = 0; g < 5; ++g) {
    for (int l = 0; l < 3; ++l) {
      x = decoder_[g][l].Forward(x);
      if (!(g == 4 && l == 2)) x = ops::Relu(x);
    }
    x = ops::UpsampleBilinear(x, DecoderSizes()[g], DecoderSizes()[g]);
  }
  return x;
}

Var Datanet::DecodeAttention(const Var& combined) const {
  return ops::Sigmoid(DecodeLogits(combined));
}

Var Datanet::ForwardLogits(const ClipInput& clip) const {
  return DecodeLogits(Combine(EncodeClip(clip)));
}

Tensor Datanet::Predict(const ClipInput& clip) const {
  NoGradGuard no_grad;
  return ops::Sigmoid(ForwardLogits(clip)).value().Reshaped({kClipImageSize, kClipImageSize});
}

ParamList Datanet::Params() const {
  ParamList out;
  encoder_.CollectParams(out, "datanet.encoder");
  spatial_reduce_.CollectParams(out, "datanet.spatial_reduce");
  temporal_reduce_.CollectParams(out, "datanet.temporal_reduce");
  horizontal_.CollectParams(out, "datanet.horizontal");
  vertical_.CollectParams(out, "datanet.vertical");
  temporal_.CollectParams(out, "datanet.temporal");
  for (std::size_t g = 0; g < decoder_.size(); ++g) {
    for (std::size_t l = 0; l < decoder_[g].size(); ++l) {
      decoder_[g][l].CollectParams(
          out, "datanet.decoder" + std::to_string(g + 1) + "." + std::to_string(l + 1));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training helpers

double AttentionBce(const Tensor& attention, const Tensor& mask, double eps) {
  if (attention.size() != mask.size()) {
    throw ShapeError("attention " + ShapeString(attention.shape()) + " vs mask " +
                     ShapeString(mask.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < attention.size(); ++i) {
    double p = std::clamp(attention[i], eps, 1.0 - eps);
    total -= mask[i] * std::log(p) + (1.0 - mask[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(attention.size());
}

Var AttentionTrainingStep(const Datanet& net, const ClipInput& clip, const Tensor& mask,
                          double pos_weight) {
  if (mask.size() != static_cast<std::size_t>(kClipImageSize) * kClipImageSize) {
    throw ShapeError("attention mask must be 300x300, got " + ShapeString(mask.shape()));
  }
  Var logits = net.ForwardLogits(clip);
  Var loss =
      ops::BceWithLogits(logits, mask.Reshaped({1, kClipImageSize, kClipImageSize}), pos_weight);
  loss.Backward();
  return loss;
}

Tensor BoxMask(const BoundingBox& box, int width, int height, int size) {
  Tensor m({size, size});
  double sx = static_cast<double>(width) / size, sy = static_cast<double>(height) / size;
  for (int i = 0; i < size; ++i) {
    double y = (i + 0.5) * sy;
    if (y < box.y || y >= box.y + box.h) continue;
    for (int j = 0; j < size; ++j) {
      double x = (j + 0.5) * sx;
      if (x >= box.x && x < box.x + box.w) m.at(i, j) = 1.0;
    }
  }
  return m;
}

FramePair MakeTemplate(const FramePair& first, const BoundingBox& box) {
  FramePair t;
  t.visible.data = CropAndResize(first.visible.data, box, kClipImageSize, kClipImageSize);
  t.visible.modality = Modality::kVisible;
  t.thermal.data = CropAndResize(first.thermal.data, box, kClipImageSize, kClipImageSize);
  t.thermal.modality = Modality::kThermal;
  return t;
}

ClipInput MakeClip(const std::vector<const FramePair*>& frames, const FramePair& templ) {
  ClipInput clip;
  for (const FramePair* f : frames) {
    clip.frames.push_back(f->height() == kClipImageSize && f->width() == kClipImageSize
                              ? *f
                              : ResizePair(*f, kClipImageSize, kClipImageSize));
  }
  clip.templ = templ;
  return clip;
}

ClipInput MakeClip(const SequenceRecord& seq, int t, int clip_len) {
  if (t < 0 || t >= seq.size()) throw ShapeError("clip index out of range");
  std::vector<const FramePair*> frames;
  for (int i = t - clip_len + 1; i <= t; ++i) frames.push_back(&seq.frames[std::max(i, 0)]);
  return MakeClip(frames, MakeTemplate(seq.frames[0], seq.boxes[0]));
}

std::pair<double, double> AttentionCentroid(const Tensor& attention) {
  int h = attention.dim(attention.ndim() - 2), w = attention.dim(attention.ndim() - 1);
  double mass = 0.0, sx = 0.0, sy = 0.0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double m = attention[static_cast<std::size_t>(i) * w + j];
      mass += m;
      sx += m * (j + 0.5);
      sy += m * (i + 0.5);
    }
  }
  if (mass <= 0.0) return {0.5 * w, 0.5 * h};
  return {sx / mass, sy / mass};
}

// ---------------------------------------------------------------------------
// Global proposals

GlobalProposalOptions GlobalProposalOptions::FromConfig(const Config& cfg) {
  GlobalProposalOptions o;
  o.count = cfg.GetInt("datanet.proposals");
  o.max_peaks = cfg.GetInt("datanet.max_peaks");
  o.scale_jitter = cfg.GetDouble("datanet.scale_jitter");
  if (o.count < 1) throw ConfigError("datanet.proposals must be >= 1");
  if (o.max_peaks < 1) throw ConfigError("datanet.max_peaks must be >= 1");
  if (o.scale_jitter < 0.0 || o.scale_jitter >= 1.0) {
    throw ConfigError("datanet.scale_jitter must lie in [0, 1)");
  }
  return o;
}

GlobalProposals SampleGlobalProposals(const Tensor& attention, const BoundingBox& prior,
                                      int width, int height, const GlobalProposalOptions& opts,
                                      Rng& rng) {
  if (opts.count < 1) throw ShapeError("global proposals: count must be >= 1");
  if (!prior.valid()) throw ShapeError("global proposals: invalid prior box");
  int mh = attention.dim(attention.ndim() - 2), mw = attention.dim(attention.ndim() - 1);
  double sx = static_cast<double>(mw) / width, sy = static_cast<double>(mh) / height;

  GlobalProposals out;
  std::vector<double> work(attention.storage());
  for (double& v : work) {
    if (!std::isfinite(v)) v = 0.0;
  }
  int rad_y = std::max(1, static_cast<int>(std::lround(0.5 * prior.h * sy)));
  int rad_x = std::max(1, static_cast<int>(std::lround(0.5 * prior.w * sx)));
  double top = 0.0;
  for (int p = 0; p < opts.max_peaks; ++p) {
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < mh * mw; ++i) {
      if (work[i] > best_v) {  // strict: first in raster order wins ties
        best_v = work[i];
        best = i;
      }
    }
    if (p == 0) {
      if (best_v <= 1e-12) break;
      top = best_v;
    } else if (best_v <= 0.0 || best_v < opts.min_relative_peak * top) {
      break;
    }
    int r = best / mw, c = best % mw;
    out.peaks.push_back({r, c});
    for (int i = std::max(0, r - rad_y); i <= std::min(mh - 1, r + rad_y); ++i) {
      for (int j = std::max(0, c - rad_x); j <= std::min(mw - 1, c + rad_x); ++j) {
        work[static_cast<std::size_t>(i) * mw + j] = -1.0;
      }
    }
  }

  if (out.peaks.empty()) {
    out.fallback = true;
    int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(opts.count))));
    for (int k = 0; k < opts.count; ++k) {
      int cell = k % (g * g);
      double cx = (cell % g + 0.5) * width / g, cy = (cell / g + 0.5) * height / g;
      out.boxes.push_back(
          ClipToImage(BoundingBox::FromCenter(cx, cy, prior.w, prior.h), width, height));
    }
    return out;
  }

  std::uniform_real_distribution<double> jitter(-opts.scale_jitter, opts.scale_jitter);
  int np = static_cast<int>(out.peaks.size());
  for (int k = 0; k < opts.count; ++k) {
    auto [r, c] = out.peaks[k % np];
    double s = k < np ? 1.0 : 1.0 + jitter(rng);
    double cx = (c + 0.5) / sx, cy = (r + 0.5) / sy;
    out.boxes.push_back(
        ClipToImage(BoundingBox::FromCenter(cx, cy, prior.w * s, prior.h * s), width, height));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trainer

AttentionTrainOptions AttentionTrainOptions::FromConfig(const Config& cfg) {
  AttentionTrainOptions o;
  o.steps = cfg.GetInt("datanet.train_steps");
  o.lr = cfg.GetDouble("datanet.lr");
  o.pos_weight = cfg.GetDouble("datanet.pos_weight");
  if (o.steps < 0) throw ConfigError("datanet.train_steps must be >= 0");
  if (o.lr <= 0) throw ConfigError("datanet.lr must be positive");
  if (o.pos_weight <= 0) throw ConfigError("datanet.pos_weight must be positive");
  return o;
}

std::vector<double> TrainAttention(Datanet& net, const std::vector<SequenceRecord>& sequences,
                                   const AttentionTrainOptions& opts, Rng& rng) {
  if (sequences.empty()) throw ShapeError("attention training needs at least one sequence");
  // Resize every frame once; clips then only reference the cache.
  struct Cached {
    std::vector<FramePair> frames;
    FramePair templ;
    const SequenceRecord* seq;
  };
  std::vector<Cached> cache;
  for (const SequenceRecord& s : sequences) {
    CheckSequence(s);
    Cached c;
    c.seq = &s;
    for (const FramePair& f : s.frames) {
      c.frames.push_back(ResizePair(f, kClipImageSize, kClipImageSize));
    }
    c.templ = MakeTemplate(s.frames[0], s.boxes[0]);
    cache.push_back(std::move(c));
  }

  ParamList params = net.Params();
  Adagrad opt(opts.lr);
  opt.AddGroup(params);
  int clip_len = net.options().clip_len;
  std::vector<double> losses;
  std::uniform_int_distribution<std::size_t> pick_seq(0, cache.size() - 1);
  for (int step = 0; step < opts.steps; ++step) {
    const Cached& c = cache[pick_seq(rng)];
    std::uniform_int_distribution<int> pick_t(0, c.seq->size() - 1);
    int t = pick_t(rng);
    std::vector<const FramePair*> frames;
    for (int i = t - clip_len + 1; i <= t; ++i) frames.push_back(&c.frames[std::max(i, 0)]);
    ClipInput clip = MakeClip(frames, c.templ);
    Tensor mask = BoxMask(c.seq->boxes[t], c.seq->width(), c.seq->height());
    opt.ZeroGrad();
    Var loss = AttentionTrainingStep(net, clip, mask, opts.pos_weight);
    opt.Step();
    losses.push_back(loss.value()[0]);
  }
  return losses;
}

}  // namespace mfg

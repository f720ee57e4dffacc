#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "mfgnet/attention.hpp"
#include "mfgnet/experiment.hpp"
#include "mfgnet/metrics.hpp"
#include "mfgnet/mfgnet.hpp"
#include "mfgnet/sequence_io.hpp"
#include "mfgnet/synth.hpp"
#include "mfgnet/tracker.hpp"
#include "test_util.hpp"

namespace mfg::checks {

using testing::GradCheck;
using testing::Probe;
using testing::RandomTensor;
using testing::RandomVar;

namespace {

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int RandInt(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

BoundingBox RandomCellBox(Rng& rng) {
  return {static_cast<double>(RandInt(rng, 0, 20)), static_cast<double>(RandInt(rng, 0, 20)),
          static_cast<double>(RandInt(rng, 1, 12)), static_cast<double>(RandInt(rng, 1, 12))};
}

}  // namespace

// ---------------------------------------------------------------------------
// Oracles

Tensor OracleDynamicConv(const Tensor& f, const Tensor& k) {
  int c = f.dim(0), h = f.dim(1), w = f.dim(2), s = k.dim(1), r = s / 2;
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double acc = 0.0;
        for (int u = 0; u < s; ++u) {
          for (int v = 0; v < s; ++v) {
            int y = i + u - r, x = j + v - r;
            if (y < 0 || y >= h || x < 0 || x >= w) continue;
            acc += k.at(ch, u, v) * f.at(ch, y, x);
          }
        }
        out.at(ch, i, j) = acc;
      }
    }
  }
  return out;
}

Tensor OracleGenerateFilters(const Tensor& concat, const Tensor& key_w, const Tensor& query_w,
                             int kernel_size, bool squash) {
  int in = concat.dim(0), h = concat.dim(1), w = concat.dim(2);
  int c = key_w.dim(0), ss = kernel_size * kernel_size;
  Tensor out({c, kernel_size, kernel_size});
  for (int ch = 0; ch < c; ++ch) {
    for (int q = 0; q < ss; ++q) {
      double acc = 0.0;
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
          double key = 0.0, query = 0.0;
          for (int m = 0; m < in; ++m) {
            key += key_w.at(ch, m) * concat.at(m, i, j);
            query += query_w.at(q, m) * concat.at(m, i, j);
          }
          acc += key * query;
        }
      }
      out[ch * ss + q] = squash ? std::tanh(acc) : acc;
    }
  }
  return out;
}

std::pair<Tensor, Tensor> OracleRecurrentStep(const Tensor& x, const Tensor& c_prev,
                                              const Tensor& w, const Tensor& w_f,
                                              const Tensor& b_f, const Tensor& w_r,
                                              const Tensor& b_r) {
  int n = x.dim(0), d = x.dim(1), hs = w.dim(0);
  Tensor h({n, hs}), c({n, hs});
  for (int b = 0; b < n; ++b) {
    for (int k = 0; k < hs; ++k) {
      double xh = 0.0, zf = b_f[k], zr = b_r[k];
      for (int m = 0; m < d; ++m) {
        xh += w.at(k, m) * x.at(b, m);
        zf += w_f.at(k, m) * x.at(b, m);
        zr += w_r.at(k, m) * x.at(b, m);
      }
      double f = Sigmoid(zf), r = Sigmoid(zr);
      double ct = f * c_prev.at(b, k) + (1.0 - f) * xh;
      double skip = d == hs ? x.at(b, k) : xh;
      c.at(b, k) = ct;
      h.at(b, k) = r * std::tanh(ct) + (1.0 - r) * skip;
    }
  }
  return {h, c};
}

double OracleLossCls(const Tensor& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (int i = 0; i < logits.dim(0); ++i) {
    double a = logits.at(i, 0), b = logits.at(i, 1);
    double own = labels[i] == 1 ? b : a, other = labels[i] == 1 ? a : b;
    // -log(e^own / (e^own + e^other)) = log(1 + e^(other - own))
    total += std::log1p(std::exp(other - own));
  }
  return total / logits.dim(0);
}

double OracleLossInst(const Tensor& scores, int domain) {
  double total = 0.0;
  for (int i = 0; i < scores.dim(0); ++i) {
    double denom = 0.0;
    for (int d = 0; d < scores.dim(1); ++d) denom += std::exp(scores.at(i, d));
    total += -std::log(std::exp(scores.at(i, domain)) / denom);
  }
  return total / scores.dim(0);
}

double OracleCellIou(const BoundingBox& a, const BoundingBox& b) {
  int inter = 0, uni = 0;
  // Covers every box the oracle suites generate (coordinates in [-8, 64)).
  for (int y = -8; y < 64; ++y) {
    for (int x = -8; x < 64; ++x) {
      double cx = x + 0.5, cy = y + 0.5;
      bool in_a = cx > a.x && cx < a.x + a.w && cy > a.y && cy < a.y + a.h;
      bool in_b = cx > b.x && cx < b.x + b.w && cy > b.y && cy < b.y + b.h;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

double OraclePrecision(const std::vector<BoundingBox>& pred, const std::vector<BoundingBox>& gt,
                       double threshold) {
  int hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double dx = (pred[i].x + pred[i].w / 2) - (gt[i].x + gt[i].w / 2);
    double dy = (pred[i].y + pred[i].h / 2) - (gt[i].y + gt[i].h / 2);
    hit += std::sqrt(dx * dx + dy * dy) <= threshold;
  }
  return static_cast<double>(hit) / pred.size();
}

std::vector<double> OracleSuccessCurve(const std::vector<BoundingBox>& pred,
                                       const std::vector<BoundingBox>& gt) {
  std::vector<double> curve;
  for (int t = 0; t <= 20; ++t) {
    int hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += OracleCellIou(pred[i], gt[i]) > t / 20.0;
    curve.push_back(static_cast<double>(hit) / pred.size());
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Oracle suites

OracleReport DynamicConvOracle(int instances, std::uint64_t seed) {
  Rng rng(seed);
  OracleReport rep{"dynamic_convolve", instances, 0.0, 1e-6};
  for (int n = 0; n < instances; ++n) {
    int c = RandInt(rng, 1, 4), h = RandInt(rng, 1, 7), w = RandInt(rng, 1, 7);
    int s = 2 * RandInt(rng, 0, 2) + 1;
    Tensor f = RandomTensor({c, h, w}, rng), k = RandomTensor({c, s, s}, rng);
    Tensor got = DynamicConvolve(Var(f), {Var(k), Modality::kVisible}).value();
    rep.max_err = std::max(rep.max_err, MaxAbsDiff(got, OracleDynamicConv(f, k)));
  }
  return rep;
}

OracleReport GenerateFiltersOracle(int instances, std::uint64_t seed) {
  Rng rng(seed);
  OracleReport rep{"generate_filters", instances, 0.0, 1e-6};
  for (int n = 0; n < instances; ++n) {
    int c = RandInt(rng, 1, 4), h = RandInt(rng, 1, 5), w = RandInt(rng, 1, 5);
    int s = 2 * RandInt(rng, 0, 2) + 1;
    bool squash = RandInt(rng, 0, 1) == 1;
    FilterGenerator gen(c, s, squash, rng);
    gen.key_weight.mutable_value() = RandomTensor({c, 2 * c, 1, 1}, rng);
    gen.query_weight.mutable_value() = RandomTensor({s * s, 2 * c, 1, 1}, rng);
    Tensor concat = RandomTensor({2 * c, h, w}, rng);
    Tensor got = gen.Generate(Var(concat)).value();
    Tensor want = OracleGenerateFilters(concat, gen.key_weight.value().Reshaped({c, 2 * c}),
                                        gen.query_weight.value().Reshaped({s * s, 2 * c}), s,
                                        squash);
    rep.max_err = std::max(rep.max_err, MaxAbsDiff(got, want));
  }
  return rep;
}

OracleReport RecurrentStepOracle(int instances, std::uint64_t seed) {
  Rng rng(seed);
  OracleReport rep{"recurrent_step", instances, 0.0, 1e-6};
  for (int n = 0; n < instances; ++n) {
    int d = RandInt(rng, 1, 5), hs = RandInt(rng, 1, 5), batch = RandInt(rng, 1, 4);
    if (n % 3 == 0) hs = d;  // exercise the identity skip path
    RecurrentCell cell(d, hs, rng);
    cell.b_f.mutable_value() = RandomTensor({hs}, rng);
    cell.b_r.mutable_value() = RandomTensor({hs}, rng);
    Tensor x = RandomTensor({batch, d}, rng, -2, 2), c = RandomTensor({batch, hs}, rng);
    auto [h_got, c_got] = cell.Step(Var(x), Var(c));
    auto [h_want, c_want] =
        OracleRecurrentStep(x, c, cell.w.value(), cell.w_f.value(), cell.b_f.value(),
                            cell.w_r.value(), cell.b_r.value());
    rep.max_err = std::max({rep.max_err, MaxAbsDiff(h_got.value(), h_want),
                            MaxAbsDiff(c_got.value(), c_want)});
  }
  return rep;
}

OracleReport LossClsOracle(int instances, std::uint64_t seed) {
  Rng rng(seed);
  OracleReport rep{"loss_cls", instances, 0.0, 1e-10};
  for (int n = 0; n < instances; ++n) {
    int rows = RandInt(rng, 1, 8);
    Tensor logits = RandomTensor({rows, 2}, rng, -5, 5);
    std::vector<int> labels(rows);
    for (int& l : labels) l = RandInt(rng, 0, 1);
    double got = LossCls(Var(logits), labels).value()[0];
    rep.max_err = std::max(rep.max_err, std::abs(got - OracleLossCls(logits, labels)));
  }
  return rep;
}

OracleReport LossInstOracle(int instances, std::uint64_t seed) {
  Rng rng(seed);
  OracleReport rep{"loss_inst", instances, 0.0, 1e-10};
  for (int n = 0; n < instances; ++n) {
    int rows = RandInt(rng, 1, 6), domains = RandInt(rng, 1, 6);
    int domain = RandInt(rng, 0, domains - 1);
    Tensor scores = RandomTensor({rows, domains}, rng, -5, 5);
    double got = LossInst(Var(scores), domain).value()[0];
    rep.max_err = std::max(rep.max_err, std::abs(got - OracleLossInst(scores, domain)));
  }
  return rep;
}

OracleReport IouOracle(int instances, std::uint64_t seed) {
  Rng rng(seed);
  OracleReport rep{"iou", instances, 0.0, 1e-6};
  for (int n = 0; n < instances; ++n) {
    BoundingBox a = RandomCellBox(rng), b = RandomCellBox(rng);
    rep.max_err = std::max(rep.max_err, std::abs(Iou(a, b) - OracleCellIou(a, b)));
  }
  return rep;
}

OracleReport PrecisionOracle(int instances, std::uint64_t seed) {
  Rng rng(seed);
  OracleReport rep{"precision_rate", instances, 0.0, 1e-6};
  std::uniform_real_distribution<double> thr(0.0, 30.0);
  for (int n = 0; n < instances; ++n) {
    int frames = RandInt(rng, 1, 10);
    std::vector<BoundingBox> p, g;
    for (int i = 0; i < frames; ++i) {
      p.push_back(RandomCellBox(rng));
      g.push_back(RandomCellBox(rng));
    }
    double t = thr(rng);
    rep.max_err = std::max(rep.max_err, std::abs(PrecisionRate(p, g, t) - OraclePrecision(p, g, t)));
  }
  return rep;
}

OracleReport SuccessOracle(int instances, std::uint64_t seed) {
  Rng rng(seed);
  OracleReport rep{"success_rate", instances, 0.0, 1e-6};
  for (int n = 0; n < instances; ++n) {
    int frames = RandInt(rng, 1, 10);
    std::vector<BoundingBox> p, g;
    for (int i = 0; i < frames; ++i) {
      g.push_back(RandomCellBox(rng));
      // Mix random pairs with overlapping shifts so the curve is non-trivial.
      BoundingBox b = g.back();
      b.x += RandInt(rng, -3, 3);
      b.w += RandInt(rng, 0, 3);
      p.push_back(i % 2 ? RandomCellBox(rng) : b);
    }
    std::vector<double> got = SuccessCurve(p, g), want = OracleSuccessCurve(p, g);
    double auc_want = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) {
      rep.max_err = std::max(rep.max_err, std::abs(got[i] - want[i]));
      auc_want += want[i] / want.size();
    }
    rep.max_err = std::max(rep.max_err, std::abs(Evaluate(p, g).sr_auc - auc_want));
  }
  return rep;
}

std::vector<OracleReport> AllOracles(int instances, std::uint64_t seed) {
  return {DynamicConvOracle(instances, seed),     GenerateFiltersOracle(instances, seed + 1),
          RecurrentStepOracle(instances, seed + 2), LossClsOracle(instances, seed + 3),
          LossInstOracle(instances, seed + 4),    IouOracle(instances, seed + 5),
          PrecisionOracle(instances, seed + 6),   SuccessOracle(instances, seed + 7)};
}

// ---------------------------------------------------------------------------
// Gradient checks

GradReport MfgnetGradCheck(std::uint64_t seed) {
  Rng rng(seed);
  MfgOptions opts;
  Mfgnet net(3, opts, rng);
  for (FilterGenerator* g : {&net.visible_branch(), &net.thermal_branch()}) {
    g->key_weight.mutable_value() = RandomTensor(g->key_weight.shape(), rng, -0.5, 0.5);
    g->query_weight.mutable_value() = RandomTensor(g->query_weight.shape(), rng, -0.5, 0.5);
  }
  Var fv = RandomVar({3, 5, 6}, rng), ft = RandomVar({3, 5, 6}, rng);
  Probe p({6, 5, 6}, rng);
  auto loss = [&] { return p(net.Forward(fv, ft)); };
  auto r = GradCheck(loss,
                     {fv, ft, net.visible_branch().key_weight, net.visible_branch().query_weight,
                      net.thermal_branch().key_weight, net.thermal_branch().query_weight},
                     rng, 90);
  return {"mfgnet generate->convolve->fuse", r.max_rel, r.checked};
}

GradReport CbamGradCheck(std::uint64_t seed) {
  Rng rng(seed);
  CbamOptions opts;
  opts.reduction = 2;
  opts.spatial_kernel = 3;
  Cbam cbam(8, opts, rng);
  Var f = RandomVar({8, 5, 5}, rng);
  Probe p({8, 5, 5}, rng);
  auto loss = [&] { return p(cbam.Apply(f)); };
  auto r = GradCheck(loss,
                     {f, cbam.fc1().weight, cbam.fc1().bias, cbam.fc2().weight, cbam.fc2().bias,
                      cbam.spatial_conv().weight},
                     rng, 80);
  return {"cbam", r.max_rel, r.checked};
}

GradReport SpatialSweepGradCheck(std::uint64_t seed) {
  Rng rng(seed);
  Datanet net(DatanetOptions{}, rng);
  int d = net.profile().spatial_channels;
  for (RecurrentCell* c : {&net.horizontal_cell(), &net.vertical_cell()}) {
    c->b_f.mutable_value() = RandomTensor(c->b_f.shape(), rng);
    c->b_r.mutable_value() = RandomTensor(c->b_r.shape(), rng);
  }
  Var f = RandomVar({d, 5, 5}, rng);
  Probe p({4 * net.profile().sweep_hidden, 5, 5}, rng);
  auto loss = [&] { return p(net.SpatialSweep(f)); };
  RecurrentCell& hz = net.horizontal_cell();
  RecurrentCell& vt = net.vertical_cell();
  auto r = GradCheck(
      loss, {f, hz.w, hz.w_f, hz.b_f, hz.w_r, hz.b_r, vt.w, vt.w_f, vt.b_f, vt.w_r, vt.b_r}, rng,
      40);
  return {"datanet spatial sweep (4 directions)", r.max_rel, r.checked};
}

GradReport TemporalSweepGradCheck(std::uint64_t seed) {
  Rng rng(seed);
  Datanet net(DatanetOptions{}, rng);
  RecurrentCell& c = net.temporal_cell();
  c.b_f.mutable_value() = RandomTensor(c.b_f.shape(), rng);
  c.b_r.mutable_value() = RandomTensor(c.b_r.shape(), rng);
  Var f = RandomVar({kTemporalChannels, 4, 4}, rng);
  Probe p({kTemporalChannels, 4, 4}, rng);
  auto loss = [&] { return p(net.TemporalSweep(f)); };
  auto r = GradCheck(loss, {f, c.w, c.w_f, c.b_f, c.w_r, c.b_r}, rng, 40);
  return {"datanet temporal sweep", r.max_rel, r.checked};
}

// ---------------------------------------------------------------------------
// Full-profile audit

ShapeAudit FullProfileAudit(std::uint64_t seed) {
  Rng rng(seed);
  NoGradGuard no_grad;
  ShapeAudit a;
  FeatureNetOptions fo;
  fo.backbone.channels = 512;
  FeatureNet net(fo, rng);
  FramePair frame = testing::RandomFrame(96, 96, rng);
  a.fused = net.Forward(frame).map.shape();
  auto [fv, ft] = net.ModalityFeatures(frame);
  a.filter_bank = net.mfgnet().GenerateFilters(ops::Concat({fv, ft})).first.kernels.shape();

  DatanetOptions dopts;
  dopts.profile = DatanetProfile::Full();
  Datanet datanet(dopts, rng);
  ClipInput clip;
  for (int t = 0; t < dopts.clip_len; ++t) {
    clip.frames.push_back(testing::RandomFrame(kClipImageSize, kClipImageSize, rng));
  }
  clip.templ = testing::RandomFrame(kClipImageSize, kClipImageSize, rng);
  Var features = datanet.EncodeClip(clip);
  a.clip = features.shape();
  a.temporal = datanet.TemporalSweep(datanet.TemporalEncode(features)).shape();
  Var combined = datanet.Combine(features);
  a.combined = combined.shape();
  a.attention = datanet.DecodeAttention(combined).shape();
  return a;
}

// ---------------------------------------------------------------------------
// Identities

IdentityReport Identities(std::uint64_t seed) {
  Rng rng(seed);
  IdentityReport rep;
  int c = 4;
  Var fv(RandomTensor({c, 6, 5}, rng)), ft(RandomTensor({c, 6, 5}, rng));
  Var concat = ops::Concat({fv, ft});

  DynamicFilterSet zero_v{Var(Tensor({c, 3, 3})), Modality::kVisible};
  DynamicFilterSet zero_t{Var(Tensor({c, 3, 3})), Modality::kThermal};
  rep.zero_filters_fuse = MaxAbsDiff(Fuse(fv, ft, zero_v, zero_t).value(), concat.value());

  Mfgnet net(c, MfgOptions{}, rng);
  for (FilterGenerator* g : {&net.visible_branch(), &net.thermal_branch()}) {
    g->key_weight.mutable_value().Fill(0.0);
  }
  rep.zero_generator_fuse = MaxAbsDiff(net.Forward(fv, ft).value(), concat.value());

  Tensor ident({c, 3, 3});
  for (int ch = 0; ch < c; ++ch) ident.at(ch, 1, 1) = 1.0;
  rep.identity_kernel =
      MaxAbsDiff(DynamicConvolve(fv, {Var(ident), Modality::kVisible}).value(), fv.value());

  // Gate saturation through large biases.
  auto gates = [&](int d, int h, double bf, double br) {
    RecurrentCell cell(d, h, rng);
    cell.b_f.mutable_value().Fill(bf);
    cell.b_r.mutable_value().Fill(br);
    Tensor x = RandomTensor({3, d}, rng), cp = RandomTensor({3, h}, rng);
    auto [hv, cv] = cell.Step(Var(x), Var(cp));
    Tensor x_hat = ops::Linear(Var(x), cell.w, Var()).value();
    return std::make_tuple(hv.value(), cv.value(), x, cp, x_hat);
  };
  constexpr double kSat = 40.0;
  {
    auto [h, cv, x, cp, xh] = gates(5, 5, kSat, 0.0);
    rep.forget_open = MaxAbsDiff(cv, cp);
  }
  {
    auto [h, cv, x, cp, xh] = gates(5, 5, -kSat, 0.0);
    rep.forget_closed = MaxAbsDiff(cv, xh);
  }
  {
    auto [h, cv, x, cp, xh] = gates(5, 5, 0.0, kSat);
    Tensor t = cv;
    for (double& v : t.storage()) v = std::tanh(v);
    rep.reset_open = MaxAbsDiff(h, t);
  }
  {
    auto [h, cv, x, cp, xh] = gates(5, 5, 0.0, -kSat);
    rep.reset_closed = MaxAbsDiff(h, x);
  }
  {
    auto [h, cv, x, cp, xh] = gates(6, 4, 0.0, -kSat);
    rep.reset_closed_projected = MaxAbsDiff(h, xh);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Switch semantics

SwitchReport SwitchSemantics(const Datanet& datanet, std::uint64_t seed) {
  SwitchReport rep;
  constexpr int kN = 8, kInterval = 10;
  // Success / failure pattern with streaks shorter than, equal to and longer
  // than N, plus scores exactly at the zero boundary.
  std::vector<double> scores;
  auto push = [&](int n, double v) { scores.insert(scores.end(), n, v); };
  push(12, 1.0);
  push(7, -1.0);
  push(1, 0.5);
  push(8, -0.5);
  push(2, 2.0);
  push(11, -2.0);
  push(1, 0.0);  // a zero score is a failure
  push(1, 1e-9);
  push(25, 3.0);
  push(9, -1e-9);
  push(5, 1.0);

  TrackController ctl(kN, kInterval);
  int streak = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int frame = static_cast<int>(i) + 1;
    bool want_global = streak >= kN;
    bool got_global = ctl.UseGlobalSearch();
    TrackController::Decision d = ctl.Observe(scores[i]);
    bool success = scores[i] > 0.0;
    UpdateKind want_update = success ? (frame % kInterval == 0 ? UpdateKind::kLongTerm
                                                               : UpdateKind::kNone)
                                     : UpdateKind::kShortTerm;
    streak = success ? 0 : streak + 1;
    rep.mismatches += (want_global != got_global) + (d.success != success) +
                      (d.update != want_update) + (ctl.failure_streak() != streak) +
                      (ctl.frame_index() != frame);
    rep.global_frames += got_global;
    rep.long_updates += d.update == UpdateKind::kLongTerm;
  }
  rep.frames = static_cast<int>(scores.size());

  // The same rule observed on a live tracker through an occlusion.
  SyntheticSpec spec;
  spec.frames = 45;
  spec.occlusion_start = 15;
  spec.occlusion_length = 15;
  spec.teleport_frame = 22;
  SequenceRecord seq = GenerateSequence(spec, seed);
  Rng rng(seed);
  FeatureNetOptions fo;
  FeatureNet net(fo, rng);
  TrackerOptions to;
  to.update_iters = 5;
  Tracker tracker(net, to, &datanet, GlobalProposalOptions{}, seed);
  tracker.Initialize(seq.frames[0], seq.boxes[0]);
  int prev_streak = 0;
  for (int t = 1; t < seq.size(); ++t) {
    TrackResult r = tracker.Track(seq.frames[t]);
    bool want_global = prev_streak >= kN;
    UpdateKind want_update = r.success ? (t % kInterval == 0 ? UpdateKind::kLongTerm
                                                             : UpdateKind::kNone)
                                       : UpdateKind::kShortTerm;
    rep.tracker_mismatches += (r.used_global != want_global) + (r.update != want_update) +
                              (r.success != (r.score > 0.0)) + (r.frame_index != t);
    prev_streak = r.failure_streak;
    ++rep.tracker_frames;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Metric fixture

std::vector<BoundingBox> FixtureGroundTruth() {
  return {{10, 10, 9, 20}, {40, 5, 75, 30}, {5, 50, 30, 12}};
}

std::vector<BoundingBox> FixturePrediction() {
  // Width 3d shifted by d gives intersection 2d and union 4d: IoU 0.5.
  return {{13, 10, 9, 20}, {65, 5, 75, 30}, {15, 50, 30, 12}};
}

FixtureReport EvaluateFixture(const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::string pred = dir + "/pred.txt", gt = dir + "/gt.txt";
  WriteBoxes(pred, FixturePrediction());
  WriteBoxes(gt, FixtureGroundTruth());
  Config cfg;
  cfg.Set("experiment.mode", "eval");
  cfg.Set("experiment.pred", pred);
  cfg.Set("experiment.gt", gt);
  cfg.Set("experiment.out_dir", dir + "/eval");
  ExperimentReport report = RunExperiment(cfg);
  const Table& t = report.tables.back().second;
  // The runner's table is rounded; the exact values come from the same files
  // read back with the runner's formats, and must agree with the table.
  EvalResult r = Evaluate(ReadBoxes(pred, BoxFormat::kXywh), ReadBoxes(gt), 20.0);
  FixtureReport rep{r.pr_at, r.sr_auc};
  if (std::abs(std::stod(t.rows()[0][1]) - r.pr_at) > 1e-3) rep.pr20 = std::nan("");
  if (std::abs(std::stod(t.rows()[0][2]) - r.sr_auc) > 1e-3) rep.sr_auc = std::nan("");
  return rep;
}

}  // namespace mfg::checks

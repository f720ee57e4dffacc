#include <gtest/gtest.h>

#include <cmath>

#include "checks.hpp"
#include "mfgnet/datanet.hpp"
#include "mfgnet/optim.hpp"
#include "mfgnet/synth.hpp"
#include "test_util.hpp"

namespace mfg {
namespace {

using testing::RandomTensor;

// Reverses the last axis of a [C, H, W] map.
Tensor FlipW(const Tensor& f) {
  int c = f.dim(0), h = f.dim(1), w = f.dim(2);
  Tensor out(f.shape());
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) out.at(k, i, j) = f.at(k, i, w - 1 - j);
    }
  }
  return out;
}

// Channel block b of width n.
Tensor Block(const Tensor& f, int b, int n) {
  int plane = f.dim(1) * f.dim(2);
  return Tensor({n, f.dim(1), f.dim(2)},
                std::vector<double>(f.data() + b * n * plane, f.data() + (b + 1) * n * plane));
}

void Randomise(RecurrentCell& c, Rng& rng) {
  c.b_f.mutable_value() = RandomTensor(c.b_f.shape(), rng);
  c.b_r.mutable_value() = RandomTensor(c.b_r.shape(), rng);
}

TEST(RecurrentCellTest, StepOracle) {
  auto r = checks::RecurrentStepOracle(100, 301);
  EXPECT_TRUE(r.pass()) << r.max_err;
}

TEST(RecurrentCellTest, GateSaturationIdentities) {
  auto r = checks::Identities(302);
  EXPECT_LT(r.forget_open, 1e-6);
  EXPECT_LT(r.forget_closed, 1e-6);
  EXPECT_LT(r.reset_open, 1e-6);
  EXPECT_LT(r.reset_closed, 1e-6);
  EXPECT_LT(r.reset_closed_projected, 1e-6);
}

TEST(RecurrentCellTest, ZeroInputZeroOutput) {
  Rng rng(303);
  RecurrentCell cell(4, 3, rng);
  Randomise(cell, rng);
  Tensor out = cell.Sweep(Var(Tensor({4, 5, 5})), 2, false).value();
  for (double v : out.storage()) EXPECT_EQ(v, 0.0);
}

TEST(RecurrentCellTest, SweepMatchesRepeatedSteps) {
  Rng rng(304);
  RecurrentCell cell(3, 2, rng);
  Randomise(cell, rng);
  Tensor map = RandomTensor({3, 4, 5}, rng);
  for (int axis : {1, 2}) {
    for (bool reverse : {false, true}) {
      Tensor got = cell.Sweep(Var(map), axis, reverse).value();
      int len = map.dim(axis), other = map.dim(3 - axis);
      for (int o = 0; o < other; ++o) {
        Var c(Tensor({1, 2}));
        for (int s = 0; s < len; ++s) {
          int t = reverse ? len - 1 - s : s;
          int i = axis == 1 ? t : o, j = axis == 1 ? o : t;
          Tensor x({1, 3});
          for (int d = 0; d < 3; ++d) x[d] = map.at(d, i, j);
          auto [h, c_next] = cell.Step(Var(x), c);
          c = c_next;
          for (int k = 0; k < 2; ++k) EXPECT_NEAR(got.at(k, i, j), h.value()[k], 1e-12);
        }
      }
    }
  }
}

TEST(DatanetTest, SpatialSweepGradient) {
  auto r = checks::SpatialSweepGradCheck(305);
  EXPECT_GT(r.checked, 200);
  EXPECT_LT(r.max_rel, 1e-4);
}

TEST(DatanetTest, TemporalSweepGradient) {
  auto r = checks::TemporalSweepGradCheck(306);
  EXPECT_GT(r.checked, 100);
  EXPECT_LT(r.max_rel, 1e-4);
}

TEST(DatanetTest, RowReversalSwapsLeftAndRight) {
  Rng rng(307);
  Datanet net(DatanetOptions{}, rng);
  Randomise(net.horizontal_cell(), rng);
  Randomise(net.vertical_cell(), rng);
  int d = net.profile().spatial_channels, n = net.profile().sweep_hidden;
  Tensor f = RandomTensor({d, 6, 6}, rng);
  Tensor a = net.SpatialSweep(Var(f)).value();
  Tensor b = net.SpatialSweep(Var(FlipW(f))).value();
  EXPECT_LT(MaxAbsDiff(Block(b, 0, n), FlipW(Block(a, 1, n))), 1e-7);
  EXPECT_LT(MaxAbsDiff(Block(b, 1, n), FlipW(Block(a, 0, n))), 1e-7);
  EXPECT_LT(MaxAbsDiff(Block(b, 2, n), FlipW(Block(a, 2, n))), 1e-7);
  EXPECT_LT(MaxAbsDiff(Block(b, 3, n), FlipW(Block(a, 3, n))), 1e-7);
}

TEST(DatanetTest, TemporalSweepAveragesBothDirections) {
  Rng rng(308);
  Datanet net(DatanetOptions{}, rng);
  RecurrentCell& cell = net.temporal_cell();
  Randomise(cell, rng);
  Tensor f = RandomTensor({kTemporalChannels, 4, 3}, rng);
  Tensor got = net.TemporalSweep(Var(f)).value();
  Tensor want = ops::Scale(ops::Add(cell.Sweep(Var(f), 1, false), cell.Sweep(Var(f), 1, true)),
                           0.5)
                    .value();
  EXPECT_LT(MaxAbsDiff(got, want), 1e-12);
  EXPECT_THROW(net.TemporalSweep(Var(Tensor({4, 3, 3}))), ShapeError);
  EXPECT_THROW(net.SpatialSweep(Var(Tensor({32, 3, 4}))), ShapeError);
}

TEST(DatanetTest, DeskProfileShapes) {
  Rng rng(309);
  Datanet net(DatanetOptions{}, rng);
  NoGradGuard no_grad;
  ClipInput clip;
  for (int t = 0; t < 2; ++t) clip.frames.push_back(testing::RandomFrame(300, 300, rng));
  clip.templ = testing::RandomFrame(300, 300, rng);
  Var feats = net.EncodeClip(clip);
  EXPECT_EQ(feats.shape(), (Shape{3 * 32, 19, 19}));
  Var combined = net.Combine(feats);
  EXPECT_EQ(combined.shape(), (Shape{4 * 8 + 19, 19, 19}));
  Tensor att = net.Predict(clip);
  EXPECT_EQ(att.shape(), (Shape{300, 300}));
  for (double v : att.storage()) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
  clip.frames.pop_back();
  EXPECT_THROW(net.Predict(clip), ShapeError);
}

TEST(DatanetTest, FullProfileShapes) {
  checks::ShapeAudit a = checks::FullProfileAudit(310);
  EXPECT_EQ(a.clip, (Shape{3072, 19, 19}));
  EXPECT_EQ(a.temporal, (Shape{19, 19, 19}));
  EXPECT_EQ(a.combined, (Shape{1043, 19, 19}));
  EXPECT_EQ(a.attention, (Shape{1, 300, 300}));
}

TEST(DatanetTest, TrainingStepsReduceLoss) {
  Rng rng(311);
  Datanet net(DatanetOptions{}, rng);
  SyntheticSpec spec;
  spec.frames = 3;
  SequenceRecord seq = GenerateSequence(spec, 5);
  ClipInput clip = MakeClip(seq, 2, 2);
  Tensor mask = BoxMask(seq.boxes[2], seq.width(), seq.height());
  Adagrad opt(0.01);
  opt.AddGroup(net.Params());
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 6; ++step) {
    opt.ZeroGrad();
    double loss = AttentionTrainingStep(net, clip, mask, 3.0).value()[0];
    if (step == 0) first = loss;
    last = loss;
    opt.Step();
  }
  EXPECT_LT(last, first);
}

TEST(AttentionLossTest, BceOracle) {
  Tensor att({2, 2}, std::vector<double>{0.9, 0.2, 0.0, 1.0});
  Tensor mask({2, 2}, std::vector<double>{1, 0, 0, 1});
  double want = -(std::log(0.9) + std::log(0.8)) / 4;
  EXPECT_NEAR(AttentionBce(att, mask), want, 1e-10);
  Tensor wrong({2, 2}, std::vector<double>{0, 1, 1, 0});
  EXPECT_NEAR(AttentionBce(wrong, mask), -std::log(1e-12), 1e-3);  // 1 - eps rounds in double
  EXPECT_THROW(AttentionBce(att, Tensor({3})), ShapeError);
}

TEST(BoxMaskTest, CoversScaledBox) {
  Tensor full = BoxMask({0, 0, 120, 60}, 120, 60, 30);
  EXPECT_DOUBLE_EQ(full.Sum(), 900.0);
  // Left half of a 100 x 100 frame on a 10 x 10 mask.
  Tensor half = BoxMask({0, 0, 50, 100}, 100, 100, 10);
  EXPECT_DOUBLE_EQ(half.Sum(), 50.0);
  EXPECT_EQ(half.at(0, 4), 1.0);
  EXPECT_EQ(half.at(0, 5), 0.0);
  EXPECT_DOUBLE_EQ(BoxMask({200, 200, 10, 10}, 100, 100, 10).Sum(), 0.0);
}

TEST(GlobalProposalTest, CountAndBounds) {
  Rng rng(312);
  Tensor att = RandomTensor({50, 50}, rng, 0, 1);
  GlobalProposalOptions o;
  o.count = 37;
  GlobalProposals p = SampleGlobalProposals(att, {10, 10, 20, 16}, 160, 120, o, rng);
  EXPECT_EQ(p.boxes.size(), 37u);
  EXPECT_FALSE(p.fallback);
  EXPECT_LE(static_cast<int>(p.peaks.size()), o.max_peaks);
  for (const BoundingBox& b : p.boxes) EXPECT_TRUE(InsideImage(b, 160, 120)) << b.x << "," << b.y;
}

TEST(GlobalProposalTest, PeaksFirstUnjittered) {
  Rng rng(313);
  Tensor att({100, 100});
  att.at(20, 30) = 1.0;
  att.at(70, 80) = 0.8;
  att.at(21, 31) = 0.9;  // suppressed by the first peak
  GlobalProposalOptions o;
  o.count = 10;
  GlobalProposals p = SampleGlobalProposals(att, {0, 0, 20, 20}, 200, 200, o, rng);
  ASSERT_EQ(p.peaks.size(), 2u);
  EXPECT_EQ(p.peaks[0], (std::pair<int, int>{20, 30}));
  EXPECT_EQ(p.peaks[1], (std::pair<int, int>{70, 80}));
  EXPECT_DOUBLE_EQ(p.boxes[0].cx(), 61.0);
  EXPECT_DOUBLE_EQ(p.boxes[0].cy(), 41.0);
  EXPECT_DOUBLE_EQ(p.boxes[0].w, 20.0);
  EXPECT_DOUBLE_EQ(p.boxes[1].cx(), 161.0);
  // Later boxes cycle the peaks with jittered size.
  EXPECT_DOUBLE_EQ(p.boxes[2].cx(), 61.0);
  EXPECT_LE(std::abs(p.boxes[2].w / 20.0 - 1.0), o.scale_jitter + 1e-12);
}

TEST(GlobalProposalTest, TiesBreakInRasterOrder) {
  Rng rng(314);
  Tensor att({10, 10});
  att.at(7, 2) = 0.5;
  att.at(3, 8) = 0.5;
  GlobalProposalOptions o;
  o.max_peaks = 1;
  GlobalProposals p = SampleGlobalProposals(att, {0, 0, 10, 10}, 100, 100, o, rng);
  ASSERT_EQ(p.peaks.size(), 1u);
  EXPECT_EQ(p.peaks[0], (std::pair<int, int>{3, 8}));
}

TEST(GlobalProposalTest, ZeroMapFallsBackToGrid) {
  Rng rng(315);
  GlobalProposalOptions o;
  o.count = 16;
  GlobalProposals p = SampleGlobalProposals(Tensor({20, 20}), {0, 0, 10, 10}, 80, 80, o, rng);
  EXPECT_TRUE(p.fallback);
  ASSERT_EQ(p.boxes.size(), 16u);
  EXPECT_DOUBLE_EQ(p.boxes[0].cx(), 10.0);
  EXPECT_DOUBLE_EQ(p.boxes[15].cx(), 70.0);
  EXPECT_DOUBLE_EQ(p.boxes[15].cy(), 70.0);
  EXPECT_THROW(SampleGlobalProposals(Tensor({20, 20}), {0, 0, 0, 10}, 80, 80, o, rng), ShapeError);
}

TEST(AttentionCentroidTest, MassCentre) {
  Tensor att({4, 4});
  att.at(1, 2) = 1.0;
  att.at(3, 2) = 1.0;
  auto [x, y] = AttentionCentroid(att);
  EXPECT_DOUBLE_EQ(x, 2.5);
  EXPECT_DOUBLE_EQ(y, 2.5);
  auto [cx, cy] = AttentionCentroid(Tensor({4, 6}));
  EXPECT_DOUBLE_EQ(cx, 3.0);
  EXPECT_DOUBLE_EQ(cy, 2.0);
}

}  // namespace
}  // namespace mfg

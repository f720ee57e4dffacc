#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "checks.hpp"
#include "mfgnet/attention.hpp"
#include "mfgnet/config.hpp"
#include "test_util.hpp"

namespace mfg {
namespace {

using testing::RandomTensor;

Cbam MakeCbam(int channels, Rng& rng) {
  CbamOptions o;
  o.reduction = 2;
  o.spatial_kernel = 3;
  return Cbam(channels, o, rng);
}

TEST(CbamGradTest, FullModule) {
  auto r = checks::CbamGradCheck(201);
  EXPECT_GT(r.checked, 100);
  EXPECT_LT(r.max_rel, 1e-4);
}

TEST(CbamTest, GatesLieInUnitInterval) {
  Rng rng(202);
  Cbam cbam = MakeCbam(8, rng);
  Var f(RandomTensor({8, 6, 7}, rng, -3, 3));
  Tensor ca = cbam.ChannelAttention(f).value(), sa = cbam.SpatialAttention(f).value();
  EXPECT_EQ(ca.shape(), (Shape{8}));
  EXPECT_EQ(sa.shape(), (Shape{1, 6, 7}));
  for (double v : ca.storage()) EXPECT_TRUE(v > 0.0 && v < 1.0);
  for (double v : sa.storage()) EXPECT_TRUE(v > 0.0 && v < 1.0);
}

TEST(CbamTest, SpatiallyConstantInputPoolsIdentically) {
  // Max and mean pooling coincide, so the gate is sigmoid(2 * mlp(v)).
  Rng rng(203);
  Cbam cbam = MakeCbam(6, rng);
  Tensor v = RandomTensor({6}, rng);
  Tensor f({6, 4, 4});
  for (int c = 0; c < 6; ++c) {
    for (int p = 0; p < 16; ++p) f[c * 16 + p] = v[c];
  }
  Var row(v.Reshaped({1, 6}));
  Tensor mlp = cbam.fc2().Forward(ops::Relu(cbam.fc1().Forward(row))).value();
  Tensor ca = cbam.ChannelAttention(Var(f)).value();
  for (int c = 0; c < 6; ++c) EXPECT_NEAR(ca[c], 1.0 / (1.0 + std::exp(-2 * mlp[c])), 1e-12);
}

TEST(CbamTest, ChannelGateIgnoresPixelOrder) {
  Rng rng(204);
  Cbam cbam = MakeCbam(8, rng);
  Tensor f = RandomTensor({8, 5, 5}, rng);
  std::vector<int> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor g(f.shape());
  for (int c = 0; c < 8; ++c) {
    for (int p = 0; p < 25; ++p) g[c * 25 + perm[p]] = f[c * 25 + p];
  }
  EXPECT_LT(MaxAbsDiff(cbam.ChannelAttention(Var(f)).value(),
                       cbam.ChannelAttention(Var(g)).value()),
            1e-9);
}

TEST(CbamTest, SpatialGateIgnoresChannelOrder) {
  Rng rng(205);
  Cbam cbam = MakeCbam(8, rng);
  Tensor f = RandomTensor({8, 5, 6}, rng);
  std::vector<int> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor g(f.shape());
  for (int c = 0; c < 8; ++c) {
    for (int p = 0; p < 30; ++p) g[perm[c] * 30 + p] = f[c * 30 + p];
  }
  EXPECT_LT(MaxAbsDiff(cbam.SpatialAttention(Var(f)).value(),
                       cbam.SpatialAttention(Var(g)).value()),
            1e-9);
}

TEST(CbamTest, ZeroInZeroOut) {
  Rng rng(206);
  Cbam cbam = MakeCbam(8, rng);
  Tensor out = cbam.Apply(Var(Tensor({8, 4, 5}))).value();
  for (double v : out.storage()) EXPECT_EQ(v, 0.0);
}

TEST(CbamTest, GatingOnlyShrinks) {
  Rng rng(207);
  Cbam cbam = MakeCbam(8, rng);
  for (int trial = 0; trial < 20; ++trial) {
    Var f(RandomTensor({8, 5, 5}, rng, -4, 4));
    Tensor f1 = ops::ChannelGate(f, cbam.ChannelAttention(f)).value();
    Tensor out = cbam.Apply(f).value();
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_LE(std::abs(out[i]), std::abs(f1[i]) + 1e-15);
      EXPECT_LE(std::abs(f1[i]), std::abs(f.value()[i]) + 1e-15);
      EXPECT_GE(out[i] * f.value()[i], 0.0);  // signs are preserved
    }
  }
}

TEST(CbamTest, HiddenWidthAndConfigValidation) {
  Rng rng(208);
  CbamOptions o;
  EXPECT_EQ(Cbam(512, o, rng).hidden(), 32);
  EXPECT_EQ(Cbam(8, o, rng).hidden(), 4);
  EXPECT_THROW(MakeCbam(8, rng).ChannelAttention(Var(Tensor({4, 3, 3}))), ShapeError);
  Config cfg;
  cfg.Set("cbam.spatial_kernel", "4");
  EXPECT_THROW(CbamOptions::FromConfig(cfg), ConfigError);
  cfg.Set("cbam.spatial_kernel", "7");
  cfg.Set("cbam.reduction", "0");
  EXPECT_THROW(CbamOptions::FromConfig(cfg), ConfigError);
}

}  // namespace
}  // namespace mfg

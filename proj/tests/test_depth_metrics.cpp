#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nightsim/depth_metrics.hpp"
#include "nightsim/error.hpp"
#include "nightsim/random.hpp"

namespace nightsim::metrics {
namespace {

DepthMap random_depth(int w, int h, std::uint64_t seed, double lo = 1.0,
                      double hi = 50.0) {
  RandomStream s(seed);
  DepthMap d(w, h);
  for (float& v : d.data()) v = static_cast<float>(lo + (hi - lo) * s.next_double());
  return d;
}

DepthMap scaled(const DepthMap& d, double c) {
  DepthMap out = d;
  for (float& v : out.data()) v = static_cast<float>(c * v);
  return out;
}

EvalOptions no_median() {
  EvalOptions o;
  o.median_scale = false;
  o.max_depth = 1000.0;
  return o;
}

TEST(EvaluateTest, PerfectPrediction) {
  const DepthMap gt = random_depth(20, 10, 1);
  const MetricReport r = evaluate(gt, SparseDepth::from_plane(gt));
  EXPECT_NEAR(r.abs_rel, 0.0, 1e-12);
  EXPECT_NEAR(r.sq_rel, 0.0, 1e-12);
  EXPECT_NEAR(r.rmse, 0.0, 1e-12);
  EXPECT_NEAR(r.rmse_log, 0.0, 1e-12);
  EXPECT_EQ(r.delta1, 1.0);
  EXPECT_EQ(r.delta2, 1.0);
  EXPECT_EQ(r.delta3, 1.0);
  EXPECT_EQ(r.valid_pixel_count, 200u);
}

TEST(EvaluateTest, DoubledPrediction) {
  const DepthMap gt = random_depth(20, 10, 2);
  const MetricReport r = evaluate(scaled(gt, 2.0), SparseDepth::from_plane(gt),
                                  no_median());
  EXPECT_NEAR(r.abs_rel, 1.0, 1e-6);
  EXPECT_NEAR(r.rmse_log, std::log(2.0), 1e-9);
  EXPECT_EQ(r.delta1, 0.0);
  EXPECT_EQ(r.delta2, 0.0);
  EXPECT_EQ(r.delta3, 0.0);
}

TEST(EvaluateTest, MedianScalingRemovesUniformScale) {
  const DepthMap gt = random_depth(16, 16, 3, 1.0, 40.0);
  for (double c : {0.01, 0.37, 5.0}) {
    const MetricReport r =
        evaluate(scaled(gt, c), SparseDepth::from_plane(gt));
    EXPECT_NEAR(r.abs_rel, 0.0, 1e-6) << c;
    EXPECT_NEAR(r.rmse, 0.0, 1e-4) << c;
    EXPECT_EQ(r.delta1, 1.0) << c;
    EXPECT_NEAR(r.median_ratio, 1.0 / c, 1e-5 / c);
  }
}

TEST(EvaluateTest, ClosedFormOnTwoPixels) {
  DepthMap gt(2, 1), pred(2, 1);
  gt[0] = 10.f;
  gt[1] = 20.f;
  pred[0] = 12.f;
  pred[1] = 15.f;
  const MetricReport r =
      evaluate(pred, SparseDepth::from_plane(gt), no_median());
  EXPECT_NEAR(r.abs_rel, 0.5 * (0.2 + 0.25), 1e-12);
  EXPECT_NEAR(r.sq_rel, 0.5 * (4.0 / 10 + 25.0 / 20), 1e-12);
  EXPECT_NEAR(r.rmse, std::sqrt(0.5 * (4 + 25)), 1e-12);
  const double l0 = std::log(12.0 / 10), l1 = std::log(15.0 / 20);
  EXPECT_NEAR(r.rmse_log, std::sqrt(0.5 * (l0 * l0 + l1 * l1)), 1e-7);
  // Ratios 1.2 and 1.333: only the first is below 1.25.
  EXPECT_EQ(r.delta1, 0.5);
  EXPECT_EQ(r.delta2, 1.0);
}

TEST(EvaluateTest, DeltaThresholdsAreStrict) {
  DepthMap gt(3, 1, 10.f), pred(3, 1);
  pred[0] = 12.5f;   // exactly 1.25
  pred[1] = 15.625f; // exactly 1.25^2
  pred[2] = 10.f;
  const MetricReport r =
      evaluate(pred, SparseDepth::from_plane(gt), no_median());
  EXPECT_NEAR(r.delta1, 1.0 / 3, 1e-12);
  EXPECT_NEAR(r.delta2, 2.0 / 3, 1e-12);
  EXPECT_EQ(r.delta3, 1.0);
}

TEST(EvaluateTest, DeltasNested) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const DepthMap gt = random_depth(12, 9, 100 + seed);
    const DepthMap pred = random_depth(12, 9, 200 + seed);
    const MetricReport r = evaluate(pred, SparseDepth::from_plane(gt));
    ASSERT_LE(r.delta1, r.delta2);
    ASSERT_LE(r.delta2, r.delta3);
    ASSERT_GE(r.delta1, 0.0);
    ASSERT_LE(r.delta3, 1.0);
  }
}

TEST(EvaluateTest, PixelOrderDoesNotMatter) {
  const DepthMap gt = random_depth(10, 10, 5);
  const DepthMap pred = random_depth(10, 10, 6);
  std::vector<std::size_t> perm(100);
  for (std::size_t i = 0; i < 100; ++i) perm[i] = (i * 37) % 100;
  DepthMap gt_p(10, 10), pred_p(10, 10);
  for (std::size_t i = 0; i < 100; ++i) {
    gt_p[i] = gt[perm[i]];
    pred_p[i] = pred[perm[i]];
  }
  const MetricReport a = evaluate(pred, SparseDepth::from_plane(gt));
  const MetricReport b = evaluate(pred_p, SparseDepth::from_plane(gt_p));
  EXPECT_NEAR(a.abs_rel, b.abs_rel, 1e-12);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-9);
  EXPECT_EQ(a.delta1, b.delta1);
}

TEST(EvaluateTest, OutlierGrowsSquaredErrorsSuperlinearly) {
  const DepthMap gt(10, 10, 10.f);
  DepthMap pred = gt;
  pred[17] = 14.f;
  const double sq1 = evaluate(pred, SparseDepth::from_plane(gt), no_median()).sq_rel;
  pred[17] = 18.f;
  const double sq2 = evaluate(pred, SparseDepth::from_plane(gt), no_median()).sq_rel;
  EXPECT_GT(sq2, 2.0 * sq1);
}

TEST(EvaluateTest, RangeAndMaskHandling) {
  DepthMap gt(4, 1), pred(4, 1, 5.f);
  gt[0] = 5.f;
  gt[1] = 80.f;   // beyond max_depth
  gt[2] = 0.f;    // invalid
  gt[3] = 5.f;
  pred[3] = 100.f;
  EvalOptions o;
  o.median_scale = false;
  const MetricReport clamp = evaluate(pred, SparseDepth::from_plane(gt), o);
  EXPECT_EQ(clamp.valid_pixel_count, 2u);
  EXPECT_NEAR(clamp.abs_rel, 0.5 * (60.0 - 5.0) / 5.0, 1e-9);
  o.clip = ClipMode::kMask;
  const MetricReport mask = evaluate(pred, SparseDepth::from_plane(gt), o);
  EXPECT_EQ(mask.valid_pixel_count, 1u);
  EXPECT_NEAR(mask.abs_rel, 0.0, 1e-12);
}

TEST(EvaluateTest, Errors) {
  const DepthMap gt(3, 3, 100.f);
  EXPECT_THROW(evaluate(gt, SparseDepth::from_plane(gt)), NoValidPixelsError);
  const DepthMap ok(3, 3, 10.f);
  DepthMap bad = ok;
  bad[4] = -1.f;
  EXPECT_THROW(evaluate(bad, SparseDepth::from_plane(ok)), NonpositiveDepthError);
  EvalOptions o;
  o.min_depth = 5.0;
  o.max_depth = 1.0;
  EXPECT_THROW(o.validate(), ConfigError);
}

TEST(PrecropTest, DatasetWindows) {
  const CropWindow n = crop_window(Crop::kNuScenes);
  EXPECT_EQ(n.width, 1536);
  EXPECT_EQ(n.height, 768);
  EXPECT_EQ(n.offset_x, 32);
  EXPECT_EQ(n.offset_y, 66);
  const CropWindow r = crop_window(Crop::kRobotCar);
  EXPECT_EQ(r.width, 1280);
  EXPECT_EQ(r.height, 640);
  EXPECT_EQ(r.offset_x, 0);
  EXPECT_EQ(r.offset_y, 160);
}

TEST(PrecropTest, CropsCenteredAndShiftsIntrinsics) {
  Plane p(1600, 900);
  for (int y = 0; y < 900; ++y) {
    for (int x = 0; x < 1600; ++x) p.at(x, y) = static_cast<float>(y * 1600 + x);
  }
  const Plane c = precrop(p, Crop::kNuScenes);
  ASSERT_EQ(c.width(), 1536);
  ASSERT_EQ(c.height(), 768);
  EXPECT_EQ(c.at(0, 0), p.at(32, 66));
  EXPECT_EQ(c.at(1535, 767), p.at(1567, 833));
  const Image img(1280, 960, 0.5f);
  const Image ci = precrop(img, Crop::kRobotCar);
  EXPECT_EQ(ci.width(), 1280);
  EXPECT_EQ(ci.height(), 640);
  const Intrinsics k = precrop(Intrinsics{1000, 1000, 800, 450}, Crop::kNuScenes);
  EXPECT_EQ(k.cx, 768);
  EXPECT_EQ(k.cy, 384);
  EXPECT_EQ(k.fx, 1000);
  EXPECT_EQ(precrop(img, Crop::kNone), img);
}

TEST(PrecropTest, WrongSizeNamesExpectedDimensions) {
  try {
    precrop(Plane(100, 100), Crop::kNuScenes);
    FAIL() << "expected SizeError";
  } catch (const SizeError& e) {
    EXPECT_NE(std::string(e.what()).find("1600x900"), std::string::npos);
  }
}

TEST(AggregateTest, PerFrameMean) {
  MetricReport a, b;
  a.abs_rel = 0.1;
  a.delta1 = 1.0;
  a.valid_pixel_count = 10;
  b.abs_rel = 0.3;
  b.delta1 = 0.5;
  b.valid_pixel_count = 1000;
  const std::vector<MetricReport> frames = {a, b};
  const MetricReport m = aggregate(frames);
  EXPECT_NEAR(m.abs_rel, 0.2, 1e-12);
  EXPECT_NEAR(m.delta1, 0.75, 1e-12);
  EXPECT_EQ(m.valid_pixel_count, 1010u);
}

TEST(NamesTest, RoundTrip) {
  for (Crop c : {Crop::kNone, Crop::kNuScenes, Crop::kRobotCar}) {
    EXPECT_EQ(crop_from_string(to_string(c)), c);
  }
  for (ClipMode m : {ClipMode::kClamp, ClipMode::kMask}) {
    EXPECT_EQ(clip_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(crop_from_string("kitti"), ConfigError);
}

}  // namespace
}  // namespace nightsim::metrics

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "nightsim/error.hpp"
#include "nightsim/image_io.hpp"
#include "nightsim/light_bank.hpp"

namespace nightsim::lights {
namespace {

namespace fs = std::filesystem;

double mean_luminance(const Image& rgb) {
  double sum = 0;
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      sum += 0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) +
             0.114 * rgb.at(x, y, 2);
    }
  }
  return sum / rgb.pixel_count();
}

// Flare occupying the central part of a larger frame.
LightSourceImage centered_flare(int frame, int flare, std::uint64_t seed) {
  RandomStream s(seed);
  const LightSourceImage small = synthesize_flare(s, flare);
  LightSourceImage out{Image(frame, frame, 0.f), Plane(frame, frame, 0.f),
                       SourceOrigin::kProcedural};
  const int off = (frame - flare) / 2;
  for (int y = 0; y < flare; ++y) {
    for (int x = 0; x < flare; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(x + off, y + off, c) = small.rgb.at(x, y, c);
      }
      out.alpha.at(x + off, y + off) = small.alpha.at(x, y);
    }
  }
  return out;
}

class LightBankDirTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nightsim_bank_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

TEST_F(LightBankDirTest, SkipsCorruptFilesWithWarning) {
  RandomStream s(1);
  const LightSourceImage f = synthesize_flare(s, 32);
  io::write_png_rgba(dir_ / "a_good.png", f.rgb, f.alpha, 8, true);
  std::ofstream(dir_ / "b_bad.png") << "garbage";
  const LightBank bank = LightBank::load(dir_);
  EXPECT_EQ(bank.size(), 1u);
  EXPECT_EQ(bank.warnings().size(), 1u);
  const LightSourceImage back = bank.get(0);
  EXPECT_EQ(back.width(), 32);
  EXPECT_GT(back.total_alpha(), 0.0);
}

TEST_F(LightBankDirTest, EmptyDirectoryIsAnError) {
  EXPECT_THROW(LightBank::load(dir_), EmptyBankError);
  std::ofstream(dir_ / "bad.png") << "garbage";
  EXPECT_THROW(LightBank::load(dir_), EmptyBankError);
  EXPECT_THROW(LightBank::load(dir_ / "missing"), IoError);
}

TEST_F(LightBankDirTest, RgbOnlyFileGetsLuminanceAlpha) {
  Image rgb(16, 16, 0.f);
  rgb.at(8, 8, 0) = rgb.at(8, 8, 1) = rgb.at(8, 8, 2) = 1.f;
  io::write_png(dir_ / "dot.png", rgb, 8, true);
  const LightSourceImage img = LightBank::load(dir_).get(0);
  EXPECT_FLOAT_EQ(img.alpha.at(8, 8), 1.f);
  EXPECT_FLOAT_EQ(img.alpha.at(0, 0), 0.f);
}

TEST(SynthesizeFlareTest, DeterministicAndBright) {
  RandomStream a(9), b(9);
  const LightSourceImage fa = synthesize_flare(a, 64);
  const LightSourceImage fb = synthesize_flare(b, 64);
  EXPECT_EQ(fa.rgb, fb.rgb);
  EXPECT_GT(mean_luminance(fa.rgb), 0.0);
  // Outside the support disc nothing is lit.
  EXPECT_EQ(fa.rgb.at(0, 0, 0), 0.f);
  EXPECT_EQ(fa.alpha.at(63, 63), 0.f);
  EXPECT_THROW(synthesize_flare(a, 8), SizeError);
}

TEST(SynthesizeFlareTest, FrozenMeanLuminance) {
  RandomStream s = RandomStream(7).child("flare");
  const LightSourceImage f = synthesize_flare(s, 64);
  EXPECT_NEAR(mean_luminance(f.rgb), 0.012819059112763726, 1e-9);
}

TEST(AugmentationTest, RotatingByPiTwiceRestores) {
  const LightSourceImage f = centered_flare(96, 40, 3);
  const LightSourceImage back =
      rotate(rotate(f, std::numbers::pi), std::numbers::pi);
  double diff = 0;
  for (std::size_t i = 0; i < f.rgb.size(); ++i) {
    diff += std::abs(back.rgb[i] - f.rgb[i]);
  }
  EXPECT_LT(diff / f.rgb.size(), 1e-2);
}

TEST(AugmentationTest, GeometricStagesKeepAlphaMass) {
  const LightSourceImage f = centered_flare(128, 56, 4);
  const double mass = f.total_alpha();
  for (double angle : {0.3, 1.1, 2.5, 4.0, 5.9}) {
    EXPECT_NEAR(rotate(f, angle).total_alpha(), mass, 0.02 * mass) << angle;
  }
  EXPECT_NEAR(flip_horizontal(f).total_alpha(), mass, 1e-9 * mass);
}

TEST(AugmentationTest, BrightnessIsLinear) {
  const LightSourceImage f = centered_flare(48, 24, 5);
  const Image twice = scale_brightness(f.rgb, 2.0);
  for (std::size_t i = 0; i < f.rgb.size(); ++i) {
    EXPECT_EQ(twice[i], 2.f * f.rgb[i]);
  }
}

TEST(AugmentationTest, AlphaMovesOnlyWithGeometry) {
  const LightSourceImage f = centered_flare(48, 24, 6);
  AugmentationParams p;
  p.brightness = 2.5;
  p.contrast = 1.2;
  p.saturation = 0.8;
  p.blur_sigma = 2.0;
  EXPECT_EQ(apply_augmentation(f, p).alpha, f.alpha);
}

TEST(AugmentationTest, IdentityParamsNearlyPreserve) {
  const LightSourceImage f = centered_flare(48, 24, 8);
  AugmentationParams p;
  p.blur_sigma = 0.1;  // smallest blur in the default range
  const LightSourceImage out = apply_augmentation(f, p);
  double diff = 0;
  for (std::size_t i = 0; i < f.rgb.size(); ++i) {
    diff += std::abs(out.rgb[i] - f.rgb[i]);
  }
  EXPECT_LT(diff / f.rgb.size(), 1e-4);
}

TEST(AugmentationTest, SaturationZeroGivesGray) {
  Image rgb(1, 1);
  rgb.at(0, 0, 0) = 0.8f;
  rgb.at(0, 0, 1) = 0.2f;
  rgb.at(0, 0, 2) = 0.1f;
  const Image gray = adjust_saturation(rgb, 0.0);
  const float luma = 0.299f * 0.8f + 0.587f * 0.2f + 0.114f * 0.1f;
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(gray.at(0, 0, c), luma, 1e-6);
}

TEST(AugmentationTest, OutOfRangeParamsRejected) {
  AugmentationParams p;
  p.brightness = -1.0;
  EXPECT_THROW(p.validate(), RangeError);
  p = {};
  p.blur_sigma = -0.5;
  EXPECT_THROW(p.validate(), RangeError);
}

TEST(AugmentationTest, SampledParamsStayInRanges) {
  RandomStream s(12);
  const AugmentationRanges r;
  for (int i = 0; i < 500; ++i) {
    const AugmentationParams p = sample_augmentation(s, r);
    EXPECT_TRUE(r.rotation.contains(p.rotation));
    EXPECT_TRUE(r.brightness.contains(p.brightness));
    EXPECT_TRUE(r.contrast.contains(p.contrast));
    EXPECT_TRUE(r.saturation.contains(p.saturation));
    EXPECT_TRUE(r.blur_sigma.contains(p.blur_sigma));
  }
}

TEST(StandardSourceTest, ResizedToLargerTargetSide) {
  const LightBank empty;
  RandomStream s(13);
  const Image target(80, 40);
  const LightSourceImage src = sample_standard_source(empty, s, target);
  EXPECT_EQ(src.width(), 80);
  EXPECT_EQ(src.height(), 80);
  RandomStream s2(13);
  EXPECT_THROW(sample_standard_source(empty, s2, target, {}, false),
               EmptyBankError);
}

TEST(StandardSourceTest, ChoiceRealizesIdentically) {
  RandomStream a(21);
  const LightSourceImage f = synthesize_flare(a, 32);
  const LightBank bank = LightBank::from_images({f, f});
  RandomStream s(5);
  const SourceChoice choice =
      choose_standard_source(bank, s, 24, 24, {}, true);
  EXPECT_EQ(choice.origin, SourceOrigin::kBankFile);
  EXPECT_LT(choice.bank_index, 2u);
  EXPECT_EQ(realize_source(bank, choice).rgb,
            realize_source(bank, choice).rgb);
}

TEST(StandardSourceTest, TinyTargetsStillGetAFlare) {
  const LightBank empty;
  RandomStream s(14);
  const LightSourceImage src = sample_standard_source(empty, s, Image(8, 6));
  EXPECT_EQ(src.width(), 8);
  EXPECT_GT(src.total_alpha(), 0.0);
}

}  // namespace
}  // namespace nightsim::lights

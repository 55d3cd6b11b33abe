#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nightsim/error.hpp"
#include "nightsim/image_io.hpp"

namespace nightsim {
namespace {

namespace fs = std::filesystem;

class ImageIoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nightsim_io_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

Image gradient(int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<float>(x) / (w - 1);
      img.at(x, y, 1) = static_cast<float>(y) / (h - 1);
      img.at(x, y, 2) = 0.5f;
    }
  }
  return img;
}

TEST_F(ImageIoTest, PngRoundTripWithinQuantization) {
  const Image img = gradient(17, 9);
  const fs::path p = dir_ / "a.png";
  io::write_png(p, img);
  const io::LoadedImage back = io::read_png(p);
  ASSERT_TRUE(back.image.same_shape(img));
  EXPECT_EQ(back.clamped, 0u);
  for (std::size_t i = 0; i < img.size(); ++i) {
    // One 8-bit step in the encoded domain, mapped back through the gamma.
    const double enc = std::pow(img[i], 1 / 2.2);
    const double tol = std::pow(std::min(1.0, enc + 1.0 / 255), 2.2) -
                       std::pow(std::max(0.0, enc - 1.0 / 255), 2.2);
    EXPECT_NEAR(back.image[i], img[i], tol);
  }
}

TEST_F(ImageIoTest, DecodeAppliesGammaUnlessLinear) {
  Image img(1, 1, 0.5f);
  const fs::path p = dir_ / "g.png";
  io::write_png(p, img, 16, /*assume_linear=*/true);
  EXPECT_NEAR(io::read_png(p, {true}).image[0], 0.5, 1e-4);
  EXPECT_NEAR(io::read_png(p).image[0], std::pow(0.5, 2.2), 1e-4);
}

TEST_F(ImageIoTest, EightBitPngRoundTripsExactly) {
  const Image img = gradient(32, 4);
  const fs::path a = dir_ / "a.png";
  const fs::path b = dir_ / "b.png";
  io::write_png(a, img);
  io::write_png(b, io::read_png(a).image);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
}

TEST_F(ImageIoTest, PfmRoundTripIsExact) {
  Plane p(5, 3);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.1f * i + 1.f;
  io::write_pfm(dir_ / "d.pfm", p);
  const Plane back = io::read_pfm_plane(dir_ / "d.pfm");
  EXPECT_EQ(back, p);
}

TEST_F(ImageIoTest, PfmImageOutOfRangeIsClampedAndCounted) {
  Image img(2, 2, 0.5f);
  img[0] = 1.0000001f;
  img[1] = 1.5f;
  io::write_pfm(dir_ / "c.pfm", img);
  const io::LoadedImage back = io::read_pfm_image(dir_ / "c.pfm");
  EXPECT_EQ(back.clamped, 2u);
  EXPECT_EQ(back.image[1], 1.f);
}

TEST_F(ImageIoTest, DepthFromPfm) {
  Plane depth(3, 2, 2.5f);
  io::write_pfm(dir_ / "depth.pfm", depth);
  const DepthMap d = io::load_depth(dir_ / "depth.pfm", 1.0);
  EXPECT_EQ(d.at(2, 1), 2.5f);
  EXPECT_EQ(d.unit(), DepthUnit::kUnscaled);
}

TEST_F(ImageIoTest, CorruptFileRaisesIoError) {
  std::ofstream(dir_ / "bad.png") << "not a png";
  EXPECT_THROW(io::read_png(dir_ / "bad.png"), IoError);
  EXPECT_THROW(io::probe_png(dir_ / "bad.png"), IoError);
  EXPECT_THROW(io::read_png(dir_ / "missing.png"), IoError);
}

TEST_F(ImageIoTest, RgbaAlphaIsLinear) {
  Image rgb(2, 1, 0.25f);
  Plane alpha(2, 1, 0.5f);
  io::write_png_rgba(dir_ / "r.png", rgb, alpha, 16);
  const io::LoadedRgba back = io::read_png_rgba(dir_ / "r.png");
  EXPECT_TRUE(back.has_alpha);
  EXPECT_NEAR(back.alpha[0], 0.5, 1e-4);
  EXPECT_NEAR(back.rgb[0], 0.25, 1e-4);
}

}  // namespace
}  // namespace nightsim

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "lookdev/image.hpp"
#include "lookdev/image_io.hpp"
#include "test_support.hpp"

using namespace lookdev;
using lookdev::testing::TempDir;

namespace {

ImageF checkerboard(int w, int h) {
  ImageF img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = (x + y) % 2 == 0 ? 0.0 : 1.0;
  return img;
}

}  // namespace

TEST(ImageF, RejectsNonPositiveDimensions) {
  EXPECT_THROW(ImageF(0, 3), Error);
  EXPECT_THROW(ImageF(3, -1), Error);
  ImageF img(4, 3);
  EXPECT_EQ(img.size(), 4u * 3u * 3u);
}

// ---- I/O ------------------------------------------------------------------

TEST(ImageIo, WhitePngLoadsAsOnes) {
  TempDir dir;
  save_image(ImageF(2, 2, 1.0), dir / "white.png");
  const ImageF img = load_image(dir / "white.png");
  ASSERT_EQ(img.width(), 2);
  for (double v : img.data()) EXPECT_EQ(v, 1.0);
}

TEST(ImageIo, EightBitCodesMapLinearly) {
  TempDir dir;
  // 1x1 P6 with bytes (0,128,255)
  lookdev::testing::write_bytes(dir / "px.ppm", {'P', '6', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', 0, 128, 255});
  const ImageF img = load_image(dir / "px.ppm");
  EXPECT_EQ(img.at(0, 0, 0), 0.0);
  EXPECT_EQ(img.at(0, 0, 1), 128.0 / 255.0);
  EXPECT_EQ(img.at(0, 0, 2), 1.0);
}

TEST(ImageIo, ErrorsAreDistinct) {
  TempDir dir;
  try {
    load_image(dir / "nope.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_file);
  }

  lookdev::testing::write_bytes(dir / "x.bmp", {'B', 'M', 1, 2, 3, 4});
  try {
    load_image(dir / "x.bmp");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsupported_format);
  }

  save_image(lookdev::testing::fixture_content(16), dir / "full.png");
  auto bytes = lookdev::testing::file_bytes(dir / "full.png");
  bytes.resize(bytes.size() / 2);
  lookdev::testing::write_bytes(dir / "trunc.png", bytes);
  try {
    load_image(dir / "trunc.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::corrupt_data);
  }

  save_image(lookdev::testing::fixture_content(16), dir / "full.ppm");
  bytes = lookdev::testing::file_bytes(dir / "full.ppm");
  bytes.resize(bytes.size() - 5);
  lookdev::testing::write_bytes(dir / "trunc.ppm", bytes);
  try {
    load_image(dir / "trunc.ppm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::corrupt_data);
  }
}

TEST(ImageIo, UnwritablePath) {
  TempDir dir;
  try {
    save_image(ImageF(2, 2), dir / "no_such_dir" / "x.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unwritable_path);
  }
  EXPECT_THROW(save_image(ImageF(2, 2), dir / "x.tiff"), Error);
  EXPECT_THROW(save_image(ImageF(2, 2), dir / "x.ppm", 16), Error);
}

TEST(ImageIo, ZeroImageRoundTripsExactly) {
  TempDir dir;
  save_image(ImageF(3, 2, 0.0), dir / "z.png", 8);
  const ImageF got = load_image(dir / "z.png");
  for (double v : got.data()) EXPECT_EQ(v, 0.0);
  save_image(ImageF(3, 2, 0.0), dir / "z.ppm", 8);
  const auto bytes = lookdev::testing::file_bytes(dir / "z.ppm");
  ASSERT_GE(bytes.size(), 18u);
  EXPECT_TRUE(std::all_of(bytes.end() - 18, bytes.end(), [](unsigned char b) { return b == 0; }));
}

TEST(ImageIo, HalfQuantizesToCode128) {
  TempDir dir;
  save_image(ImageF(1, 1, 0.5), dir / "h.ppm", 8);
  const auto bytes = lookdev::testing::file_bytes(dir / "h.ppm");
  ASSERT_GE(bytes.size(), 3u);
  EXPECT_EQ(bytes[bytes.size() - 1], 128);  // round half up: floor(127.5 + 0.5)
  const double back = load_image(dir / "h.ppm").at(0, 0, 0);
  EXPECT_LE(std::abs(back - 0.5), 1.0 / 510.0);
}

TEST(ImageIo, SixteenBitThirdWithinQuantizationBound) {
  TempDir dir;
  save_image(ImageF(2, 2, 1.0 / 3.0), dir / "t.png", 16);
  const ImageF got = load_image(dir / "t.png");
  for (double v : got.data()) EXPECT_LE(std::abs(v - 1.0 / 3.0), 1.0 / 131070.0);
}

TEST(ImageIo, RoundTripErrorBoundedByHalfStepProperty) {
  TempDir dir;
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int depth : {8, 16}) {
    for (const char* ext : {"png", "ppm"}) {
      if (depth == 16 && std::string(ext) == "ppm") continue;
      ImageF img(7, 5);
      for (double& v : img.data()) v = u(gen);
      const auto path = dir / (std::string("r.") + ext);
      save_image(img, path, depth);
      const ImageF back = load_image(path);
      const double bound = 1.0 / (2.0 * ((1 << depth) - 1)) + 1e-15;
      for (std::size_t i = 0; i < img.size(); ++i) EXPECT_LE(std::abs(back.data()[i] - img.data()[i]), bound);
    }
  }
}

TEST(ImageIo, GrayAndAlphaPngExpandToRgb) {
  TempDir dir;
  // 1x1 gray+alpha PNG written through libpng's simplified API
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 1;
  image.height = 1;
  image.format = PNG_FORMAT_GA;
  const unsigned char px[2] = {200, 10};
  ASSERT_TRUE(png_image_write_to_file(&image, (dir / "ga.png").string().c_str(), 0, px, 0, nullptr));
  const ImageF img = load_image(dir / "ga.png");
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(img.at(0, 0, c), 200.0 / 255.0);
}

TEST(ImageIo, NoTempFileLeftBehind) {
  TempDir dir;
  save_image(ImageF(2, 2, 0.2), dir / "a.png");
  EXPECT_TRUE(std::filesystem::exists(dir / "a.png"));
  EXPECT_FALSE(std::filesystem::exists(dir / "a.png.tmp"));
}

// ---- resize -----------------------------------------------------------------

TEST(Resize, ConstantStaysConstant) {
  const ImageF img(13, 7, 0.7);
  for (auto [w, h] : {std::pair{1, 1}, {5, 3}, {26, 14}, {40, 9}}) {
    const ImageF out = resize(img, w, h);
    ASSERT_EQ(out.width(), w);
    ASSERT_EQ(out.height(), h);
    for (double v : out.data()) EXPECT_EQ(v, 0.7);
  }
}

TEST(Resize, CheckerboardReducesToMean) {
  EXPECT_EQ(resize(checkerboard(2, 2), 1, 1).at(0, 0, 0), 0.5);
}

TEST(Resize, UpscaleToDeliveryWidth) {
  const ImageF out = resize(ImageF(1024, 8, 0.3), 2048, 16);
  EXPECT_EQ(out.width(), 2048);
}

TEST(Resize, SameSizeIsIdentity) {
  const ImageF img = lookdev::testing::fixture_style(16);
  EXPECT_EQ(resize(img, 16, 16), img);
}

TEST(Resize, RejectsZeroTarget) { EXPECT_THROW(resize(ImageF(2, 2), 0, 2), Error); }

// ---- crop / composite -------------------------------------------------------

TEST(Crop, FullRectIsIdentity) {
  const ImageF img = lookdev::testing::fixture_content(8);
  EXPECT_EQ(crop(img, {0, 0, 8, 8}), img);
}

TEST(Crop, SinglePixel) {
  const ImageF img = lookdev::testing::fixture_style(8);
  const ImageF px = crop(img, {3, 5, 1, 1});
  for (int c = 0; c < 3; ++c) EXPECT_EQ(px.at(0, 0, c), img.at(3, 5, c));
}

TEST(Crop, OutOfBounds) {
  const ImageF img(8, 8);
  try {
    crop(img, {0, 0, 9, 8});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_bounds);
  }
  EXPECT_THROW(crop(img, {-1, 0, 2, 2}), Error);
}

TEST(CompositeBlock, FullCoverEqualsPatch) {
  const ImageF patch = lookdev::testing::fixture_style(8);
  EXPECT_EQ(composite_block(ImageF(8, 8, 0.1), patch, {0, 0, 8, 8}), patch);
}

TEST(CompositeBlock, OnePixelChanged) {
  const ImageF base(2, 2, 0.25);
  const ImageF out = composite_block(base, ImageF(1, 1, 0.75), {1, 0, 1, 1});
  int changed = 0;
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) changed += out.at(x, y, 0) != base.at(x, y, 0) ? 1 : 0;
  EXPECT_EQ(changed, 1);
  EXPECT_EQ(out.at(1, 0, 2), 0.75);
}

TEST(CompositeBlock, Errors) {
  try {
    composite_block(ImageF(4, 4), ImageF(2, 2), {0, 0, 3, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
  try {
    composite_block(ImageF(4, 4), ImageF(2, 2), {3, 3, 2, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_bounds);
  }
}

TEST(CompositeBlock, OutsideRectUntouchedProperty) {
  std::mt19937 gen(5);
  const ImageF base = lookdev::testing::fixture_content(16);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 1 + static_cast<int>(gen() % 16), h = 1 + static_cast<int>(gen() % 16);
    const int x = static_cast<int>(gen() % (17 - w)), y = static_cast<int>(gen() % (17 - h));
    const ImageF out = composite_block(base, ImageF(w, h, 0.123), {x, y, w, h});
    for (int py = 0; py < 16; ++py)
      for (int px = 0; px < 16; ++px) {
        const bool inside = px >= x && px < x + w && py >= y && py < y + h;
        for (int c = 0; c < 3; ++c) {
          if (inside) EXPECT_EQ(out.at(px, py, c), 0.123);
          else EXPECT_EQ(out.at(px, py, c), base.at(px, py, c));
        }
      }
  }
}

// ---- dissolve -----------------------------------------------------------------

TEST(CrossDissolve, Endpoints) {
  const ImageF a = lookdev::testing::fixture_content(8), b = lookdev::testing::fixture_style(8);
  EXPECT_EQ(cross_dissolve(a, b, 0.0), a);
  EXPECT_EQ(cross_dissolve(a, b, 1.0), b);
  const ImageF got = cross_dissolve(ImageF(4, 4, 0.0), ImageF(4, 4, 1.0), 0.5);
  for (double v : got.data()) EXPECT_EQ(v, 0.5);
}

TEST(CrossDissolve, Errors) {
  EXPECT_THROW(cross_dissolve(ImageF(2, 2), ImageF(3, 2), 0.5), Error);
  EXPECT_THROW(cross_dissolve(ImageF(2, 2), ImageF(2, 2), 1.5), Error);
  EXPECT_THROW(cross_dissolve(ImageF(2, 2), ImageF(2, 2), -0.1), Error);
}

TEST(CrossDissolve, BoundedByInputsProperty) {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    ImageF a(5, 4), b(5, 4);
    for (double& v : a.data()) v = u(gen);
    for (double& v : b.data()) v = u(gen);
    const ImageF out = cross_dissolve(a, b, u(gen));
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_GE(out.data()[i], std::min(a.data()[i], b.data()[i]));
      EXPECT_LE(out.data()[i], std::max(a.data()[i], b.data()[i]));
    }
  }
}

// ---- blur / hf energy ---------------------------------------------------------

TEST(GaussianBlur, ZeroSigmaIsBitIdentical) {
  const ImageF img = lookdev::testing::fixture_style(16);
  EXPECT_EQ(gaussian_blur(img, 0.0), img);
}

TEST(GaussianBlur, ConstantUnchanged) {
  for (double sigma : {0.3, 1.0, 2.5, 7.0}) {
    const ImageF got = gaussian_blur(ImageF(9, 6, 0.37), sigma);
    for (double v : got.data()) EXPECT_EQ(v, 0.37);
  }
}

TEST(GaussianBlur, ImpulseSumsToOne) {
  for (double sigma : {0.5, 1.0, 3.0}) {
    ImageF img(41, 41, 0.0);
    img.at(20, 20, 1) = 1.0;
    const ImageF out = gaussian_blur(img, sigma);
    double sum = 0.0;
    for (int y = 0; y < 41; ++y)
      for (int x = 0; x < 41; ++x) sum += out.at(x, y, 1);
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(GaussianBlur, PreservesInteriorMean) {
  // content well away from the borders: edge clamping never sees it
  ImageF img(64, 64, 0.0);
  const ImageF patch = lookdev::testing::fixture_style(16);
  img = composite_block(img, patch, {24, 24, 16, 16});
  auto mean = [](const ImageF& im) {
    double s = 0.0;
    for (double v : im.data()) s += v;
    return s / static_cast<double>(im.size());
  };
  EXPECT_NEAR(mean(gaussian_blur(img, 2.0)), mean(img), 1e-6);
}

TEST(GaussianBlur, RejectsNegativeSigma) { EXPECT_THROW(gaussian_blur(ImageF(2, 2), -1.0), Error); }

TEST(HfEnergy, ConstantIsZero) { EXPECT_EQ(hf_energy(ImageF(8, 8, 0.4), 1.5), 0.0); }

TEST(HfEnergy, CheckerboardPositive) { EXPECT_GT(hf_energy(checkerboard(8, 8), 1.0), 0.0); }

TEST(HfEnergy, BlurNeverIncreasesEnergyProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImageF x = lookdev::testing::random_image(12 + static_cast<int>(seed % 5), 10, seed);
    for (double sigma : {0.5, 1.0, 2.0}) {
      EXPECT_LE(hf_energy(gaussian_blur(x, sigma), sigma), hf_energy(x, sigma));
    }
  }
}

TEST(HfEnergy, RejectsNonPositiveSigma) { EXPECT_THROW(hf_energy(ImageF(2, 2), 0.0), Error); }

// ---- style image report -------------------------------------------------------

TEST(StyleImageReport, AllWhite) {
  const auto r = style_image_report(ImageF(4, 4, 1.0));
  EXPECT_EQ(r.clipped_highlight_fraction, 1.0);
  EXPECT_EQ(r.clipped_shadow_fraction, 0.0);
}

TEST(StyleImageReport, MidGray) {
  const auto r = style_image_report(ImageF(4, 4, 0.5));
  EXPECT_EQ(r.clipped_highlight_fraction, 0.0);
  EXPECT_EQ(r.clipped_shadow_fraction, 0.0);
  EXPECT_EQ(r.hf_energy, 0.0);
}

TEST(StyleImageReport, HalfBlownOut) {
  ImageF img(6, 4, 0.3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 1.0;
  EXPECT_EQ(style_image_report(img).clipped_highlight_fraction, 0.5);
}

TEST(StyleImageReport, OneChannelBelowThresholdIsNotClipped) {
  ImageF img(1, 1, 1.0);
  img.at(0, 0, 2) = 0.98;
  EXPECT_EQ(style_image_report(img).clipped_highlight_fraction, 0.0);
}

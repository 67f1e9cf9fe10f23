#include <gtest/gtest.h>
#include <png.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "residual_forge/error.hpp"
#include "residual_forge/image.hpp"
#include "residual_forge/image_io.hpp"

using namespace residual_forge;

namespace {

// Minimal libpng writer so tests can produce formats save_image never emits.
void write_png(const std::filesystem::path& path, std::uint32_t w, std::uint32_t h,
               int color_type, int bit_depth, const std::vector<std::uint8_t>& bytes,
               bool with_trns = false) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  ASSERT_NE(fp, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_color palette[2] = {{0, 0, 0}, {255, 255, 255}};
    png_set_PLTE(png, info, palette, 2);
  }
  if (with_trns) {
    png_color_16 trans{};
    png_set_tRNS(png, info, nullptr, 0, &trans);
  }
  png_write_info(png, info);
  const std::size_t stride = bytes.size() / h;
  for (std::uint32_t r = 0; r < h; ++r) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + r * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

std::vector<std::uint8_t> read_png_rgb(const std::filesystem::path& path, std::uint32_t& w,
                                       std::uint32_t& h) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  EXPECT_TRUE(png_image_begin_read_from_file(&image, path.c_str()));
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  EXPECT_TRUE(png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr));
  w = image.width;
  h = image.height;
  return buf;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

}  // namespace

TEST(ImageTensor, RejectsBelowThreeByThree) {
  EXPECT_EQ(code_of([] { ImageTensor(2, 5); }), ErrorCode::ImageTooSmall);
  EXPECT_EQ(code_of([] { ImageTensor(5, 2); }), ErrorCode::ImageTooSmall);
  ImageTensor ok(3, 3);
  EXPECT_EQ(ok.size(), 27u);
}

TEST(ImageTensor, PlanarLayout) {
  ImageTensor img(4, 5);
  img.at(2, 3, 1) = 0.25;
  EXPECT_EQ(img.values()[2 * 20 + 3 * 5 + 1], 0.25);
  EXPECT_EQ(img.plane(2)[3 * 5 + 1], 0.25);
}

TEST(ClipUnit, ClampsMixedValues) {
  ImageTensor img(3, 3, 0.5);
  img.values()[0] = -0.2;
  img.values()[1] = 0.5;
  img.values()[2] = 1.3;
  const ClipResult r = clip_unit(img);
  EXPECT_EQ(r.image.values()[0], 0.0);
  EXPECT_EQ(r.image.values()[1], 0.5);
  EXPECT_EQ(r.image.values()[2], 1.0);
  EXPECT_EQ(r.mask[0], 0);
  EXPECT_EQ(r.mask[1], 1);
  EXPECT_EQ(r.mask[2], 0);
}

TEST(ClipUnit, InRangeIsUnchangedWithAllPassMask) {
  std::mt19937_64 rng(1);
  const ImageTensor img = oracle::random_image(6, 7, rng);
  const ClipResult r = clip_unit(img);
  EXPECT_EQ(r.image, img);
  for (auto m : r.mask) EXPECT_EQ(m, 1);
}

TEST(ClipUnit, SaturatedIsAllOneWithBlockedMask) {
  const ClipResult r = clip_unit(ImageTensor(4, 4, 2.0));
  for (double v : r.image.values()) EXPECT_EQ(v, 1.0);
  for (auto m : r.mask) EXPECT_EQ(m, 0);
}

TEST(ClipUnit, BoundaryValuesPass) {
  ImageTensor img(3, 3, 0.0);
  img.values()[4] = 1.0;
  const ClipResult r = clip_unit(img);
  for (auto m : r.mask) EXPECT_EQ(m, 1);
}

TEST(ClipUnit, IdempotentProperty) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageTensor x = oracle::random_image(8, 9, rng, -1.0, 2.0);
    const ImageTensor once = clip_unit(x).image;
    EXPECT_EQ(clip_unit(once).image, once);
    for (double v : once.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(TilePatches, ExactTiling) {
  const PatchGrid g = tile_patches(300, 300, 150);
  ASSERT_EQ(g.patches.size(), 4u);
  for (const auto& p : g.patches) {
    EXPECT_EQ(p.height, 150u);
    EXPECT_EQ(p.width, 150u);
  }
}

TEST(TilePatches, PatchLargerThanImage) {
  const PatchGrid g = tile_patches(100, 100, 150);
  ASSERT_EQ(g.patches.size(), 1u);
  EXPECT_EQ(g.patches[0], (PatchRect{0, 0, 100, 100}));
}

TEST(TilePatches, SmallRemainderMerges) {
  const PatchGrid g = tile_patches(310, 150, 150);
  ASSERT_EQ(g.patches.size(), 2u);
  EXPECT_EQ(g.patches[0], (PatchRect{0, 0, 150, 150}));
  EXPECT_EQ(g.patches[1], (PatchRect{150, 0, 160, 150}));
}

TEST(TilePatches, RejectsTinyPatchSize) {
  EXPECT_EQ(code_of([] { tile_patches(64, 64, 7); }), ErrorCode::PatchTooSmall);
}

TEST(TilePatches, CoversEveryPixelOnceProperty) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> side(3, 400);
  std::uniform_int_distribution<std::size_t> patch(8, 200);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = side(rng);
    const std::size_t w = side(rng);
    const std::size_t ps = patch(rng);
    const PatchGrid g = tile_patches(h, w, ps);
    std::vector<int> hits(h * w, 0);
    std::size_t area = 0;
    for (const auto& p : g.patches) {
      area += p.height * p.width;
      ASSERT_LE(p.row + p.height, h);
      ASSERT_LE(p.col + p.width, w);
      // Never smaller than 8 unless the image side itself is.
      EXPECT_GE(p.height, std::min<std::size_t>(h, 8));
      EXPECT_GE(p.width, std::min<std::size_t>(w, 8));
      for (std::size_t r = p.row; r < p.row + p.height; ++r)
        for (std::size_t c = p.col; c < p.col + p.width; ++c) ++hits[r * w + c];
    }
    EXPECT_EQ(area, h * w);
    for (int v : hits) ASSERT_EQ(v, 1) << h << "x" << w << " ps=" << ps;
  }
}

TEST(Crop, CopiesRectangle) {
  std::mt19937_64 rng(4);
  const ImageTensor img = oracle::random_image(10, 12, rng);
  const ImageTensor c = crop(img, {2, 3, 4, 5});
  ASSERT_EQ(c.height(), 4u);
  ASSERT_EQ(c.width(), 5u);
  EXPECT_EQ(c.at(1, 2, 3), img.at(1, 4, 6));
  EXPECT_EQ(code_of([&] { crop(img, {8, 0, 4, 4}); }), ErrorCode::ShapeMismatch);
}

TEST(Quantize, RoundHalfUpAndClip) {
  EXPECT_EQ(quantize_unit(0.5), 128);
  EXPECT_EQ(quantize_unit(1.7), 255);
  EXPECT_EQ(quantize_unit(-0.3), 0);
  EXPECT_EQ(quantize_unit(1.0), 255);
  EXPECT_EQ(quantize_unit(0.0), 0);
}

TEST(LoadImage, TwoByTwoIsTooSmall) {
  oracle::TempDir dir("io");
  write_png(dir / "tiny.png", 2, 2, PNG_COLOR_TYPE_RGB, 8, std::vector<std::uint8_t>(12, 255));
  EXPECT_EQ(code_of([&] { load_image(dir / "tiny.png"); }), ErrorCode::ImageTooSmall);
}

TEST(LoadImage, ZeroBytes) {
  oracle::TempDir dir("io");
  write_png(dir / "z.png", 3, 3, PNG_COLOR_TYPE_RGB, 8, std::vector<std::uint8_t>(27, 0));
  const ImageTensor img = load_image(dir / "z.png");
  ASSERT_EQ(img.height(), 3u);
  for (double v : img.values()) EXPECT_EQ(v, 0.0);
}

TEST(LoadImage, ByteScaling) {
  oracle::TempDir dir("io");
  write_png(dir / "g.png", 3, 3, PNG_COLOR_TYPE_RGB, 8, std::vector<std::uint8_t>(27, 128));
  const ImageTensor img = load_image(dir / "g.png");
  for (double v : img.values()) EXPECT_DOUBLE_EQ(v, 128.0 / 255.0);
  EXPECT_NEAR(img.values()[0], 0.50196, 1e-5);
}

TEST(LoadImage, GrayscaleReplicates) {
  oracle::TempDir dir("io");
  std::vector<std::uint8_t> bytes(12);
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(i * 20);
  write_png(dir / "gray.png", 4, 3, PNG_COLOR_TYPE_GRAY, 8, bytes);
  const ImageTensor img = load_image(dir / "gray.png");
  ASSERT_EQ(img.height(), 3u);
  ASSERT_EQ(img.width(), 4u);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        EXPECT_DOUBLE_EQ(img.at(c, r, x), bytes[r * 4 + x] / 255.0);
}

TEST(LoadImage, RejectsSixteenBit) {
  oracle::TempDir dir("io");
  write_png(dir / "deep.png", 3, 3, PNG_COLOR_TYPE_RGB, 16, std::vector<std::uint8_t>(54, 1));
  try {
    load_image(dir / "deep.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedFormat);
    EXPECT_NE(std::string(e.what()).find("16-bit"), std::string::npos);
  }
}

TEST(LoadImage, RejectsPalette) {
  oracle::TempDir dir("io");
  write_png(dir / "pal.png", 3, 3, PNG_COLOR_TYPE_PALETTE, 8, std::vector<std::uint8_t>(9, 1));
  try {
    load_image(dir / "pal.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedFormat);
    EXPECT_NE(std::string(e.what()).find("palette"), std::string::npos);
  }
}

TEST(LoadImage, RejectsAlpha) {
  oracle::TempDir dir("io");
  write_png(dir / "rgba.png", 3, 3, PNG_COLOR_TYPE_RGBA, 8, std::vector<std::uint8_t>(36, 9));
  write_png(dir / "trns.png", 3, 3, PNG_COLOR_TYPE_RGB, 8, std::vector<std::uint8_t>(27, 9),
            true);
  for (const char* name : {"rgba.png", "trns.png"}) {
    try {
      load_image(dir / name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::UnsupportedFormat);
      EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
    }
  }
}

TEST(LoadImage, MissingFile) {
  EXPECT_EQ(code_of([] { load_image("/nonexistent/definitely/missing.png"); }),
            ErrorCode::FileNotFound);
}

TEST(LoadImage, UnknownFormat) {
  oracle::TempDir dir("io");
  std::ofstream(dir / "junk.png") << "not an image at all";
  EXPECT_EQ(code_of([&] { load_image(dir / "junk.png"); }), ErrorCode::UnsupportedFormat);
}

TEST(LoadImage, ReadsPpm) {
  oracle::TempDir dir("io");
  {
    std::ofstream f(dir / "a.ppm", std::ios::binary);
    f << "P6\n# comment\n3 4\n255\n";
    for (int i = 0; i < 36; ++i) f.put(static_cast<char>(i * 7));
  }
  const ImageTensor img = load_image(dir / "a.ppm");
  ASSERT_EQ(img.height(), 4u);
  ASSERT_EQ(img.width(), 3u);
  // Interleaved RGB on disk: pixel (row 1, col 2) starts at byte (1*3+2)*3 = 15.
  EXPECT_DOUBLE_EQ(img.at(0, 1, 2), 15 * 7 / 255.0);
  EXPECT_DOUBLE_EQ(img.at(2, 1, 2), 17 * 7 / 255.0);
}

TEST(LoadImage, RejectsPpmMaxval) {
  oracle::TempDir dir("io");
  {
    std::ofstream f(dir / "b.ppm", std::ios::binary);
    f << "P6 3 3 65535\n" << std::string(54, '\0');
  }
  EXPECT_EQ(code_of([&] { load_image(dir / "b.ppm"); }), ErrorCode::UnsupportedFormat);
}

TEST(SaveImage, QuantizesHalfUpAndClips) {
  oracle::TempDir dir("io");
  ImageTensor img(3, 4, 0.5);
  img.at(0, 0, 0) = 1.7;
  img.at(1, 0, 0) = -0.3;
  save_image(img, dir / "q.png");
  std::uint32_t w = 0;
  std::uint32_t h = 0;
  const auto bytes = read_png_rgb(dir / "q.png", w, h);
  ASSERT_EQ(w, 4u);
  ASSERT_EQ(h, 3u);
  EXPECT_EQ(bytes[0], 255);
  EXPECT_EQ(bytes[1], 0);
  EXPECT_EQ(bytes[2], 128);
  for (std::size_t i = 3; i < bytes.size(); ++i) EXPECT_EQ(bytes[i], 128);
}

TEST(SaveImage, IoErrorOnBadPath) {
  EXPECT_EQ(code_of([] { save_image(ImageTensor(3, 3), "/nonexistent/dir/x.png"); }),
            ErrorCode::IoError);
}

TEST(SaveImage, RoundTripWithinOneLevelProperty) {
  oracle::TempDir dir("io");
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageTensor img = oracle::random_image(5 + trial, 9, rng);
    save_image(img, dir / "rt.png");
    const ImageTensor back = load_image(dir / "rt.png");
    EXPECT_LE(oracle::max_abs_diff(img, back), 1.0 / 255.0);
    EXPECT_EQ(back, quantize(img));
    save_ppm(img, dir / "rt.ppm");
    EXPECT_EQ(load_image(dir / "rt.ppm"), back);
  }
}

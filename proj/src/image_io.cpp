#include "residual_forge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "residual_forge/error.hpp"

namespace residual_forge {
namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  return {std::fopen(path.c_str(), mode), &std::fclose};
}

ImageTensor from_interleaved(std::size_t height, std::size_t width, std::size_t src_channels,
                             const std::vector<std::uint8_t>& bytes) {
  ImageTensor img(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t base = (r * width + x) * src_channels;
      for (std::size_t c = 0; c < kChannels; ++c) {
        const std::uint8_t b = bytes[base + (src_channels == 1 ? 0 : c)];
        img.at(c, r, x) = static_cast<double>(b) / 255.0;
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> to_interleaved(const ImageTensor& img) {
  std::vector<std::uint8_t> bytes(img.size());
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        bytes[(r * img.width() + x) * kChannels + c] = quantize_unit(img.at(c, r, x));
      }
    }
  }
  return bytes;
}

ImageTensor load_png(std::FILE* fp, const std::filesystem::path& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  std::vector<std::uint8_t> bytes;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "corrupt or truncated PNG: " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const auto width = static_cast<std::size_t>(png_get_image_width(png, info));
  const auto height = static_cast<std::size_t>(png_get_image_height(png, info));
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  std::string rejected;
  if (bit_depth == 16) {
    rejected = "16-bit samples";
  } else if (color_type == PNG_COLOR_TYPE_PALETTE) {
    rejected = "palette color type";
  } else if ((color_type & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS)) {
    rejected = "alpha channel";
  } else if (bit_depth != 8 && color_type != PNG_COLOR_TYPE_GRAY) {
    rejected = std::to_string(bit_depth) + "-bit samples";
  }
  if (!rejected.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": " + rejected);
  }
  if (width < kMinImageSide || height < kMinImageSide) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::ImageTooSmall, path.string() + " is " + std::to_string(height) +
                                              "x" + std::to_string(width));
  }
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const std::size_t src_channels = png_get_channels(png, info);
  bytes.resize(width * height * src_channels);
  rows.resize(height);
  for (std::size_t r = 0; r < height; ++r) rows[r] = bytes.data() + r * width * src_channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_interleaved(height, width, src_channels, bytes);
}

// Reads one whitespace/comment-delimited PNM header token.
bool read_pnm_token(std::istream& in, std::string& token) {
  token.clear();
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (!std::isspace(ch)) break;
  }
  if (ch == EOF) return false;
  token.push_back(static_cast<char>(ch));
  while ((ch = in.peek()) != EOF && !std::isspace(ch) && ch != '#') {
    token.push_back(static_cast<char>(in.get()));
  }
  return true;
}

ImageTensor load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic, w, h, maxval;
  if (!read_pnm_token(in, magic) || !read_pnm_token(in, w) || !read_pnm_token(in, h) ||
      !read_pnm_token(in, maxval)) {
    throw Error(ErrorCode::IoError, "truncated PPM header: " + path.string());
  }
  if (magic != "P6") {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": PNM variant " + magic);
  }
  std::size_t width = 0, height = 0;
  long max_value = 0;
  try {
    width = std::stoul(w);
    height = std::stoul(h);
    max_value = std::stol(maxval);
  } catch (const std::exception&) {
    throw Error(ErrorCode::IoError, "malformed PPM header: " + path.string());
  }
  if (max_value != 255) {
    throw Error(ErrorCode::UnsupportedFormat,
                path.string() + ": maxval " + maxval + (max_value > 255 ? " (16-bit samples)" : ""));
  }
  if (width < kMinImageSide || height < kMinImageSide) {
    throw Error(ErrorCode::ImageTooSmall, path.string() + " is " + std::to_string(height) +
                                              "x" + std::to_string(width));
  }
  in.get();  // single whitespace byte after maxval
  std::vector<std::uint8_t> bytes(width * height * kChannels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw Error(ErrorCode::IoError, "truncated PPM pixel data: " + path.string());
  }
  return from_interleaved(height, width, kChannels, bytes);
}

}  // namespace

std::uint8_t quantize_unit(double v) noexcept {
  const double clipped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clipped * 255.0 + 0.5));
}

ImageTensor quantize(const ImageTensor& img) {
  ImageTensor out = img;
  for (double& v : out.values()) v = static_cast<double>(quantize_unit(v)) / 255.0;
  return out;
}

ImageTensor load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, path.string());
  }
  auto fp = open_file(path, "rb");
  if (!fp) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::array<unsigned char, 8> magic{};
  const std::size_t got = std::fread(magic.data(), 1, magic.size(), fp.get());
  if (got >= 8 && png_sig_cmp(magic.data(), 0, 8) == 0) {
    std::rewind(fp.get());
    return load_png(fp.get(), path);
  }
  if (got >= 2 && magic[0] == 'P') {
    fp.reset();
    return load_ppm(path);
  }
  throw Error(ErrorCode::UnsupportedFormat, path.string() + ": neither PNG nor PPM");
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
  auto fp = open_file(path, "wb");
  if (!fp) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  const std::vector<std::uint8_t> bytes = to_interleaved(img);
  std::vector<png_bytep> rows(img.height());
  for (std::size_t r = 0; r < img.height(); ++r) {
    rows[r] = const_cast<png_bytep>(bytes.data() + r * img.width() * kChannels);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) throw Error(ErrorCode::IoError, "flush failed: " + path.string());
}

void save_ppm(const ImageTensor& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  const std::vector<std::uint8_t> bytes = to_interleaved(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace residual_forge

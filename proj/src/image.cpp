#include "residual_forge/image.hpp"

#include <algorithm>
#include <string>

#include "residual_forge/error.hpp"

namespace residual_forge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::PatchTooSmall: return "PatchTooSmall";
    case ErrorCode::DegenerateAlpha: return "DegenerateAlpha";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width) {
  if (height < kMinImageSide || width < kMinImageSide) {
    throw Error(ErrorCode::ImageTooSmall,
                std::to_string(height) + "x" + std::to_string(width) +
                    " is below the 3x3 minimum");
  }
  data_.assign(height * width * kChannels, fill);
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": " + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                    "x" + std::to_string(b.width()));
  }
}

ClipResult clip_unit(const ImageTensor& img) {
  ClipResult out{img, ClipMask(img.size(), 1)};
  auto values = out.image.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    double& v = values[i];
    if (v < 0.0) {
      v = 0.0;
      out.mask[i] = 0;
    } else if (v > 1.0) {
      v = 1.0;
      out.mask[i] = 0;
    }
  }
  return out;
}

ImageTensor clamp_values(const ImageTensor& img, double low, double high) {
  ImageTensor out = img;
  for (double& v : out.values()) v = std::clamp(v, low, high);
  return out;
}

namespace {

// Segment lengths along one axis. A remainder is merged into the previous
// segment when it is narrower than 8 px or than half a patch.
std::vector<std::pair<std::size_t, std::size_t>> tile_axis(std::size_t extent,
                                                           std::size_t patch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  const std::size_t full = extent / patch_size;
  const std::size_t remainder = extent % patch_size;
  if (full == 0) {
    segments.emplace_back(0, extent);
    return segments;
  }
  for (std::size_t i = 0; i < full; ++i) segments.emplace_back(i * patch_size, patch_size);
  if (remainder == 0) return segments;
  if (remainder < kMinPatchSide || 2 * remainder < patch_size) {
    segments.back().second += remainder;
  } else {
    segments.emplace_back(full * patch_size, remainder);
  }
  return segments;
}

}  // namespace

PatchGrid tile_patches(std::size_t height, std::size_t width, std::size_t patch_size) {
  if (patch_size < kMinPatchSide) {
    throw Error(ErrorCode::PatchTooSmall,
                "patch size " + std::to_string(patch_size) + " is below 8");
  }
  PatchGrid grid;
  grid.patch_size = patch_size;
  for (const auto& [row, h] : tile_axis(height, patch_size)) {
    for (const auto& [col, w] : tile_axis(width, patch_size)) {
      grid.patches.push_back({row, col, h, w});
    }
  }
  return grid;
}

ImageTensor crop(const ImageTensor& img, const PatchRect& rect) {
  if (rect.row + rect.height > img.height() || rect.col + rect.width > img.width()) {
    throw Error(ErrorCode::ShapeMismatch, "crop rectangle exceeds image bounds");
  }
  ImageTensor out(rect.height, rect.width);
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t r = 0; r < rect.height; ++r) {
      for (std::size_t x = 0; x < rect.width; ++x) {
        out.at(c, r, x) = img.at(c, rect.row + r, rect.col + x);
      }
    }
  }
  return out;
}

}  // namespace residual_forge

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace residual_forge {

inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kMinImageSide = 3;

/// H x W x 3 real-valued image stored planar: channel-major, then row-major.
/// Element (c, row, col) lives at data[c * H * W + row * W + col].
///
/// Values are nominally in [0,1] but nothing enforces that; residuals under
/// optimization routinely leave the range until clipped.
class ImageTensor {
 public:
  ImageTensor() = default;

  /// Throws Error{ImageTooSmall} when either side is below 3.
  ImageTensor(std::size_t height, std::size_t width, double fill = 0.0);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return kChannels; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t c, std::size_t row, std::size_t col) noexcept {
    return data_[c * plane_size() + row * width_ + col];
  }
  double at(std::size_t c, std::size_t row, std::size_t col) const noexcept {
    return data_[c * plane_size() + row * width_ + col];
  }

  std::span<double> plane(std::size_t c) noexcept {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(std::size_t c) const noexcept {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Throws Error{ShapeMismatch} naming `what` when shapes differ.
void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what);

/// Per-element pass flags of a clip: 1 where the source value was inside the
/// closed interval, 0 where it was clamped.
using ClipMask = std::vector<std::uint8_t>;

struct ClipResult {
  ImageTensor image;
  ClipMask mask;
};

ClipResult clip_unit(const ImageTensor& img);

/// Elementwise clamp into [low, high]; no mask.
ImageTensor clamp_values(const ImageTensor& img, double low, double high);

struct PatchRect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

inline constexpr std::size_t kMinPatchSide = 8;

struct PatchGrid {
  std::size_t patch_size = 0;
  std::vector<PatchRect> patches;
};

/// Top-left tiling into patch_size squares. A trailing strip narrower than
/// 8 px is absorbed by the last row/column of patches.
PatchGrid tile_patches(std::size_t height, std::size_t width, std::size_t patch_size);

/// Copies the rectangle out of img. The rectangle must be at least 3x3.
ImageTensor crop(const ImageTensor& img, const PatchRect& rect);

}  // namespace residual_forge

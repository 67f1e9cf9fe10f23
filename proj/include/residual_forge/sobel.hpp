#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "residual_forge/image.hpp"

namespace residual_forge {

inline constexpr std::size_t kGradientPlanes = 6;

/// Six same-size planes of Sobel responses ordered (R_x, G_x, B_x, R_y, G_y, B_y).
class GradientField {
 public:
  GradientField() = default;
  GradientField(std::size_t height, std::size_t width);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  /// Plane index of channel c in the x (dir 0) or y (dir 1) direction.
  static constexpr std::size_t plane_index(std::size_t dir, std::size_t c) noexcept {
    return dir * kChannels + c;
  }

  std::span<double> plane(std::size_t p) noexcept {
    return {data_.data() + p * plane_size(), plane_size()};
  }
  std::span<const double> plane(std::size_t p) const noexcept {
    return {data_.data() + p * plane_size(), plane_size()};
  }

  double at(std::size_t p, std::size_t row, std::size_t col) const noexcept {
    return data_[p * plane_size() + row * width_ + col];
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Sobel kernels in cross-correlation orientation: kSobelX[dr][dc] weights
/// the pixel at (row + dr - 1, col + dc - 1). kSobelY is the transpose.
inline constexpr std::array<std::array<double, 3>, 3> kSobelX{{
    {-1.0, 0.0, 1.0},
    {-2.0, 0.0, 2.0},
    {-1.0, 0.0, 1.0},
}};
inline constexpr std::array<std::array<double, 3>, 3> kSobelY{{
    {-1.0, -2.0, -1.0},
    {0.0, 0.0, 0.0},
    {1.0, 2.0, 1.0},
}};

/// Unnormalized 3x3 Sobel cross-correlation per channel, with the border
/// replicate-padded by one pixel so the output has the input's size.
GradientField sobel_forward(const ImageTensor& img);

/// Exact adjoint of sobel_forward: <sobel_forward(u), v> == <u, sobel_backward(v)>.
/// Contributions that land on the padding ring fold back onto the edge pixel
/// they replicate.
ImageTensor sobel_backward(const GradientField& upstream);

}  // namespace residual_forge

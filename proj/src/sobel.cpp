#include "residual_forge/sobel.hpp"

#include <algorithm>
#include <string>

#include "residual_forge/error.hpp"

namespace residual_forge {
namespace {

// Both kernels factor into a [1, 2, 1] smoothing pass and a [-1, 0, 1]
// difference pass; the loops below work on a replicate-padded copy of one
// channel, (H + 2) x (W + 2).

void pad_replicate(std::span<const double> src, std::size_t h, std::size_t w,
                   std::vector<double>& padded) {
  const std::size_t pw = w + 2;
  padded.resize((h + 2) * pw);
  for (std::size_t i = 0; i < h + 2; ++i) {
    const std::size_t sr = std::clamp<std::size_t>(i, 1, h) - 1;
    const double* row = src.data() + sr * w;
    double* dst = padded.data() + i * pw;
    dst[0] = row[0];
    std::copy(row, row + w, dst + 1);
    dst[pw - 1] = row[w - 1];
  }
}

void fold_replicate(const std::vector<double>& padded, std::size_t h, std::size_t w,
                    std::span<double> dst) {
  const std::size_t pw = w + 2;
  std::fill(dst.begin(), dst.end(), 0.0);
  for (std::size_t i = 0; i < h + 2; ++i) {
    const std::size_t dr = std::clamp<std::size_t>(i, 1, h) - 1;
    const double* src = padded.data() + i * pw;
    double* row = dst.data() + dr * w;
    row[0] += src[0];
    for (std::size_t j = 0; j < w; ++j) row[j] += src[j + 1];
    row[w - 1] += src[pw - 1];
  }
}

}  // namespace

GradientField::GradientField(std::size_t height, std::size_t width)
    : height_(height), width_(width), data_(height * width * kGradientPlanes, 0.0) {}

GradientField sobel_forward(const ImageTensor& img) {
  if (img.height() < kMinImageSide || img.width() < kMinImageSide) {
    throw Error(ErrorCode::ImageTooSmall, "sobel_forward needs at least 3x3");
  }
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  const std::size_t pw = w + 2;
  GradientField field(h, w);
  std::vector<double> diff((h + 2) * w);
  std::vector<double> smooth((h + 2) * w);
  std::vector<double> p;

  for (std::size_t c = 0; c < kChannels; ++c) {
    pad_replicate(img.plane(c), h, w, p);
    for (std::size_t i = 0; i < h + 2; ++i) {
      const double* row = p.data() + i * pw;
      double* d = diff.data() + i * w;
      double* s = smooth.data() + i * w;
      for (std::size_t j = 0; j < w; ++j) {
        d[j] = row[j + 2] - row[j];
        s[j] = row[j] + 2.0 * row[j + 1] + row[j + 2];
      }
    }
    auto gx = field.plane(GradientField::plane_index(0, c));
    auto gy = field.plane(GradientField::plane_index(1, c));
    for (std::size_t r = 0; r < h; ++r) {
      const double* d0 = diff.data() + r * w;
      const double* s0 = smooth.data() + r * w;
      double* ox = gx.data() + r * w;
      double* oy = gy.data() + r * w;
      for (std::size_t j = 0; j < w; ++j) {
        ox[j] = d0[j] + 2.0 * d0[j + w] + d0[j + 2 * w];
        oy[j] = s0[j + 2 * w] - s0[j];
      }
    }
  }
  return field;
}

ImageTensor sobel_backward(const GradientField& upstream) {
  const std::size_t h = upstream.height();
  const std::size_t w = upstream.width();
  if (upstream.size() != h * w * kGradientPlanes || h < kMinImageSide || w < kMinImageSide) {
    throw Error(ErrorCode::ShapeMismatch, "sobel_backward expects a 6-plane field of at least 3x3");
  }
  const std::size_t pw = w + 2;
  ImageTensor out(h, w);
  std::vector<double> diff_bar((h + 2) * w);
  std::vector<double> smooth_bar((h + 2) * w);
  std::vector<double> padded_bar((h + 2) * pw);

  for (std::size_t c = 0; c < kChannels; ++c) {
    std::fill(diff_bar.begin(), diff_bar.end(), 0.0);
    std::fill(smooth_bar.begin(), smooth_bar.end(), 0.0);
    std::fill(padded_bar.begin(), padded_bar.end(), 0.0);
    const auto gx = upstream.plane(GradientField::plane_index(0, c));
    const auto gy = upstream.plane(GradientField::plane_index(1, c));
    for (std::size_t r = 0; r < h; ++r) {
      const double* ix = gx.data() + r * w;
      const double* iy = gy.data() + r * w;
      double* d0 = diff_bar.data() + r * w;
      double* s0 = smooth_bar.data() + r * w;
      for (std::size_t j = 0; j < w; ++j) {
        d0[j] += ix[j];
        d0[j + w] += 2.0 * ix[j];
        d0[j + 2 * w] += ix[j];
        s0[j + 2 * w] += iy[j];
        s0[j] -= iy[j];
      }
    }
    for (std::size_t i = 0; i < h + 2; ++i) {
      const double* d = diff_bar.data() + i * w;
      const double* s = smooth_bar.data() + i * w;
      double* row = padded_bar.data() + i * pw;
      for (std::size_t j = 0; j < w; ++j) {
        row[j + 2] += d[j] + s[j];
        row[j] += s[j] - d[j];
        row[j + 1] += 2.0 * s[j];
      }
    }
    fold_replicate(padded_bar, h, w, out.plane(c));
  }
  return out;
}

}  // namespace residual_forge

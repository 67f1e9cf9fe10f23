#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "residual_forge/image.hpp"

namespace residual_forge {

inline constexpr double kPsnrCapDb = 99.0;
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// 10 * log10(1 / MSE) over every element, for images on a [0,1] scale.
/// Zero MSE (and anything above the cap) reports kPsnrCapDb.
double psnr(const ImageTensor& a, const ImageTensor& b);

/// Mean SSIM: Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2, evaluated
/// at valid window positions only, per channel, then averaged over channels.
/// Throws ImageTooSmall when a side is shorter than the window.
double ssim(const ImageTensor& a, const ImageTensor& b, std::size_t window = kSsimWindow);

/// Normalized 1-D Gaussian taps used by ssim(); the 2-D window is their outer
/// product.
std::vector<double> gaussian_taps(std::size_t window, double sigma = kSsimSigma);

struct PatchScore {
  PatchRect rect;
  double psnr = 0.0;
  double ssim = 0.0;
  bool psnr_capped = false;
  std::size_t ssim_window = kSsimWindow;
};

struct MetricsReport {
  std::string method;
  std::size_t patch_size = 0;
  std::vector<PatchScore> per_patch;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  /// Supplied from outside (e.g. a Python LPIPS run); never computed here.
  std::optional<double> lpips;
  std::string provenance;
};

/// The SSIM window for a patch: 11, or the largest odd size that fits when
/// the patch is narrower than 11 px.
std::size_t ssim_window_for(const PatchRect& rect);

/// Tiles with tile_patches, scores each tile, and averages arithmetically.
MetricsReport patch_metrics(const ImageTensor& a, const ImageTensor& b, std::size_t patch_size,
                            std::string method = {});

}  // namespace residual_forge

#include "residual_forge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "residual_forge/error.hpp"

namespace residual_forge {
namespace {

// Valid-mode separable filter of one h x w plane with the same taps along
// both axes. Output is (h - k + 1) x (w - k + 1).
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
  const std::size_t k = taps.size();
  const std::size_t oh = h - k + 1;
  const std::size_t ow = w - k + 1;
  std::vector<double> horizontal(h * ow, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    const double* row = src.data() + r * w;
    double* out = horizontal.data() + r * ow;
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += taps[t] * row[c + t];
      out[c] = acc;
    }
  }
  std::vector<double> result(oh * ow, 0.0);
  for (std::size_t r = 0; r < oh; ++r) {
    double* out = result.data() + r * ow;
    for (std::size_t t = 0; t < k; ++t) {
      const double* row = horizontal.data() + (r + t) * ow;
      for (std::size_t c = 0; c < ow; ++c) out[c] += taps[t] * row[c];
    }
  }
  return result;
}

double ssim_plane(std::span<const double> x, std::span<const double> y, std::size_t h,
                  std::size_t w, const std::vector<double>& taps) {
  const double c1 = kSsimK1 * kSsimK1;
  const double c2 = kSsimK2 * kSsimK2;
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = filter_valid({x.begin(), x.end()}, h, w, taps);
  const auto mu_y = filter_valid({y.begin(), y.end()}, h, w, taps);
  const auto e_xx = filter_valid(xx, h, w, taps);
  const auto e_yy = filter_valid(yy, h, w, taps);
  const auto e_xy = filter_valid(xy, h, w, taps);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i];
    const double my = mu_y[i];
    const double var_x = e_xx[i] - mx * mx;
    const double var_y = e_yy[i] - my * my;
    const double cov = e_xy[i] - mx * my;
    sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
           ((mx * mx + my * my + c1) * (var_x + var_y + c2));
  }
  return sum / static_cast<double>(mu_x.size());
}

}  // namespace

double psnr(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "psnr");
  const auto x = a.values();
  const auto y = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(x.size());
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

std::vector<double> gaussian_taps(std::size_t window, double sigma) {
  std::vector<double> taps(window);
  const double center = static_cast<double>(window - 1) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    const double d = static_cast<double>(i) - center;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

double ssim(const ImageTensor& a, const ImageTensor& b, std::size_t window) {
  require_same_shape(a, b, "ssim");
  if (window == 0 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidConfig, "ssim window must be odd");
  }
  if (a.height() < window || a.width() < window) {
    throw Error(ErrorCode::ImageTooSmall, "ssim needs at least " + std::to_string(window) + "x" +
                                              std::to_string(window) + " pixels");
  }
  const auto taps = gaussian_taps(window);
  double sum = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) {
    sum += ssim_plane(a.plane(c), b.plane(c), a.height(), a.width(), taps);
  }
  return sum / static_cast<double>(kChannels);
}

std::size_t ssim_window_for(const PatchRect& rect) {
  const std::size_t side = std::min({rect.height, rect.width, kSsimWindow});
  return side % 2 == 1 ? side : side - 1;
}

MetricsReport patch_metrics(const ImageTensor& a, const ImageTensor& b, std::size_t patch_size,
                            std::string method) {
  require_same_shape(a, b, "patch_metrics");
  const PatchGrid grid = tile_patches(a.height(), a.width(), patch_size);
  MetricsReport report;
  report.method = std::move(method);
  report.patch_size = patch_size;
  report.provenance =
      "PSNR on [0,1] scale, capped at 99 dB; SSIM per RGB channel averaged, 11x11 Gaussian "
      "window sigma 1.5, K1=0.01, K2=0.03, valid positions only; non-overlapping top-left "
      "patches; LPIPS not computed (external)";
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  for (const PatchRect& rect : grid.patches) {
    const ImageTensor pa = crop(a, rect);
    const ImageTensor pb = crop(b, rect);
    PatchScore score;
    score.rect = rect;
    score.psnr = psnr(pa, pb);
    score.psnr_capped = score.psnr >= kPsnrCapDb;
    score.ssim_window = ssim_window_for(rect);
    score.ssim = ssim(pa, pb, score.ssim_window);
    psnr_sum += score.psnr;
    ssim_sum += score.ssim;
    report.per_patch.push_back(score);
  }
  const double n = static_cast<double>(report.per_patch.size());
  report.mean_psnr = psnr_sum / n;
  report.mean_ssim = ssim_sum / n;
  return report;
}

}  // namespace residual_forge

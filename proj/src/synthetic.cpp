#include "residual_forge/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "residual_forge/error.hpp"
#include "residual_forge/image_io.hpp"

namespace residual_forge {
namespace {

// mt19937_64's output sequence is fixed by the standard; the distributions
// are not, so uniform doubles are derived by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

using Plane = std::vector<double>;

// Sum of random plane waves, rescaled so min = 0 and max = 1 exactly.
Plane smooth_field(Rng& rng, std::size_t size, int waves, double max_cycles) {
  std::vector<std::array<double, 4>> params(static_cast<std::size_t>(waves));
  for (auto& p : params) {
    p = {rng.uniform(-max_cycles, max_cycles), rng.uniform(-max_cycles, max_cycles),
         rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.3, 1.0)};
  }
  Plane field(size * size);
  const double inv = 1.0 / static_cast<double>(size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      double v = 0.0;
      for (const auto& [fx, fy, phase, amp] : params) {
        v += amp * std::cos(2.0 * std::numbers::pi *
                                (fx * static_cast<double>(c) + fy * static_cast<double>(r)) * inv +
                            phase);
      }
      field[r * size + c] = v;
    }
  }
  const auto [lo, hi] = std::minmax_element(field.begin(), field.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : field) v = range > 0.0 ? (v - min) / range : 0.5;
  return field;
}

// Gaussian bright spots in [0, 1], each with its own radius.
Plane light_field(Rng& rng, std::size_t size, int lights) {
  Plane field(size * size, 0.0);
  const double s = static_cast<double>(size);
  for (int k = 0; k < lights; ++k) {
    const double cy = rng.uniform(0.0, s);
    const double cx = rng.uniform(0.0, s);
    const double radius = rng.uniform(0.01, 0.04) * s;
    const double strength = rng.uniform(0.6, 1.0);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        const double dy = static_cast<double>(r) - cy;
        const double dx = static_cast<double>(c) - cx;
        field[r * size + c] += strength * std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
      }
    }
  }
  for (double& v : field) v = std::min(v, 1.0);
  return field;
}

void fill_channel(ImageTensor& img, std::size_t c, const Plane& values) {
  std::copy(values.begin(), values.end(), img.plane(c).begin());
}

ImagePair day_to_night(Rng& rng, std::size_t size) {
  ImagePair pair{{}, ImageTensor(size, size), ImageTensor(size, size)};
  const Plane scene = smooth_field(rng, size, 4, 2.0);
  const Plane day_detail = smooth_field(rng, size, 6, 6.0);
  const Plane lights = light_field(rng, size, 6);
  for (std::size_t c = 0; c < kChannels; ++c) {
    const double tint_day = rng.uniform(0.9, 1.0);
    const double tint_night = rng.uniform(0.7, 1.0);
    Plane in(size * size), out(size * size);
    for (std::size_t i = 0; i < in.size(); ++i) {
      in[i] = tint_day * (0.5 + 0.3 * scene[i] + 0.15 * day_detail[i]);
      out[i] = 0.05 + tint_night * (0.25 * scene[i] + 0.6 * lights[i]);
    }
    fill_channel(pair.input, c, in);
    fill_channel(pair.target, c, out);
  }
  return pair;
}

ImagePair feasible(Rng& rng, std::size_t size, double alpha) {
  ImagePair pair{{}, ImageTensor(size, size), ImageTensor(size, size)};
  for (std::size_t c = 0; c < kChannels; ++c) {
    const Plane in = smooth_field(rng, size, 5, 3.0);
    const Plane residual = smooth_field(rng, size, 5, 3.0);
    Plane blend(size * size);
    Plane scaled_in(size * size);
    for (std::size_t i = 0; i < blend.size(); ++i) {
      scaled_in[i] = static_cast<double>(quantize_unit(0.1 + 0.8 * in[i])) / 255.0;
      blend[i] = std::clamp(alpha * scaled_in[i] + (1.0 - alpha) * residual[i], 0.0, 1.0);
    }
    fill_channel(pair.input, c, scaled_in);
    fill_channel(pair.target, c, blend);
  }
  return pair;
}

ImagePair ramp(Rng& rng, std::size_t size) {
  ImagePair pair{{}, ImageTensor(size, size), ImageTensor(size, size)};
  const double denom = static_cast<double>(size - 1);
  for (std::size_t c = 0; c < kChannels; ++c) {
    const double in_gain = rng.uniform(0.5, 1.0);
    const double out_low = rng.uniform(0.0, 0.3);
    const double out_gain = rng.uniform(0.3, 0.7);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t x = 0; x < size; ++x) {
        pair.input.at(c, r, x) = in_gain * static_cast<double>(x) / denom;
        pair.target.at(c, r, x) = out_low + out_gain * static_cast<double>(r) / denom;
      }
    }
  }
  return pair;
}

}  // namespace

std::string_view to_string(CorpusKind kind) {
  switch (kind) {
    case CorpusKind::kDayToNight: return "day2night";
    case CorpusKind::kFeasible: return "feasible";
    case CorpusKind::kRamp: return "ramp";
  }
  return "unknown";
}

std::optional<CorpusKind> parse_corpus_kind(std::string_view text) {
  for (CorpusKind k : {CorpusKind::kDayToNight, CorpusKind::kFeasible, CorpusKind::kRamp}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

std::vector<ImagePair> make_synthetic_corpus(CorpusKind kind, std::size_t count, std::size_t size,
                                             std::uint64_t seed, double alpha) {
  if (size < kMinCorpusSize) {
    throw Error(ErrorCode::InvalidConfig, "synthetic images must be at least 32 px");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "alpha outside valid range [0, 1]");
  }
  Rng rng(seed);
  std::vector<ImagePair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ImagePair pair;
    switch (kind) {
      case CorpusKind::kDayToNight: pair = day_to_night(rng, size); break;
      case CorpusKind::kFeasible: pair = feasible(rng, size, alpha); break;
      case CorpusKind::kRamp: pair = ramp(rng, size); break;
    }
    char name[64];
    std::snprintf(name, sizeof name, "%s_%03zu", std::string(to_string(kind)).c_str(), i);
    pair.name = name;
    pair.input = quantize(pair.input);
    pair.target = quantize(pair.target);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::filesystem::path write_corpus(const std::vector<ImagePair>& pairs,
                                   const std::filesystem::path& dir, double alpha) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const std::filesystem::path spec_path = dir / "corpus.spec";
  std::ofstream spec(spec_path);
  if (!spec) throw Error(ErrorCode::IoError, "cannot write " + spec_path.string());
  spec << "# generated synthetic corpus\n";
  spec << "alpha = " << alpha << "\n";
  spec << "methods = ours, heuristic, sp2, spall\n";
  for (const ImagePair& pair : pairs) {
    const std::string input = pair.name + "_input.png";
    const std::string target = pair.name + "_target.png";
    save_image(pair.input, dir / input);
    save_image(pair.target, dir / target);
    spec << "pair = " << input << " " << target << "\n";
  }
  if (!spec) throw Error(ErrorCode::IoError, "failed writing " + spec_path.string());
  return spec_path;
}

}  // namespace residual_forge

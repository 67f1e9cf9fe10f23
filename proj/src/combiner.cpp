#include "residual_forge/combiner.hpp"

#include <string>

#include "residual_forge/error.hpp"

namespace residual_forge {

void CombinerParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "alpha " + std::to_string(alpha) + " outside valid range [0, 1]");
  }
}

Composite combine(const ImageTensor& input, const ImageTensor& residual,
                  const CombinerParams& params) {
  require_same_shape(input, residual, "combine(input, residual)");
  params.validate();
  ImageTensor blend = input;
  const auto in = input.values();
  const auto res = residual.values();
  auto out = blend.values();
  const double beta = 1.0 - params.alpha;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = params.alpha * in[i] + beta * res[i];
  auto clipped = clip_unit(blend);
  return {std::move(clipped.image), std::move(clipped.mask)};
}

ImageTensor combine_backward(const ImageTensor& upstream, const ClipMask& clip_mask,
                             const CombinerParams& params) {
  if (clip_mask.size() != upstream.size()) {
    throw Error(ErrorCode::ShapeMismatch, "combine_backward: mask has " +
                                              std::to_string(clip_mask.size()) +
                                              " entries, upstream has " +
                                              std::to_string(upstream.size()));
  }
  ImageTensor grad = upstream;
  const double beta = 1.0 - params.alpha;
  auto g = grad.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = clip_mask[i] ? beta * g[i] : 0.0;
  return grad;
}

}  // namespace residual_forge

#pragma once

#include "residual_forge/image.hpp"

namespace residual_forge {

/// Optical see-through combiner. alpha is the device's transmittance of the
/// real scene, so the display contributes (1 - alpha) of the residual.
struct CombinerParams {
  double alpha = 0.5;

  /// Throws Error{InvalidConfig} unless 0 <= alpha <= 1.
  void validate() const;
};

/// Output of combine(): the clipped composite plus the pre-clip pass mask
/// needed by combine_backward.
struct Composite {
  ImageTensor output;
  ClipMask clip_mask;
};

/// O = clip(alpha * input + (1 - alpha) * residual).
Composite combine(const ImageTensor& input, const ImageTensor& residual,
                  const CombinerParams& params);

/// Adjoint of combine() with respect to the residual:
/// (1 - alpha) * upstream where the blend was inside [0,1], 0 where clipped.
ImageTensor combine_backward(const ImageTensor& upstream, const ClipMask& clip_mask,
                             const CombinerParams& params);

}  // namespace residual_forge

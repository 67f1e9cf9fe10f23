#pragma once

#include <optional>
#include <string_view>

#include "residual_forge/combiner.hpp"
#include "residual_forge/image.hpp"
#include "residual_forge/optimizer.hpp"

namespace residual_forge {

enum class BaselineKind { kHeuristic, kStayPositive2Param, kStayPositiveAllPixels };

std::string_view to_string(BaselineKind kind);

inline constexpr double kDegenerateRange = 1e-9;

/// (x - min) / (max - min) over every element jointly. An image whose range
/// is below 1e-9 maps to all 0.5.
ImageTensor global_normalize(const ImageTensor& img);

/// Backpropagates `upstream` (d loss / d normalized) through global_normalize,
/// including the dependence of min and max on their arg-extreme elements.
ImageTensor global_normalize_backward(const ImageTensor& img, const ImageTensor& upstream);

/// Pointwise algebraic inversion of the combiner, clamped to [0, 1]:
/// clamp((target - alpha * input) / (1 - alpha), 0, 1).
/// Throws Error{DegenerateAlpha} when alpha == 1.
ImageTensor heuristic_residual(const ImageTensor& input, const ImageTensor& target,
                               const CombinerParams& params);

/// Loss of the global-normalization objective at a given residual:
/// gradient_term holds mean((N(O) - N(P))^2), constraint_term the
/// out-of-range mass of the residual.
LossBreakdown staypositive_loss(const ImageTensor& input, const ImageTensor& residual,
                                const ImageTensor& target, const CombinerParams& params,
                                const LossWeights& weights);

struct StayPositiveResult {
  /// Raw residual parameters (for the 2-parameter variant, the affine map of
  /// the target before clamping).
  ImageTensor residual;
  /// Composite from the residual clamped into [bound_low, bound_high].
  ImageTensor output;
  LossBreakdown loss;
  OptimizationTrace trace;
  /// Gain and offset for the 2-parameter variant.
  std::optional<std::pair<double, double>> gain_offset;
};

/// Minimizes mean((N(O) - N(P))^2) + lambda_const * constraint(R).
/// kStayPositiveAllPixels optimizes every residual element from zero;
/// kStayPositive2Param optimizes R = clamp(s * P + t, a, b) from (s, t) = (1, 0).
/// Runs with kAdam or kSgd only (see config_for()); kApg throws InvalidConfig.
/// Throws Error{InvalidConfig} for kHeuristic.
StayPositiveResult staypositive_optimize(const ImageTensor& input, const ImageTensor& target,
                                         BaselineKind kind, const OptimizerConfig& config);

}  // namespace residual_forge

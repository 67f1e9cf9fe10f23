#pragma once

#include "residual_forge/combiner.hpp"
#include "residual_forge/image.hpp"
#include "residual_forge/sobel.hpp"

namespace residual_forge {

/// How the stacked six-plane Sobel discrepancy is reduced to a scalar.
enum class GradientNorm {
  /// Mean of squared differences over all 6*H*W elements. Smooth everywhere.
  kMeanSquared,
  /// ||dx||_2 + ||dy||_2, each norm taken over the three channel planes of one
  /// direction. Non-differentiable at zero; kept for comparison runs.
  kEuclideanSum,
};

struct LossWeights {
  double lambda_const = 1.0;
  double lambda_grad = 1.0;
  double bound_low = 0.0;
  double bound_high = 1.0;
  GradientNorm norm = GradientNorm::kMeanSquared;

  /// Throws InvalidBounds when bound_low >= bound_high, InvalidConfig for
  /// negative or all-zero weights.
  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double constraint_term = 0.0;
  double gradient_term = 0.0;
};

/// Total out-of-range mass: sum over all elements of |clamp(R, a, b) - R|.
double constraint_loss(const ImageTensor& residual, double a, double b);

/// Subgradient of constraint_loss: +1 above b, -1 below a, 0 inside.
ImageTensor constraint_loss_grad(const ImageTensor& residual, double a, double b);

double gradient_loss(const ImageTensor& output, const ImageTensor& target,
                     GradientNorm norm = GradientNorm::kMeanSquared);

/// gradient_loss against precomputed sobel_forward(target).
double gradient_loss(const ImageTensor& output, const GradientField& target_gradients,
                     GradientNorm norm = GradientNorm::kMeanSquared);

ImageTensor gradient_loss_grad(const ImageTensor& output, const ImageTensor& target,
                               GradientNorm norm = GradientNorm::kMeanSquared);

LossBreakdown total_loss(const ImageTensor& input, const ImageTensor& residual,
                         const ImageTensor& target, const CombinerParams& params,
                         const LossWeights& weights);

ImageTensor total_loss_grad(const ImageTensor& input, const ImageTensor& residual,
                            const ImageTensor& target, const CombinerParams& params,
                            const LossWeights& weights);

/// Loss and gradient from a single forward pass. The optimizer uses this;
/// total_loss/total_loss_grad are thin wrappers.
struct LossEvaluation {
  LossBreakdown loss;
  ImageTensor grad;
};

LossEvaluation evaluate_total(const ImageTensor& input, const ImageTensor& residual,
                              const ImageTensor& target, const CombinerParams& params,
                              const LossWeights& weights);

/// Same as above with sobel_forward(target) precomputed, for loops that
/// evaluate against a fixed target many times. With include_constraint_grad
/// false the returned gradient covers only the lambda_grad term (the loss
/// still reports every term); proximal methods handle the constraint apart.
LossEvaluation evaluate_total(const ImageTensor& input, const ImageTensor& residual,
                              const GradientField& target_gradients,
                              const CombinerParams& params, const LossWeights& weights,
                              bool include_constraint_grad = true);

}  // namespace residual_forge

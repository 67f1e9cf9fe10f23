#include "residual_forge/losses.hpp"

#include <cmath>
#include <string>

#include "residual_forge/error.hpp"
#include "residual_forge/sobel.hpp"

namespace residual_forge {
namespace {

void require_bounds(double a, double b) {
  if (!(a < b)) {
    throw Error(ErrorCode::InvalidBounds,
                "bound_low " + std::to_string(a) + " must be below bound_high " + std::to_string(b));
  }
}

// sobel_forward(output) - target_gradients, in place on the output's field.
GradientField gradient_difference(const ImageTensor& output, const GradientField& target_gradients) {
  if (output.height() != target_gradients.height() || output.width() != target_gradients.width()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient loss: output and target differ in size");
  }
  GradientField diff = sobel_forward(output);
  auto d = diff.values();
  const auto t = target_gradients.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= t[i];
  return diff;
}

double direction_norm(const GradientField& diff, std::size_t dir) {
  double sum = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (double v : diff.plane(GradientField::plane_index(dir, c))) sum += v * v;
  }
  return std::sqrt(sum);
}

double reduce_difference(const GradientField& diff, GradientNorm norm) {
  if (norm == GradientNorm::kEuclideanSum) return direction_norm(diff, 0) + direction_norm(diff, 1);
  double sum = 0.0;
  for (double v : diff.values()) sum += v * v;
  return sum / static_cast<double>(diff.size());
}

// Overwrites diff with d(loss)/d(sobel response), then pulls it back to image space.
ImageTensor backprop_difference(GradientField diff, GradientNorm norm) {
  if (norm == GradientNorm::kEuclideanSum) {
    for (std::size_t dir = 0; dir < 2; ++dir) {
      const double n = direction_norm(diff, dir);
      const double scale = n > 0.0 ? 1.0 / n : 0.0;
      for (std::size_t c = 0; c < kChannels; ++c) {
        for (double& v : diff.plane(GradientField::plane_index(dir, c))) v *= scale;
      }
    }
  } else {
    const double scale = 2.0 / static_cast<double>(diff.size());
    for (double& v : diff.values()) v *= scale;
  }
  return sobel_backward(diff);
}

}  // namespace

void LossWeights::validate() const {
  require_bounds(bound_low, bound_high);
  if (!(lambda_const >= 0.0) || !(lambda_grad >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "loss weights must be non-negative");
  }
  if (lambda_const == 0.0 && lambda_grad == 0.0) {
    throw Error(ErrorCode::InvalidConfig, "lambda_const and lambda_grad cannot both be zero");
  }
}

double constraint_loss(const ImageTensor& residual, double a, double b) {
  require_bounds(a, b);
  double mass = 0.0;
  for (double v : residual.values()) {
    if (v > b) {
      mass += v - b;
    } else if (v < a) {
      mass += a - v;
    }
  }
  return mass;
}

ImageTensor constraint_loss_grad(const ImageTensor& residual, double a, double b) {
  require_bounds(a, b);
  ImageTensor grad = residual;
  for (double& v : grad.values()) v = v > b ? 1.0 : (v < a ? -1.0 : 0.0);
  return grad;
}

double gradient_loss(const ImageTensor& output, const ImageTensor& target, GradientNorm norm) {
  require_same_shape(output, target, "gradient_loss(output, target)");
  return reduce_difference(gradient_difference(output, sobel_forward(target)), norm);
}

double gradient_loss(const ImageTensor& output, const GradientField& target_gradients,
                     GradientNorm norm) {
  return reduce_difference(gradient_difference(output, target_gradients), norm);
}

ImageTensor gradient_loss_grad(const ImageTensor& output, const ImageTensor& target,
                               GradientNorm norm) {
  require_same_shape(output, target, "gradient_loss_grad(output, target)");
  return backprop_difference(gradient_difference(output, sobel_forward(target)), norm);
}

LossEvaluation evaluate_total(const ImageTensor& input, const ImageTensor& residual,
                              const GradientField& target_gradients,
                              const CombinerParams& params, const LossWeights& weights,
                              bool include_constraint_grad) {
  require_same_shape(input, residual, "total_loss(input, residual)");
  weights.validate();
  const Composite composite = combine(input, residual, params);
  GradientField diff = gradient_difference(composite.output, target_gradients);

  LossEvaluation eval;
  eval.loss.constraint_term = constraint_loss(residual, weights.bound_low, weights.bound_high);
  eval.loss.gradient_term = reduce_difference(diff, weights.norm);
  eval.loss.total = weights.lambda_const * eval.loss.constraint_term +
                    weights.lambda_grad * eval.loss.gradient_term;

  const ImageTensor through_combiner = combine_backward(
      backprop_difference(std::move(diff), weights.norm), composite.clip_mask, params);
  const auto upstream = through_combiner.values();
  const double a = weights.bound_low;
  const double b = weights.bound_high;
  const double lambda_const = include_constraint_grad ? weights.lambda_const : 0.0;
  eval.grad = residual;
  auto g = eval.grad.values();
  const auto r = residual.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double sub = r[i] > b ? 1.0 : (r[i] < a ? -1.0 : 0.0);
    g[i] = lambda_const * sub + weights.lambda_grad * upstream[i];
  }
  return eval;
}

LossEvaluation evaluate_total(const ImageTensor& input, const ImageTensor& residual,
                              const ImageTensor& target, const CombinerParams& params,
                              const LossWeights& weights) {
  require_same_shape(input, target, "total_loss(input, target)");
  return evaluate_total(input, residual, sobel_forward(target), params, weights);
}

LossBreakdown total_loss(const ImageTensor& input, const ImageTensor& residual,
                         const ImageTensor& target, const CombinerParams& params,
                         const LossWeights& weights) {
  return evaluate_total(input, residual, target, params, weights).loss;
}

ImageTensor total_loss_grad(const ImageTensor& input, const ImageTensor& residual,
                            const ImageTensor& target, const CombinerParams& params,
                            const LossWeights& weights) {
  return evaluate_total(input, residual, target, params, weights).grad;
}

}  // namespace residual_forge

#include "residual_forge/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "residual_forge/error.hpp"
#include "residual_forge/losses.hpp"

namespace residual_forge {
namespace {

struct Extremes {
  std::size_t argmin = 0;
  std::size_t argmax = 0;
  double min = 0.0;
  double max = 0.0;
};

// First occurrence wins on ties, which fixes the subgradient choice.
Extremes find_extremes(std::span<const double> values) {
  Extremes e{0, 0, values[0], values[0]};
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < e.min) {
      e.min = values[i];
      e.argmin = i;
    }
    if (values[i] > e.max) {
      e.max = values[i];
      e.argmax = i;
    }
  }
  return e;
}

struct NormalizedDistance {
  double value = 0.0;
  ImageTensor grad;  // d value / d output
};

// mean((N(output) - normalized_target)^2) and its gradient w.r.t. output.
NormalizedDistance normalized_distance(const ImageTensor& output,
                                       const ImageTensor& normalized_target) {
  const ImageTensor normalized = global_normalize(output);
  ImageTensor upstream = normalized;
  const auto n = normalized.values();
  const auto t = normalized_target.values();
  auto u = upstream.values();
  const double count = static_cast<double>(n.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double d = n[i] - t[i];
    sum += d * d;
    u[i] = 2.0 * d / count;
  }
  return {sum / count, global_normalize_backward(output, upstream)};
}

}  // namespace

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kHeuristic: return "heuristic";
    case BaselineKind::kStayPositive2Param: return "sp2";
    case BaselineKind::kStayPositiveAllPixels: return "spall";
  }
  return "unknown";
}

ImageTensor global_normalize(const ImageTensor& img) {
  ImageTensor out = img;
  if (img.empty()) return out;
  const Extremes e = find_extremes(img.values());
  const double range = e.max - e.min;
  if (range < kDegenerateRange) {
    for (double& v : out.values()) v = 0.5;
    return out;
  }
  for (double& v : out.values()) v = (v - e.min) / range;
  return out;
}

ImageTensor global_normalize_backward(const ImageTensor& img, const ImageTensor& upstream) {
  require_same_shape(img, upstream, "global_normalize_backward");
  ImageTensor grad(img.height(), img.width(), 0.0);
  const Extremes e = find_extremes(img.values());
  const double range = e.max - e.min;
  if (range < kDegenerateRange) return grad;

  // n_i = (x_i - m) / (M - m):  dn_i/dx_i = 1/s,  dn_i/dm = (n_i - 1)/s,  dn_i/dM = -n_i/s.
  const auto x = img.values();
  const auto u = upstream.values();
  auto g = grad.values();
  double d_min = 0.0;
  double d_max = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = (x[i] - e.min) / range;
    g[i] = u[i] / range;
    d_min += u[i] * (n - 1.0) / range;
    d_max -= u[i] * n / range;
  }
  g[e.argmin] += d_min;
  g[e.argmax] += d_max;
  return grad;
}

ImageTensor heuristic_residual(const ImageTensor& input, const ImageTensor& target,
                               const CombinerParams& params) {
  require_same_shape(input, target, "heuristic_residual(input, target)");
  params.validate();
  if (params.alpha >= 1.0) {
    throw Error(ErrorCode::DegenerateAlpha, "alpha = 1 leaves the residual no influence");
  }
  ImageTensor residual = target;
  const auto in = input.values();
  auto r = residual.values();
  const double beta = 1.0 - params.alpha;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = std::clamp((r[i] - params.alpha * in[i]) / beta, 0.0, 1.0);
  }
  return residual;
}

LossBreakdown staypositive_loss(const ImageTensor& input, const ImageTensor& residual,
                                const ImageTensor& target, const CombinerParams& params,
                                const LossWeights& weights) {
  require_same_shape(input, target, "staypositive_loss(input, target)");
  weights.validate();
  const Composite composite = combine(input, residual, params);
  LossBreakdown loss;
  loss.gradient_term =
      normalized_distance(composite.output, global_normalize(target)).value;
  loss.constraint_term = constraint_loss(residual, weights.bound_low, weights.bound_high);
  loss.total = weights.lambda_const * loss.constraint_term + weights.lambda_grad * loss.gradient_term;
  return loss;
}

StayPositiveResult staypositive_optimize(const ImageTensor& input, const ImageTensor& target,
                                         BaselineKind kind, const OptimizerConfig& config) {
  require_same_shape(input, target, "staypositive_optimize(input, target)");
  config.validate();
  if (kind == BaselineKind::kHeuristic) {
    throw Error(ErrorCode::InvalidConfig, "staypositive_optimize needs a StayPositive variant");
  }
  if (config.method == UpdateRule::kApg) {
    throw Error(ErrorCode::InvalidConfig,
                "the normalized objective has no fixed Lipschitz constant; use adam or sgd");
  }
  const LossWeights& w = config.weights;
  const CombinerParams& params = config.combiner;
  const ImageTensor normalized_target = global_normalize(target);
  const double a = w.bound_low;
  const double b = w.bound_high;

  StayPositiveResult result;
  ImageTensor residual(input.height(), input.width(), 0.0);

  if (kind == BaselineKind::kStayPositiveAllPixels) {
    MinimizeProblem problem;
    problem.penalty = BoxPenalty{w.lambda_const, a, b};
    problem.objective = [&](std::span<const double> theta, std::span<double> grad) {
      std::copy(theta.begin(), theta.end(), residual.values().begin());
      const Composite composite = combine(input, residual, params);
      const NormalizedDistance dist = normalized_distance(composite.output, normalized_target);
      const ImageTensor back = combine_backward(dist.grad, composite.clip_mask, params);
      const auto up = back.values();
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = w.lambda_grad * up[i];
      LossBreakdown loss;
      loss.gradient_term = dist.value;
      loss.constraint_term = constraint_loss(residual, a, b);
      loss.total = w.lambda_const * loss.constraint_term + w.lambda_grad * loss.gradient_term;
      return loss;
    };
    MinimizeResult run = minimize(std::vector<double>(residual.size(), 0.0), problem, config);
    std::copy(run.best_params.begin(), run.best_params.end(), residual.values().begin());
    result.loss = run.best_loss;
    result.trace = std::move(run.trace);
  } else {
    // theta = (gain, offset); raw residual = gain * target + offset.
    const auto p = target.values();
    ImageTensor raw = residual;
    MinimizeProblem problem;
    problem.objective = [&](std::span<const double> theta, std::span<double> grad) {
      const double gain = theta[0];
      const double offset = theta[1];
      auto rv = raw.values();
      auto cv = residual.values();
      for (std::size_t i = 0; i < rv.size(); ++i) {
        rv[i] = gain * p[i] + offset;
        cv[i] = std::clamp(rv[i], a, b);
      }
      const Composite composite = combine(input, residual, params);
      const NormalizedDistance dist = normalized_distance(composite.output, normalized_target);
      const ImageTensor back = combine_backward(dist.grad, composite.clip_mask, params);
      const auto up = back.values();
      double d_gain = 0.0;
      double d_offset = 0.0;
      for (std::size_t i = 0; i < rv.size(); ++i) {
        const bool inside = rv[i] >= a && rv[i] <= b;
        const double sub = rv[i] > b ? 1.0 : (rv[i] < a ? -1.0 : 0.0);
        const double d_raw = w.lambda_const * sub + (inside ? w.lambda_grad * up[i] : 0.0);
        d_gain += d_raw * p[i];
        d_offset += d_raw;
      }
      grad[0] = d_gain;
      grad[1] = d_offset;
      LossBreakdown loss;
      loss.gradient_term = dist.value;
      loss.constraint_term = constraint_loss(raw, a, b);
      loss.total = w.lambda_const * loss.constraint_term + w.lambda_grad * loss.gradient_term;
      return loss;
    };
    MinimizeResult run = minimize({1.0, 0.0}, problem, config);
    const double gain = run.best_params[0];
    const double offset = run.best_params[1];
    auto rv = residual.values();
    for (std::size_t i = 0; i < rv.size(); ++i) rv[i] = gain * p[i] + offset;
    result.gain_offset = std::make_pair(gain, offset);
    result.loss = run.best_loss;
    result.trace = std::move(run.trace);
  }

  result.output = combine(input, clamp_values(residual, a, b), params).output;
  result.residual = std::move(residual);
  return result;
}

}  // namespace residual_forge

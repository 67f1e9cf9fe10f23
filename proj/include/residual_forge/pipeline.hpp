#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>

#include "residual_forge/baselines.hpp"
#include "residual_forge/image.hpp"
#include "residual_forge/losses.hpp"
#include "residual_forge/metrics.hpp"
#include "residual_forge/optimizer.hpp"

namespace residual_forge {

/// Every way of producing a residual that the tools can run and compare.
enum class Method { kOurs, kHeuristic, kSp2, kSpAll };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view text);

inline constexpr std::size_t kDefaultPatchSize = 150;

/// User-facing knobs shared by every method. Unset optionals fall back to the
/// selected optimizer's defaults.
struct RunSettings {
  double alpha = 0.5;
  std::size_t iterations = 2000;
  /// Step size for the gradient-matching method (relative under apg).
  std::optional<double> lr;
  /// Adam step size for the StayPositive baselines.
  std::optional<double> baseline_lr;
  /// Update rule for the gradient-matching method; apg unless the Euclidean
  /// norm is selected, which needs adam.
  std::optional<UpdateRule> optimizer;
  double lambda_const = 1.0;
  double lambda_grad = 1.0;
  double bound_low = 0.0;
  double bound_high = 1.0;
  GradientNorm norm = GradientNorm::kMeanSquared;
  std::size_t patch_size = kDefaultPatchSize;

  /// Throws InvalidConfig/InvalidBounds naming the offending setting.
  void validate() const;
};

/// Resolved optimizer configuration for one method. The heuristic ignores
/// everything but the combiner and bounds.
OptimizerConfig config_for_method(Method method, const RunSettings& settings);

struct MethodOutcome {
  Method method = Method::kOurs;
  OptimizerConfig config;
  /// Raw parameters as optimized (clamped already for the heuristic).
  ImageTensor residual;
  /// Composite of the hard-clamped residual.
  ImageTensor output;
  /// The method's own objective at the returned residual. For the heuristic
  /// this is the gradient-matching objective, evaluated for reference.
  LossBreakdown loss;
  std::string_view objective;
  OptimizationTrace trace;
  RealizedResidual realized;
  /// Patch metrics of the 8-bit composite against the target.
  MetricsReport metrics;
  double duration_ms = 0.0;
  std::optional<std::pair<double, double>> gain_offset;
};

MethodOutcome run_method(Method method, const ImageTensor& input, const ImageTensor& target,
                         const RunSettings& settings);

}  // namespace residual_forge

#include "residual_forge/pipeline.hpp"

#include <chrono>
#include <sstream>
#include <string>

#include "residual_forge/error.hpp"
#include "residual_forge/image_io.hpp"

namespace residual_forge {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kOurs: return "ours";
    case Method::kHeuristic: return "heuristic";
    case Method::kSp2: return "sp2";
    case Method::kSpAll: return "spall";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view text) {
  for (Method m : {Method::kOurs, Method::kHeuristic, Method::kSp2, Method::kSpAll}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

void RunSettings::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    std::ostringstream msg;
    msg << "--alpha " << alpha << " is outside the valid range [0, 1]";
    fail(msg.str());
  }
  if (iterations < 1) fail("--iterations must be at least 1");
  if (lr && !(*lr >= 0.0)) fail("--lr must be >= 0");
  if (baseline_lr && !(*baseline_lr >= 0.0)) fail("--baseline-lr must be >= 0");
  if (!(lambda_const >= 0.0)) fail("--lambda-const must be >= 0");
  if (!(lambda_grad >= 0.0)) fail("--lambda-grad must be >= 0");
  if (lambda_const == 0.0 && lambda_grad == 0.0) {
    fail("--lambda-const and --lambda-grad cannot both be 0");
  }
  if (!(bound_low < bound_high)) {
    throw Error(ErrorCode::InvalidBounds, "--bound-high must exceed the lower bound " +
                                              std::to_string(bound_low));
  }
  if (patch_size < kMinPatchSide) fail("--patch-size must be at least 8");
  if (optimizer == UpdateRule::kApg && norm != GradientNorm::kMeanSquared) {
    fail("--optimizer apg requires --grad-norm mse");
  }
}

OptimizerConfig config_for_method(Method method, const RunSettings& settings) {
  UpdateRule rule = UpdateRule::kAdam;
  std::optional<double> step = settings.baseline_lr;
  if (method == Method::kOurs) {
    rule = settings.optimizer.value_or(settings.norm == GradientNorm::kMeanSquared
                                           ? UpdateRule::kApg
                                           : UpdateRule::kAdam);
    step = settings.lr;
  }
  OptimizerConfig config = config_for(rule);
  if (step) config.step_size = *step;
  config.iterations = settings.iterations;
  config.combiner.alpha = settings.alpha;
  config.weights.lambda_const = settings.lambda_const;
  config.weights.lambda_grad = settings.lambda_grad;
  config.weights.bound_low = settings.bound_low;
  config.weights.bound_high = settings.bound_high;
  config.weights.norm = settings.norm;
  return config;
}

MethodOutcome run_method(Method method, const ImageTensor& input, const ImageTensor& target,
                         const RunSettings& settings) {
  settings.validate();
  require_same_shape(input, target, "input vs target");
  MethodOutcome out;
  out.method = method;
  out.config = config_for_method(method, settings);
  const auto start = std::chrono::steady_clock::now();

  switch (method) {
    case Method::kOurs: {
      OptimizationResult r = optimize_residual(input, target, out.config);
      out.residual = std::move(r.residual);
      out.output = std::move(r.output);
      out.loss = r.loss;
      out.trace = std::move(r.trace);
      out.objective = "gradient";
      break;
    }
    case Method::kHeuristic: {
      out.residual = heuristic_residual(input, target, out.config.combiner);
      out.output = combine(input, out.residual, out.config.combiner).output;
      out.loss = total_loss(input, out.residual, target, out.config.combiner, out.config.weights);
      out.trace.samples.push_back({0, out.loss, out.loss.total});
      out.trace.initial_total = out.loss.total;
      out.trace.final_total = out.loss.total;
      out.objective = "gradient";
      break;
    }
    case Method::kSp2:
    case Method::kSpAll: {
      const BaselineKind kind = method == Method::kSp2 ? BaselineKind::kStayPositive2Param
                                                       : BaselineKind::kStayPositiveAllPixels;
      StayPositiveResult r = staypositive_optimize(input, target, kind, out.config);
      out.residual = std::move(r.residual);
      out.output = std::move(r.output);
      out.loss = r.loss;
      out.trace = std::move(r.trace);
      out.gain_offset = r.gain_offset;
      out.objective = "normalized";
      break;
    }
  }
  out.realized = realized_residual(out.residual, out.config.weights);
  out.duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  out.metrics = patch_metrics(quantize(out.output), target, settings.patch_size,
                              std::string(to_string(method)));
  return out;
}

}  // namespace residual_forge

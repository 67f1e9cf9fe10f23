#include "residual_forge/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "residual_forge/error.hpp"
#include "residual_forge/sobel.hpp"

namespace residual_forge {

std::string_view to_string(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::kApg: return "apg";
    case UpdateRule::kAdam: return "adam";
    case UpdateRule::kSgd: return "sgd";
  }
  return "unknown";
}

std::optional<UpdateRule> parse_update_rule(std::string_view text) {
  for (UpdateRule r : {UpdateRule::kApg, UpdateRule::kAdam, UpdateRule::kSgd}) {
    if (text == to_string(r)) return r;
  }
  return std::nullopt;
}

double default_step_size(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::kApg: return 1.0;
    case UpdateRule::kAdam: return 0.05;
    case UpdateRule::kSgd: return 0.05;
  }
  return 1.0;
}

OptimizerConfig config_for(UpdateRule rule) {
  OptimizerConfig config;
  config.method = rule;
  config.step_size = default_step_size(rule);
  return config;
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::kBudget ? "budget" : "converged";
}

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (iterations < 1) fail("iterations must be at least 1");
  if (!(step_size >= 0.0) || !std::isfinite(step_size)) fail("step_size must be finite and >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (!(convergence_tol >= 0.0)) fail("convergence_tol must be >= 0");
  if (convergence_window < 1) fail("convergence_window must be at least 1");
  if (trace_every < 1) fail("trace_every must be at least 1");
  weights.validate();
  combiner.validate();
}

AdamState::AdamState(std::size_t size, const OptimizerConfig& config)
    : beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_eps),
      m_(size, 0.0),
      v_(size, 0.0) {}

void AdamState::step(std::span<double> params, std::span<const double> grad, double step_size) {
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    params[i] -= step_size * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

void BoxPenalty::add_subgradient(std::span<const double> params, std::span<double> grad) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i] > high) {
      grad[i] += weight;
    } else if (params[i] < low) {
      grad[i] -= weight;
    }
  }
}

void BoxPenalty::prox(std::span<double> params, double step) const {
  const double shrink = step * weight;
  for (double& v : params) {
    if (v > high) {
      v = std::max(high, v - shrink);
    } else if (v < low) {
      v = std::min(low, v + shrink);
    }
  }
}

bool ConvergenceMonitor::update(double best_total) {
  history_.push_back(best_total);
  if (best_total <= 0.0) return true;
  if (history_.size() <= window_) return false;
  const double previous = history_[history_.size() - 1 - window_];
  return (previous - best_total) / previous < tolerance_;
}

MinimizeResult minimize(std::vector<double> start, const MinimizeProblem& problem,
                        const OptimizerConfig& config) {
  config.validate();
  if (config.method == UpdateRule::kApg && !(problem.lipschitz && *problem.lipschitz > 0.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "apg needs a Lipschitz constant; this objective supports adam or sgd only");
  }
  const std::size_t n = start.size();
  // `point` is where the objective is evaluated: the parameters themselves for
  // adam/sgd, the extrapolated point y for apg.
  std::vector<double> point = std::move(start);
  std::vector<double> grad(n);
  std::vector<double> anchor = point;  // apg: previous prox iterate x_k
  std::vector<double> next(n);
  double momentum = 1.0;
  std::optional<AdamState> adam;
  if (config.method == UpdateRule::kAdam) adam.emplace(n, config);

  auto evaluate = [&](std::span<const double> at) {
    LossBreakdown loss = problem.objective(at, grad);
    if (problem.penalty && config.method != UpdateRule::kApg) {
      problem.penalty->add_subgradient(at, grad);
    }
    return loss;
  };

  LossBreakdown loss = evaluate(point);
  MinimizeResult result;
  OptimizationTrace& trace = result.trace;
  trace.initial_total = loss.total;
  trace.samples.push_back({0, loss, loss.total});
  result.best_params = point;
  result.best_loss = loss;

  auto consider = [&](const std::vector<double>& params, const LossBreakdown& l) {
    if (l.total < result.best_loss.total) {
      result.best_loss = l;
      result.best_params = params;
    }
  };

  std::vector<double> scratch;
  auto value_at = [&](std::span<const double> at) {
    if (problem.value) return problem.value(at);
    scratch.resize(n);
    return problem.objective(at, scratch);
  };

  ConvergenceMonitor monitor(config.convergence_tol, config.convergence_window);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    // Scored iterate of this step: the parameters for adam/sgd, the prox
    // point x_k for apg (the extrapolated y_k can sit far outside the box).
    const std::vector<double>* scored = &point;
    switch (config.method) {
      case UpdateRule::kSgd:
        for (std::size_t i = 0; i < n; ++i) point[i] -= config.step_size * grad[i];
        break;
      case UpdateRule::kAdam:
        adam->step(point, grad, config.step_size);
        break;
      case UpdateRule::kApg: {
        const double step = config.step_size / *problem.lipschitz;
        for (std::size_t i = 0; i < n; ++i) next[i] = point[i] - step * grad[i];
        if (problem.penalty) problem.penalty->prox(next, step);
        // Restart when the step and the momentum direction disagree.
        double agreement = 0.0;
        for (std::size_t i = 0; i < n; ++i) agreement += (point[i] - next[i]) * (next[i] - anchor[i]);
        const double next_momentum =
            agreement > 0.0 ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = agreement > 0.0 ? 0.0 : (momentum - 1.0) / next_momentum;
        for (std::size_t i = 0; i < n; ++i) point[i] = next[i] + beta * (next[i] - anchor[i]);
        anchor.swap(next);
        momentum = next_momentum;
        scored = &anchor;
        break;
      }
    }
    if (config.method == UpdateRule::kApg) {
      loss = value_at(anchor);
      evaluate(point);
    } else {
      loss = evaluate(point);
    }
    consider(*scored, loss);
    trace.iterations_run = it;
    const bool converged = monitor.update(result.best_loss.total);
    if (it % config.trace_every == 0 || it == config.iterations || converged) {
      trace.samples.push_back({it, loss, result.best_loss.total});
    }
    if (converged) {
      trace.stop_reason = StopReason::kConverged;
      break;
    }
  }
  trace.final_total = result.best_loss.total;
  return result;
}

double sobel_gram_norm(std::size_t height, std::size_t width) {
  ImageTensor v(height, width);
  auto values = v.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::sin(0.7 * static_cast<double>(i) + 1.3);
  }
  double estimate = 0.0;
  for (int k = 0; k < 60; ++k) {
    ImageTensor w = sobel_backward(sobel_forward(v));
    double w_norm = 0.0;
    double v_norm = 0.0;
    for (double x : w.values()) w_norm += x * x;
    for (double x : v.values()) v_norm += x * x;
    w_norm = std::sqrt(w_norm);
    if (w_norm == 0.0) break;
    estimate = w_norm / std::sqrt(v_norm);
    auto wv = w.values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = wv[i] / w_norm;
  }
  return estimate;
}

OptimizationResult optimize_residual(const ImageTensor& input, const ImageTensor& target,
                                     const OptimizerConfig& config) {
  require_same_shape(input, target, "optimize_residual(input, target)");
  config.validate();
  const LossWeights& w = config.weights;
  if (config.method == UpdateRule::kApg && w.norm != GradientNorm::kMeanSquared) {
    throw Error(ErrorCode::InvalidConfig,
                "apg needs the mean-squared gradient norm; use adam or sgd with the euclidean norm");
  }

  const GradientField target_gradients = sobel_forward(target);
  ImageTensor residual(input.height(), input.width(), 0.0);
  MinimizeProblem problem;
  problem.penalty = BoxPenalty{w.lambda_const, w.bound_low, w.bound_high};
  problem.objective = [&](std::span<const double> params, std::span<double> grad) {
    std::copy(params.begin(), params.end(), residual.values().begin());
    const LossEvaluation eval = evaluate_total(input, residual, target_gradients,
                                               config.combiner, w, false);
    std::copy(eval.grad.values().begin(), eval.grad.values().end(), grad.begin());
    return eval.loss;
  };
  problem.value = [&](std::span<const double> params) {
    std::copy(params.begin(), params.end(), residual.values().begin());
    const Composite composite = combine(input, residual, config.combiner);
    LossBreakdown loss;
    loss.constraint_term = constraint_loss(residual, w.bound_low, w.bound_high);
    loss.gradient_term = gradient_loss(composite.output, target_gradients, w.norm);
    loss.total = w.lambda_const * loss.constraint_term + w.lambda_grad * loss.gradient_term;
    return loss;
  };
  const double beta = 1.0 - config.combiner.alpha;
  const double lipschitz = w.lambda_grad * beta * beta * 2.0 /
                           static_cast<double>(kGradientPlanes * input.plane_size()) *
                           sobel_gram_norm(input.height(), input.width()) * 1.02;
  // alpha == 1 or lambda_grad == 0 leaves no smooth curvature; any step works.
  problem.lipschitz = lipschitz > 0.0 ? lipschitz : 1.0;

  MinimizeResult run = minimize(
      std::vector<double>(residual.values().begin(), residual.values().end()), problem, config);

  OptimizationResult result;
  std::copy(run.best_params.begin(), run.best_params.end(), residual.values().begin());
  const ImageTensor clamped = clamp_values(residual, w.bound_low, w.bound_high);
  result.output = combine(input, clamped, config.combiner).output;
  result.residual = std::move(residual);
  result.loss = run.best_loss;
  result.trace = std::move(run.trace);
  return result;
}

RealizedResidual realized_residual(const ImageTensor& residual, const LossWeights& weights) {
  const double a = weights.bound_low;
  const double b = weights.bound_high;
  RealizedResidual out;
  out.constraint_mass = constraint_loss(residual, a, b);
  for (double v : residual.values()) {
    out.max_violation = std::max({out.max_violation, v - b, a - v});
  }
  out.residual = clamp_values(residual, a, b);
  return out;
}

}  // namespace residual_forge

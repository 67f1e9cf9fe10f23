#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "residual_forge/combiner.hpp"
#include "residual_forge/image.hpp"
#include "residual_forge/losses.hpp"

namespace residual_forge {

/// kApg: accelerated proximal gradient with adaptive restart. The box
///       constraint term is handled by its proximal map, the smooth term by a
///       step of step_size / L, L being the smooth term's Lipschitz constant.
/// kAdam: Adam on the full (sub)gradient, absolute step_size.
/// kSgd: plain (sub)gradient descent, absolute step_size.
enum class UpdateRule { kApg, kAdam, kSgd };

std::string_view to_string(UpdateRule rule);
std::optional<UpdateRule> parse_update_rule(std::string_view text);

/// Step size a rule is tuned for when the caller does not pick one.
double default_step_size(UpdateRule rule);

struct OptimizerConfig {
  std::size_t iterations = 2000;
  /// Relative to 1/L for kApg; absolute for kAdam and kSgd.
  double step_size = 1.0;
  UpdateRule method = UpdateRule::kApg;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Stop once the best total loss improves by less than this fraction over
  /// the last convergence_window iterations.
  double convergence_tol = 1e-7;
  std::size_t convergence_window = 50;
  /// Trace sampling period.
  std::size_t trace_every = 10;
  LossWeights weights;
  CombinerParams combiner;

  /// Throws Error{InvalidConfig} (or InvalidBounds) on any violated range.
  void validate() const;
};

/// Config with the given update rule and that rule's default step size.
OptimizerConfig config_for(UpdateRule rule);

enum class StopReason { kBudget, kConverged };

std::string_view to_string(StopReason reason);

struct TraceSample {
  std::size_t iteration = 0;
  LossBreakdown loss;
  double best_total = 0.0;
};

struct OptimizationTrace {
  std::vector<TraceSample> samples;
  std::size_t iterations_run = 0;
  StopReason stop_reason = StopReason::kBudget;
  /// Total loss of the starting point (iteration 0).
  double initial_total = 0.0;
  /// Total loss of the returned parameters.
  double final_total = 0.0;
};

struct OptimizationResult {
  /// Raw optimized parameters; may sit slightly outside the feasible range.
  ImageTensor residual;
  /// combine(input, clamp(residual, a, b)): what the device would show.
  ImageTensor output;
  /// Loss of the returned residual.
  LossBreakdown loss;
  OptimizationTrace trace;
};

/// Minimizes the constraint + gradient-matching objective over every residual
/// pixel, starting from an all-zero residual. Returns the best iterate seen.
/// kApg requires the mean-squared gradient norm (the Euclidean-sum norm has
/// no Lipschitz gradient); pair that norm with kAdam or kSgd.
OptimizationResult optimize_residual(const ImageTensor& input, const ImageTensor& target,
                                     const OptimizerConfig& config);

struct RealizedResidual {
  ImageTensor residual;
  double constraint_mass = 0.0;
  double max_violation = 0.0;
};

/// Hard clamp into [bound_low, bound_high] with the infeasibility it removed.
RealizedResidual realized_residual(const ImageTensor& residual, const LossWeights& weights);

/// Largest eigenvalue of SᵀS for the Sobel operator S on an h x w image,
/// estimated by power iteration from a fixed start vector.
double sobel_gram_norm(std::size_t height, std::size_t width);

/// weight * sum |clamp(x, low, high) - x| applied directly to the parameters.
struct BoxPenalty {
  double weight = 1.0;
  double low = 0.0;
  double high = 1.0;

  void add_subgradient(std::span<const double> params, std::span<double> grad) const;
  /// Proximal map of step * penalty: moves outliers toward the box by
  /// step * weight, never past its edge.
  void prox(std::span<double> params, double step) const;
};

/// Evaluates the full loss at params and writes into grad the gradient of
/// every term except the BoxPenalty handed to minimize() (if any).
using Objective =
    std::function<LossBreakdown(std::span<const double> params, std::span<double> grad)>;

/// Loss only, no gradient.
using ObjectiveValue = std::function<LossBreakdown(std::span<const double> params)>;

struct MinimizeProblem {
  Objective objective;
  /// Cheaper loss-only evaluation. kApg scores its prox iterates with it
  /// (falling back to objective when unset).
  ObjectiveValue value;
  /// Constraint term on the raw parameters; folded into the gradient for
  /// kAdam/kSgd, applied as a proximal step for kApg.
  std::optional<BoxPenalty> penalty;
  /// Lipschitz constant of the objective's gradient. Required by kApg.
  std::optional<double> lipschitz;
};

struct MinimizeResult {
  std::vector<double> best_params;
  LossBreakdown best_loss;
  OptimizationTrace trace;
};

/// The shared descent loop: update rule, best-iterate tracking, trace
/// sampling and early stopping all come from config.
MinimizeResult minimize(std::vector<double> start, const MinimizeProblem& problem,
                        const OptimizerConfig& config);

/// Adam moment state, one slot per parameter.
class AdamState {
 public:
  AdamState(std::size_t size, const OptimizerConfig& config);

  void step(std::span<double> params, std::span<const double> grad, double step_size);

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Convergence bookkeeping over the best-so-far loss sequence.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(double tolerance, std::size_t window)
      : tolerance_(tolerance), window_(window) {}

  /// Records the best-so-far total after an iteration; true once converged.
  bool update(double best_total);

 private:
  double tolerance_;
  std::size_t window_;
  std::vector<double> history_;
};

}  // namespace residual_forge

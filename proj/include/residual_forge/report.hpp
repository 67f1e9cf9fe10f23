#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "residual_forge/metrics.hpp"
#include "residual_forge/optimizer.hpp"
#include "residual_forge/pipeline.hpp"

namespace residual_forge {

inline constexpr int kReportSchemaVersion = 1;

struct ArtifactPaths {
  std::filesystem::path residual_png;
  std::filesystem::path composite_png;
  std::filesystem::path trace_csv;
  std::filesystem::path report_json;
};

nlohmann::ordered_json to_json(const OptimizerConfig& config);
nlohmann::ordered_json to_json(const LossBreakdown& loss);
/// Aggregates plus per_patch[] when with_patches is set.
nlohmann::ordered_json to_json(const MetricsReport& report, bool with_patches = true);

/// The RunRecord: method, full config snapshot, loss, metrics, timing and
/// artifact paths.
nlohmann::ordered_json run_record(const MethodOutcome& outcome, const RunSettings& settings,
                                  const ArtifactPaths& paths);

/// iteration,total,constraint,gradient,best_total
void write_trace_csv(const OptimizationTrace& trace, const std::filesystem::path& path);

/// Pretty-printed, newline-terminated. Throws Error{IoError}.
void write_json(const nlohmann::ordered_json& doc, const std::filesystem::path& path);

/// Writes residual.png, composite.png, trace.csv and report.json into dir
/// (report.json goes to report_path instead when that is non-empty).
/// The residual PNG holds the hard-clamped residual.
ArtifactPaths write_run_artifacts(const MethodOutcome& outcome, const RunSettings& settings,
                                  const std::filesystem::path& dir,
                                  const std::filesystem::path& report_path = {});

}  // namespace residual_forge

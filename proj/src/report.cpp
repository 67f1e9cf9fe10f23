#include "residual_forge/report.hpp"

#include <cstdio>
#include <fstream>
#include <memory>

#include "residual_forge/error.hpp"
#include "residual_forge/image_io.hpp"

namespace residual_forge {

using nlohmann::ordered_json;

ordered_json to_json(const OptimizerConfig& config) {
  ordered_json j;
  j["alpha"] = config.combiner.alpha;
  j["iterations"] = config.iterations;
  j["optimizer"] = std::string(to_string(config.method));
  j["step_size"] = config.step_size;
  j["step_size_units"] = config.method == UpdateRule::kApg ? "fraction of 1/L" : "absolute";
  j["adam_beta1"] = config.adam_beta1;
  j["adam_beta2"] = config.adam_beta2;
  j["adam_eps"] = config.adam_eps;
  j["convergence_tol"] = config.convergence_tol;
  j["convergence_window"] = config.convergence_window;
  j["trace_every"] = config.trace_every;
  j["lambda_const"] = config.weights.lambda_const;
  j["lambda_grad"] = config.weights.lambda_grad;
  j["bound_low"] = config.weights.bound_low;
  j["bound_high"] = config.weights.bound_high;
  j["grad_norm"] =
      config.weights.norm == GradientNorm::kMeanSquared ? "mse" : "euclidean";
  j["init"] = "zero";
  return j;
}

ordered_json to_json(const LossBreakdown& loss) {
  return {{"total", loss.total},
          {"constraint", loss.constraint_term},
          {"gradient", loss.gradient_term}};
}

ordered_json to_json(const MetricsReport& report, bool with_patches) {
  ordered_json j;
  j["psnr"] = report.mean_psnr;
  j["ssim"] = report.mean_ssim;
  j["patch_size"] = report.patch_size;
  j["patch_count"] = report.per_patch.size();
  j["lpips"] = report.lpips ? ordered_json(*report.lpips) : ordered_json(nullptr);
  j["lpips_source"] = "external";
  if (with_patches) {
    ordered_json patches = ordered_json::array();
    for (const PatchScore& p : report.per_patch) {
      patches.push_back({{"row", p.rect.row},
                         {"col", p.rect.col},
                         {"height", p.rect.height},
                         {"width", p.rect.width},
                         {"psnr", p.psnr},
                         {"ssim", p.ssim},
                         {"psnr_capped", p.psnr_capped},
                         {"ssim_window", p.ssim_window}});
    }
    j["per_patch"] = std::move(patches);
  }
  j["provenance"] = report.provenance;
  return j;
}

ordered_json run_record(const MethodOutcome& outcome, const RunSettings& settings,
                        const ArtifactPaths& paths) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["method"] = std::string(to_string(outcome.method));
  ordered_json config = to_json(outcome.config);
  config["patch_size"] = settings.patch_size;
  j["config"] = std::move(config);
  ordered_json loss = to_json(outcome.loss);
  loss["objective"] = std::string(outcome.objective);
  j["loss"] = std::move(loss);
  j["metrics"] = to_json(outcome.metrics);
  j["duration_ms"] = outcome.duration_ms;
  j["optimization"] = {{"iterations_run", outcome.trace.iterations_run},
                       {"stop_reason", std::string(to_string(outcome.trace.stop_reason))},
                       {"initial_total", outcome.trace.initial_total},
                       {"final_total", outcome.trace.final_total}};
  j["residual"] = {{"constraint_mass", outcome.realized.constraint_mass},
                   {"max_violation", outcome.realized.max_violation},
                   {"png_holds", "residual clamped to [bound_low, bound_high]"}};
  if (outcome.gain_offset) {
    j["gain_offset"] = {{"gain", outcome.gain_offset->first},
                        {"offset", outcome.gain_offset->second}};
  }
  j["artifacts"] = {{"residual_png", paths.residual_png.string()},
                    {"composite_png", paths.composite_png.string()},
                    {"trace_csv", paths.trace_csv.string()}};
  return j;
}

void write_trace_csv(const OptimizationTrace& trace, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  std::fputs("iteration,total,constraint,gradient,best_total\n", f.get());
  for (const TraceSample& s : trace.samples) {
    std::fprintf(f.get(), "%zu,%.17g,%.17g,%.17g,%.17g\n", s.iteration, s.loss.total,
                 s.loss.constraint_term, s.loss.gradient_term, s.best_total);
  }
  if (std::ferror(f.get())) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_json(const ordered_json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

ArtifactPaths write_run_artifacts(const MethodOutcome& outcome, const RunSettings& settings,
                                  const std::filesystem::path& dir,
                                  const std::filesystem::path& report_path) {
  for (const auto& d : {dir, report_path.parent_path()}) {
    if (d.empty()) continue;
    std::error_code ec;
    std::filesystem::create_directories(d, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + d.string() + ": " + ec.message());
  }
  ArtifactPaths paths{dir / "residual.png", dir / "composite.png", dir / "trace.csv",
                      report_path.empty() ? dir / "report.json" : report_path};
  save_image(outcome.realized.residual, paths.residual_png);
  save_image(outcome.output, paths.composite_png);
  write_trace_csv(outcome.trace, paths.trace_csv);
  write_json(run_record(outcome, settings, paths), paths.report_json);
  return paths;
}

}  // namespace residual_forge

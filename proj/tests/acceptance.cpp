// Acceptance gate: runs every criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "residual_forge/baselines.hpp"
#include "residual_forge/cli.hpp"
#include "residual_forge/image_io.hpp"
#include "residual_forge/losses.hpp"
#include "residual_forge/metrics.hpp"
#include "residual_forge/pipeline.hpp"
#include "residual_forge/sobel.hpp"
#include "residual_forge/synthetic.hpp"

using namespace residual_forge;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Verdict& v) {
  std::printf("%s criterion %d: %s -- %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

Verdict gradient_correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  const double eps = 1e-5;
  const double alphas[] = {0.0, 0.3, 0.5, 0.9};
  double worst = 0.0;
  std::size_t checked = 0;
  for (int t = 0; t < 20; ++t) {
    const double alpha = alphas[t % 4];
    const ImageTensor in = oracle::random_image(8, 8, rng);
    const ImageTensor res = oracle::random_image(8, 8, rng, -0.3, 1.3);
    const ImageTensor tgt = oracle::random_image(8, 8, rng);
    const LossWeights w;
    const ImageTensor g = total_loss_grad(in, res, tgt, {alpha}, w);
    auto f = [&](const ImageTensor& r) { return total_loss(in, r, tgt, {alpha}, w).total; };
    for (std::size_t i = 0; i < res.size(); ++i) {
      const double r = res.values()[i];
      const double blend = alpha * in.values()[i] + (1 - alpha) * r;
      if (std::abs(r) < 2 * eps || std::abs(r - 1) < 2 * eps) continue;
      if (std::abs(blend) < 2 * eps || std::abs(blend - 1) < 2 * eps) continue;
      worst = std::max(worst, std::abs(g.values()[i] - oracle::central_difference(f, res, i, eps)));
      ++checked;
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-5 && secs < 10.0,
          format("max |analytic - FD| = %.3g over %zu elements (tol 1e-5), %.2f s (< 10 s)", worst,
                 checked, secs)};
}

Verdict adjoint_identity() {
  const auto start = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const ImageTensor u = oracle::random_image(8, 8, rng, -1.0, 1.0);
    GradientField v(8, 8);
    for (double& x : v.values()) x = d(rng);
    double lhs = 0.0;
    double rhs = 0.0;
    const GradientField su = sobel_forward(u);
    const ImageTensor stv = sobel_backward(v);
    for (std::size_t i = 0; i < v.size(); ++i) lhs += su.values()[i] * v.values()[i];
    for (std::size_t i = 0; i < u.size(); ++i) rhs += u.values()[i] * stv.values()[i];
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-10 && secs < 5.0,
          format("max relative gap %.3g over 100 pairs (tol 1e-10), %.3f s (< 5 s)", worst, secs)};
}

Verdict exact_recovery(const std::vector<ImagePair>& feasible) {
  const auto start = Clock::now();
  RunSettings s;
  s.alpha = 0.5;
  double worst_grad = 0.0;
  double worst_psnr = 1e9;
  for (const auto& p : feasible) {
    const MethodOutcome o = run_method(Method::kOurs, p.input, p.target, s);
    worst_grad = std::max(worst_grad, o.loss.gradient_term);
    for (const auto& patch : o.metrics.per_patch) worst_psnr = std::min(worst_psnr, patch.psnr);
  }
  const double secs = seconds_since(start);
  return {worst_grad < 1e-5 && worst_psnr >= 35.0 && secs < 120.0,
          format("max gradient term %.3g (< 1e-5), min patch PSNR %.2f dB (>= 35), %.1f s "
                 "(< 120 s)",
                 worst_grad, worst_psnr, secs)};
}

Verdict lightness_constancy() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const ImageTensor x = oracle::random_image(32, 32, rng, 0.0, 0.7);
    for (double c : {0.1, 0.3}) {
      ImageTensor y = x;
      for (double& v : y.values()) v += c;
      worst = std::max(worst, gradient_loss(y, x));
    }
  }
  return {worst <= 1e-12, format("max gradient_loss(x + c, x) = %.3g (tol 1e-12)", worst)};
}

Verdict table_ordering() {
  const auto start = Clock::now();
  const auto pairs = make_synthetic_corpus(CorpusKind::kDayToNight, 10, 128, 2024, 0.5);
  RunSettings s;
  s.alpha = 0.5;
  double psnr_sum[3] = {0, 0, 0};
  double ssim_sum[3] = {0, 0, 0};
  const Method methods[3] = {Method::kOurs, Method::kHeuristic, Method::kSpAll};
  for (const auto& p : pairs) {
    for (int m = 0; m < 3; ++m) {
      const MethodOutcome o = run_method(methods[m], p.input, p.target, s);
      psnr_sum[m] += o.metrics.mean_psnr;
      ssim_sum[m] += o.metrics.mean_ssim;
    }
  }
  const double n = static_cast<double>(pairs.size());
  const double ours_p = psnr_sum[0] / n, heur_p = psnr_sum[1] / n, spall_p = psnr_sum[2] / n;
  const double ours_s = ssim_sum[0] / n, heur_s = ssim_sum[1] / n;
  const double secs = seconds_since(start);
  const bool psnr_ok = ours_p >= heur_p;
  const bool ssim_ok = ours_s >= heur_s;
  const bool spall_ok = ours_p >= spall_p - 0.5;
  return {psnr_ok && ssim_ok && spall_ok && secs < 600.0,
          format("PSNR ours %.3f vs heuristic %.3f [%s]; SSIM ours %.4f vs heuristic %.4f [%s]; "
                 "ours %.3f vs spall-0.5 %.3f [%s]; %.1f s (< 600 s)",
                 ours_p, heur_p, psnr_ok ? "ok" : "violated", ours_s, heur_s,
                 ssim_ok ? "ok" : "violated", ours_p, spall_p - 0.5,
                 spall_ok ? "ok" : "violated", secs)};
}

Verdict metric_oracles() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const ImageTensor a = oracle::random_image(64, 64, rng);
    ImageTensor b = a;
    std::uniform_real_distribution<double> noise(-0.15, 0.15);
    for (double& v : b.values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
    worst = std::max(worst, std::abs(ssim(a, b) - oracle::ssim(a, b)));
  }
  const double p = psnr(ImageTensor(64, 64, 0.2), ImageTensor(64, 64, 0.3));
  const double gap = std::abs(p - 20.0);
  return {worst <= 1e-8 && gap <= 1e-9,
          format("max |ssim - oracle| %.3g (tol 1e-8); psnr(0.1 offset) = %.12f (tol 1e-9)", worst,
                 p)};
}

Verdict baseline_exactness(const std::vector<ImagePair>& feasible) {
  double worst = 0.0;
  for (const auto& p : feasible) {
    const ImageTensor r = heuristic_residual(p.input, p.target, {0.5});
    const ImageTensor out = quantize(combine(p.input, r, {0.5}).output);
    worst = std::max(worst, oracle::max_abs_diff(out, p.target));
  }
  return {worst <= 1.0 / 255.0 + 1e-12,
          format("max per-pixel error %.6f on %zu pairs (tol 1/255 = %.6f)", worst,
                 feasible.size(), 1.0 / 255.0)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Verdict determinism() {
  oracle::TempDir dir("accept");
  const auto pairs = make_synthetic_corpus(CorpusKind::kDayToNight, 1, 64, 77);
  save_image(pairs[0].input, dir / "in.png");
  save_image(pairs[0].target, dir / "tg.png");
  std::ostringstream sink;
  bool ok = true;
  for (const char* run : {"a", "b"}) {
    const int code = cli::cmd_optimize({"--input", (dir / "in.png").string(), "--target",
                                        (dir / "tg.png").string(), "--alpha", "0.5",
                                        "--out-dir", (dir / run).string()},
                                       sink, sink);
    ok = ok && code == 0;
  }
  const bool residual_same =
      ok && slurp(dir / "a" / "residual.png") == slurp(dir / "b" / "residual.png");
  const bool composite_same =
      ok && slurp(dir / "a" / "composite.png") == slurp(dir / "b" / "composite.png");
  return {ok && residual_same && composite_same,
          format("exit codes ok: %s; residual.png identical: %s; composite.png identical: %s",
                 ok ? "yes" : "no", residual_same ? "yes" : "no", composite_same ? "yes" : "no")};
}

Verdict performance() {
  RunSettings s;
  double secs[2] = {0, 0};
  const std::size_t sizes[2] = {256, 1024};
  for (int i = 0; i < 2; ++i) {
    const auto pairs = make_synthetic_corpus(CorpusKind::kDayToNight, 1, sizes[i], 31);
    const auto start = Clock::now();
    const OptimizationResult r =
        optimize_residual(pairs[0].input, pairs[0].target, config_for_method(Method::kOurs, s));
    secs[i] = seconds_since(start);
    std::printf("  %zux%zu: %zu iterations (%s) in %.1f s\n", sizes[i], sizes[i],
                r.trace.iterations_run, std::string(to_string(r.trace.stop_reason)).c_str(),
                secs[i]);
    std::fflush(stdout);
  }
  return {secs[0] < 60.0 && secs[1] < 900.0,
          format("256x256 %.1f s (< 60 s); 1024x1024 %.1f s (< 900 s)", secs[0], secs[1])};
}

}  // namespace

int main() {
  const auto feasible = make_synthetic_corpus(CorpusKind::kFeasible, 10, 64, 4242, 0.5);
  report(1, "gradient correctness", gradient_correctness());
  report(2, "adjoint identity", adjoint_identity());
  report(3, "exact-recovery fixture", exact_recovery(feasible));
  report(4, "lightness-constancy property", lightness_constancy());
  report(5, "directional method ordering", table_ordering());
  report(6, "metric oracles", metric_oracles());
  report(7, "baseline exactness", baseline_exactness(feasible));
  report(8, "determinism", determinism());
  report(9, "desk-scale performance", performance());
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

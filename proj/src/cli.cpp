#include "residual_forge/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "residual_forge/image_io.hpp"
#include "residual_forge/metrics.hpp"
#include "residual_forge/report.hpp"
#include "residual_forge/synthetic.hpp"

namespace residual_forge::cli {
namespace {

using nlohmann::ordered_json;

// Parses args into app. Returns an exit code when the command should stop
// (help requested or a usage error), nullopt to carry on.
std::optional<int> parse_args(CLI::App& app, const Args& args, std::ostream& out,
                              std::ostream& err) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  return std::nullopt;
}

int report_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  return exit_code_for(e.code());
}

// Runs body, mapping library and filesystem failures to exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return report_error(e, err);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

// Options shared by optimize and experiment overrides.
struct SettingFlags {
  std::optional<double> lr;
  std::optional<double> baseline_lr;
  std::string optimizer;
  std::string grad_norm = "mse";
};

void parse_rule_and_norm(const SettingFlags& flags, RunSettings& settings) {
  if (!flags.optimizer.empty()) {
    auto rule = parse_update_rule(flags.optimizer);
    if (!rule) {
      throw Error(ErrorCode::InvalidConfig,
                  "--optimizer '" + flags.optimizer + "' is not one of apg, adam, sgd");
    }
    settings.optimizer = rule;
  }
  if (flags.grad_norm == "mse") {
    settings.norm = GradientNorm::kMeanSquared;
  } else if (flags.grad_norm == "euclidean") {
    settings.norm = GradientNorm::kEuclideanSum;
  } else {
    throw Error(ErrorCode::InvalidConfig,
                "--grad-norm '" + flags.grad_norm + "' is not one of mse, euclidean");
  }
}

Method parse_method_or_throw(const std::string& text) {
  auto m = parse_method(text);
  if (!m) {
    throw Error(ErrorCode::InvalidConfig,
                "method '" + text + "' is not one of ours, heuristic, sp2, spall");
  }
  return *m;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) {
    throw Error(ErrorCode::InvalidConfig, "spec key '" + key + "': cannot parse '" + value + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  if (value.empty() || value.front() == '-') {
    throw Error(ErrorCode::InvalidConfig, "spec key '" + key + "' must be a non-negative integer");
  }
  return parse_number<std::size_t>(key, value);
}

std::string csv_number(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string());
  }
}

struct JobResult {
  bool ok = false;
  std::string pair;
  Method method = Method::kOurs;
  double psnr = 0.0;
  double ssim = 0.0;
  double total = 0.0;
  double duration_ms = 0.0;
  std::filesystem::path report;
  std::string error;
};

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::IoError:
      return kExitIo;
    case ErrorCode::ImageTooSmall:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::InvalidBounds:
    case ErrorCode::PatchTooSmall:
    case ErrorCode::DegenerateAlpha:
    case ErrorCode::InvalidConfig:
      return kExitValidation;
  }
  return kExitIo;
}

int cmd_optimize(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimize a residual image so the combined output matches a target",
               "residual_forge optimize"};
  std::string input;
  std::string target;
  std::string method_name = "ours";
  std::string out_dir = "residual_forge_out";
  std::string report;
  RunSettings settings;
  SettingFlags flags;
  app.add_option("--input", input, "Input (see-through background) image")->required();
  app.add_option("--target", target, "Target image")->required();
  app.add_option("--alpha", settings.alpha, "Blend weight of the input, in [0, 1]")->required();
  app.add_option("--iterations", settings.iterations, "Iteration budget")
      ->capture_default_str();
  app.add_option("--lr", flags.lr,
                 "Step size (apg: fraction of 1/L, default 1; adam/sgd: absolute, default 0.05)");
  app.add_option("--lambda-const", settings.lambda_const, "Constraint weight")
      ->capture_default_str();
  app.add_option("--lambda-grad", settings.lambda_grad, "Gradient-matching weight")
      ->capture_default_str();
  app.add_option("--bound-high", settings.bound_high, "Upper residual bound")
      ->capture_default_str();
  app.add_option("--method", method_name, "ours|heuristic|sp2|spall")->capture_default_str();
  app.add_option("--optimizer", flags.optimizer,
                 "Update rule for ours: apg|adam|sgd (default apg; adam with --grad-norm euclidean)");
  app.add_option("--grad-norm", flags.grad_norm, "mse|euclidean")->capture_default_str();
  app.add_option("--patch-size", settings.patch_size, "Metric patch side")
      ->capture_default_str();
  app.add_option("--out-dir", out_dir, "Directory for the run artifacts")->capture_default_str();
  app.add_option("--report", report, "report.json destination (default: <out-dir>/report.json)");
  if (auto code = parse_args(app, args, out, err)) return *code;

  return guarded(err, [&] {
    const Method method = parse_method_or_throw(method_name);
    parse_rule_and_norm(flags, settings);
    if (method == Method::kSp2 || method == Method::kSpAll) {
      settings.baseline_lr = flags.lr;
    } else {
      settings.lr = flags.lr;
    }
    settings.validate();
    config_for_method(method, settings).validate();

    const ImageTensor in = load_image(input);
    const ImageTensor tg = load_image(target);
    require_same_shape(in, tg, "--input vs --target");
    const MethodOutcome outcome = run_method(method, in, tg, settings);
    const ArtifactPaths paths = write_run_artifacts(outcome, settings, out_dir, report);

    ordered_json result;
    result["method"] = std::string(to_string(method));
    result["loss"] = to_json(outcome.loss);
    result["psnr"] = outcome.metrics.mean_psnr;
    result["ssim"] = outcome.metrics.mean_ssim;
    result["iterations_run"] = outcome.trace.iterations_run;
    result["stop_reason"] = std::string(to_string(outcome.trace.stop_reason));
    result["residual_png"] = paths.residual_png.string();
    result["composite_png"] = paths.composite_png.string();
    result["trace_csv"] = paths.trace_csv.string();
    result["report"] = paths.report_json.string();
    out << result.dump() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_metrics(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patch-averaged PSNR/SSIM between two images", "residual_forge metrics"};
  std::string a;
  std::string b;
  std::size_t patch_size = kDefaultPatchSize;
  std::string report;
  std::optional<double> lpips;
  app.add_option("--a", a, "First image")->required();
  app.add_option("--b", b, "Second image")->required();
  app.add_option("--patch-size", patch_size, "Patch side")->capture_default_str();
  app.add_option("--report", report, "Write the full per-patch report here");
  app.add_option("--lpips", lpips, "LPIPS value computed externally, passed through");
  if (auto code = parse_args(app, args, out, err)) return *code;

  return guarded(err, [&] {
    if (patch_size < kMinPatchSide) {
      throw Error(ErrorCode::PatchTooSmall, "--patch-size must be at least 8");
    }
    const ImageTensor ia = load_image(a);
    const ImageTensor ib = load_image(b);
    require_same_shape(ia, ib, "--a vs --b");
    MetricsReport metrics = patch_metrics(ia, ib, patch_size);
    metrics.lpips = lpips;
    if (!report.empty()) {
      ordered_json full = to_json(metrics, true);
      full["a"] = a;
      full["b"] = b;
      const std::filesystem::path rp(report);
      if (rp.has_parent_path()) ensure_directory(rp.parent_path());
      write_json(full, rp);
    }
    out << to_json(metrics, false).dump() << '\n';
    return static_cast<int>(kExitOk);
  });
}

ExperimentSpec parse_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(std::filesystem::exists(path) ? ErrorCode::IoError : ErrorCode::FileNotFound,
                "cannot read experiment spec " + path.string());
  }
  const std::filesystem::path base = path.parent_path();
  ExperimentSpec spec;
  spec.methods = {Method::kOurs, Method::kHeuristic};
  SettingFlags flags;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    RunSettings& s = spec.settings;
    if (key == "alpha") {
      s.alpha = parse_number<double>(key, value);
    } else if (key == "methods") {
      spec.methods.clear();
      std::istringstream list(value);
      std::string item;
      while (std::getline(list, item, ',')) {
        item = trim(item);
        if (!item.empty()) spec.methods.push_back(parse_method_or_throw(item));
      }
    } else if (key == "patch_size") {
      s.patch_size = parse_count(key, value);
    } else if (key == "iterations") {
      s.iterations = parse_count(key, value);
    } else if (key == "lr") {
      s.lr = parse_number<double>(key, value);
    } else if (key == "baseline_lr") {
      s.baseline_lr = parse_number<double>(key, value);
    } else if (key == "lambda_const") {
      s.lambda_const = parse_number<double>(key, value);
    } else if (key == "lambda_grad") {
      s.lambda_grad = parse_number<double>(key, value);
    } else if (key == "bound_high") {
      s.bound_high = parse_number<double>(key, value);
    } else if (key == "optimizer") {
      flags.optimizer = value;
    } else if (key == "grad_norm") {
      flags.grad_norm = value;
    } else if (key == "pair") {
      std::istringstream fields(value);
      std::string a;
      std::string b;
      std::string extra;
      if (!(fields >> a >> b) || (fields >> extra)) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ":" + std::to_string(line_no) +
                                                  ": pair needs exactly <input> <target>");
      }
      ExperimentPair pair;
      pair.input = std::filesystem::path(a).is_absolute() ? std::filesystem::path(a) : base / a;
      pair.target = std::filesystem::path(b).is_absolute() ? std::filesystem::path(b) : base / b;
      std::ostringstream name;
      name << "pair" << std::setw(3) << std::setfill('0') << spec.pairs.size() << '_'
           << std::filesystem::path(a).stem().string();
      pair.name = name.str();
      spec.pairs.push_back(std::move(pair));
    } else {
      throw Error(ErrorCode::InvalidConfig,
                  path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  parse_rule_and_norm(flags, spec.settings);
  if (spec.methods.empty()) throw Error(ErrorCode::InvalidConfig, "methods list is empty");
  return spec;
}

unsigned experiment_threads(std::optional<unsigned> requested, std::size_t jobs) {
  unsigned n = requested.value_or(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("RESIDUAL_FORGE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  n = std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1));
  return std::max(n, 1u);
}

int cmd_experiment(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Run every (pair x method) of an experiment spec", "residual_forge experiment"};
  std::string spec_path;
  std::string out_dir;
  std::optional<unsigned> threads;
  app.add_option("--spec", spec_path, "Experiment spec file")->required();
  app.add_option("--out-dir", out_dir, "Output directory")->required();
  app.add_option("--threads", threads, "Worker threads (capped by RESIDUAL_FORGE_THREADS)");
  if (auto code = parse_args(app, args, out, err)) return *code;

  ExperimentSpec spec;
  try {
    spec = parse_experiment_spec(spec_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidConfig ? kExitUsage : exit_code_for(e.code());
  }
  if (spec.pairs.empty()) {
    err << "error: experiment spec " << spec_path << " lists no pairs\n";
    return kExitUsage;
  }

  return guarded(err, [&] {
    spec.settings.validate();
    for (Method m : spec.methods) config_for_method(m, spec.settings).validate();
    std::vector<std::string> missing;
    for (const ExperimentPair& p : spec.pairs) {
      for (const auto& f : {p.input, p.target}) {
        if (!std::filesystem::is_regular_file(f)) missing.push_back(f.string());
      }
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += "\n  " + m;
      throw Error(ErrorCode::FileNotFound, "experiment spec references missing files:" + list);
    }
    const std::filesystem::path root(out_dir);
    ensure_directory(root);

    struct Job {
      const ExperimentPair* pair;
      Method method;
    };
    std::vector<Job> jobs;
    for (const ExperimentPair& p : spec.pairs) {
      for (Method m : spec.methods) jobs.push_back({&p, m});
    }
    std::vector<JobResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        const Job& job = jobs[i];
        JobResult& r = results[i];
        r.pair = job.pair->name;
        r.method = job.method;
        try {
          const ImageTensor in = load_image(job.pair->input);
          const ImageTensor tg = load_image(job.pair->target);
          const MethodOutcome outcome = run_method(job.method, in, tg, spec.settings);
          const auto dir = root / "runs" / job.pair->name / std::string(to_string(job.method));
          const ArtifactPaths paths = write_run_artifacts(outcome, spec.settings, dir);
          r.ok = true;
          r.psnr = outcome.metrics.mean_psnr;
          r.ssim = outcome.metrics.mean_ssim;
          r.total = outcome.loss.total;
          r.duration_ms = outcome.duration_ms;
          r.report = paths.report_json;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      }
    };
    const unsigned n_threads = experiment_threads(threads, jobs.size());
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ofstream runs(root / "runs.csv");
    runs << "pair,method,status,psnr,ssim,loss_total,duration_ms,report,error\n";
    std::size_t succeeded = 0;
    for (const JobResult& r : results) {
      if (r.ok) ++succeeded;
      if (!r.ok) {
        err << "run " << r.pair << "/" << to_string(r.method) << " failed: " << r.error << '\n';
      }
      runs << csv_field(r.pair) << ',' << to_string(r.method) << ',' << (r.ok ? "ok" : "failed")
           << ',' << (r.ok ? csv_number(r.psnr) : "") << ',' << (r.ok ? csv_number(r.ssim) : "")
           << ',' << (r.ok ? csv_number(r.total) : "") << ','
           << (r.ok ? csv_number(r.duration_ms) : "") << ',' << csv_field(r.report.string())
           << ',' << csv_field(r.error) << '\n';
    }
    if (!runs) throw Error(ErrorCode::IoError, "cannot write runs.csv");

    std::ofstream summary(root / "summary.csv");
    summary << "method,runs,failed,mean_psnr,mean_ssim\n";
    ordered_json rows = ordered_json::array();
    for (Method m : spec.methods) {
      std::size_t ok = 0;
      std::size_t failed = 0;
      double psnr_sum = 0.0;
      double ssim_sum = 0.0;
      for (const JobResult& r : results) {
        if (r.method != m) continue;
        if (!r.ok) {
          ++failed;
          continue;
        }
        ++ok;
        psnr_sum += r.psnr;
        ssim_sum += r.ssim;
      }
      const std::string name(to_string(m));
      ordered_json row{{"method", name}, {"runs", ok}, {"failed", failed}};
      summary << name << ',' << ok << ',' << failed << ',';
      if (ok > 0) {
        const double mp = psnr_sum / static_cast<double>(ok);
        const double ms = ssim_sum / static_cast<double>(ok);
        summary << csv_number(mp) << ',' << csv_number(ms);
        row["mean_psnr"] = mp;
        row["mean_ssim"] = ms;
      } else {
        summary << ',';
        row["mean_psnr"] = nullptr;
        row["mean_ssim"] = nullptr;
      }
      summary << '\n';
      rows.push_back(std::move(row));
    }
    if (!summary) throw Error(ErrorCode::IoError, "cannot write summary.csv");

    ordered_json result;
    result["runs"] = results.size();
    result["succeeded"] = succeeded;
    result["failed"] = results.size() - succeeded;
    result["summary"] = std::move(rows);
    result["summary_csv"] = (root / "summary.csv").string();
    result["runs_csv"] = (root / "runs.csv").string();
    out << result.dump() << '\n';
    return static_cast<int>(succeeded > 0 ? kExitOk : kExitAllRunsFailed);
  });
}

int cmd_synth(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Write a synthetic (input, target) corpus and its experiment spec",
               "residual_forge synth"};
  std::string kind_name = "day2night";
  std::size_t count = 10;
  std::size_t size = 128;
  std::uint64_t seed = 1;
  double alpha = 0.5;
  std::string out_dir;
  app.add_option("--kind", kind_name, "day2night|feasible|ramp")->capture_default_str();
  app.add_option("--count", count, "Number of pairs")->capture_default_str();
  app.add_option("--size", size, "Image side (>= 32)")->capture_default_str();
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--alpha", alpha, "Blend weight (feasible kind only)")->capture_default_str();
  app.add_option("--out-dir", out_dir, "Output directory")->required();
  if (auto code = parse_args(app, args, out, err)) return *code;

  return guarded(err, [&] {
    const auto kind = parse_corpus_kind(kind_name);
    if (!kind) {
      throw Error(ErrorCode::InvalidConfig,
                  "--kind '" + kind_name + "' is not one of day2night, feasible, ramp");
    }
    CombinerParams{alpha}.validate();
    const auto pairs = make_synthetic_corpus(*kind, count, size, seed, alpha);
    const auto spec = write_corpus(pairs, out_dir, alpha);
    ordered_json result{{"spec", spec.string()}, {"pairs", pairs.size()}};
    out << result.dump() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int run(const Args& args, std::ostream& out, std::ostream& err) {
  static constexpr const char* kUsage =
      "usage: residual_forge <command> [options]\n"
      "commands:\n"
      "  optimize    optimize one residual (or run a baseline) for an input/target pair\n"
      "  metrics     patch-averaged PSNR/SSIM between two images\n"
      "  experiment  run every pair x method of an experiment spec\n"
      "  synth       write a synthetic corpus\n"
      "Run 'residual_forge <command> --help' for the options of a command.\n";
  if (args.empty()) {
    err << kUsage;
    return kExitUsage;
  }
  const std::string& command = args.front();
  const Args rest(args.begin() + 1, args.end());
  if (command == "optimize") return cmd_optimize(rest, out, err);
  if (command == "metrics") return cmd_metrics(rest, out, err);
  if (command == "experiment") return cmd_experiment(rest, out, err);
  if (command == "synth") return cmd_synth(rest, out, err);
  if (command == "--help" || command == "-h" || command == "help") {
    out << kUsage;
    return kExitOk;
  }
  err << "error: unknown command '" << command << "'\n" << kUsage;
  return kExitUsage;
}

}  // namespace residual_forge::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "residual_forge/image.hpp"

namespace residual_forge {

/// Synthetic (input, target) corpora standing in for real datasets.
///   kDayToNight  bright smooth input; darker target that keeps the scene
///                layout at reduced contrast and adds small bright lights.
///   kFeasible    target = clip(alpha * input + (1 - alpha) * R) for a random
///                R whose every channel spans exactly [0, 1].
///   kRamp        analytic fixtures: horizontal-ramp input, vertical-ramp target.
enum class CorpusKind { kDayToNight, kFeasible, kRamp };

std::string_view to_string(CorpusKind kind);
std::optional<CorpusKind> parse_corpus_kind(std::string_view text);

struct ImagePair {
  std::string name;
  ImageTensor input;
  ImageTensor target;
};

inline constexpr std::size_t kMinCorpusSize = 32;

/// Deterministic for a given (kind, count, size, seed, alpha). Images are
/// already on the 8-bit grid, so writing and re-reading them is lossless.
/// alpha only affects kFeasible. Throws InvalidConfig when size < 32.
std::vector<ImagePair> make_synthetic_corpus(CorpusKind kind, std::size_t count, std::size_t size,
                                             std::uint64_t seed, double alpha = 0.5);

/// Writes <name>_input.png / <name>_target.png per pair plus an experiment
/// spec (corpus.spec) listing them. Returns the spec path.
std::filesystem::path write_corpus(const std::vector<ImagePair>& pairs,
                                   const std::filesystem::path& dir, double alpha);

}  // namespace residual_forge

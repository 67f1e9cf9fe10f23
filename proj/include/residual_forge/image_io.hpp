#pragma once

#include <cstdint>
#include <filesystem>

#include "residual_forge/image.hpp"

namespace residual_forge {

/// Reads an 8-bit RGB or grayscale PNG, or a binary PPM (P6, maxval 255).
/// Format is detected from the file magic, not the extension. Bytes map to
/// byte / 255.0; grayscale is replicated into all three channels.
///
/// Errors: FileNotFound, UnsupportedFormat (16-bit, palette or alpha PNGs,
/// other PNM variants), ImageTooSmall, IoError for truncated files.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG after clipping to [0,1] and quantizing each value
/// with round-half-up.
void save_image(const ImageTensor& img, const std::filesystem::path& path);

/// Writes a binary PPM (P6) with the same quantization as save_image.
void save_ppm(const ImageTensor& img, const std::filesystem::path& path);

/// The byte save_image writes for v.
std::uint8_t quantize_unit(double v) noexcept;

/// Snaps every value onto the 8-bit grid, i.e. what a save/load round trip
/// yields.
ImageTensor quantize(const ImageTensor& img);

}  // namespace residual_forge

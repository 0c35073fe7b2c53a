#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bubbleseg/core.hpp"

namespace bubbleseg::io {

namespace fs = std::filesystem;

/// Reads PNG or PGM (P2/P5), 8- or 16-bit, and F32R. Multi-channel inputs are
/// reduced to the mean of the color channels; alpha is ignored.
GrayImage read_image(const fs::path& path);

/// F32R: "F32R", u32 LE width, u32 LE height, then row-major f32 LE samples.
template <typename Tag>
void write_raster(const Raster<Tag>& map, const fs::path& path);
std::vector<float> read_f32r(const fs::path& path, int& width, int& height);
ProbMap read_prob_map(const fs::path& path);

void write_png(const GrayImage& img, const fs::path& path);
void write_png(const BinaryMask& mask, const fs::path& path);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// 8-bit RGB raster used for overlays.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

void write_png(const RgbImage& img, const fs::path& path);

std::vector<std::uint8_t> read_bytes(const fs::path& path);
std::string read_text(const fs::path& path);
/// Writes to a sibling temp file then renames over the target.
void write_atomic(const fs::path& path, std::string_view bytes);

nlohmann::json to_json(const AnnotationSet& set);
AnnotationSet annotation_from_json(const nlohmann::json& j);

/// Canonical single-line serialization; identical sets give identical bytes.
std::string serialize_annotation(const AnnotationSet& set);
AnnotationSet parse_annotation(std::string_view text);

AnnotationSet read_annotation(const fs::path& path);
void write_annotation(const AnnotationSet& set, const fs::path& path);

}  // namespace bubbleseg::io

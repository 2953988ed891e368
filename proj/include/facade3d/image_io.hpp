#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "facade3d/image.hpp"

namespace facade3d {

/// Loads a PNG or JPEG as RGBA (alpha 255 when the file has no alpha).
/// Throws IoError when the file is missing or cannot be decoded.
ImageRGBA load_image_rgba(const std::filesystem::path& path);

/// Writes an RGBA PNG. Output bytes are deterministic for identical input.
void save_image_png(const ImageRGBA& img, const std::filesystem::path& path);

/// 16-bit single-channel raster (plane-association matrices).
struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;

  std::uint16_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

Image16 load_image_png16(const std::filesystem::path& path);
void save_image_png16(const Image16& img, const std::filesystem::path& path);

}  // namespace facade3d

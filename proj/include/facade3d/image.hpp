#pragma once

#include <cstdint>
#include <vector>

#include "facade3d/errors.hpp"

namespace facade3d {

struct RGBA {
  std::uint8_t r = 0, g = 0, b = 0, a = 0;

  bool operator==(const RGBA& o) const {
    return r == o.r && g == o.g && b == o.b && a == o.a;
  }
};

/// Plain RGBA8 raster. Pixel (x, y) has its center at continuous coordinates
/// (x + 0.5, y + 0.5); row 0 is the first row of the buffer.
class ImageRGBA {
 public:
  ImageRGBA() = default;
  ImageRGBA(int width, int height, RGBA fill = RGBA{0, 0, 0, 0})
      : width_(width), height_(height),
        px_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0) {
      throw DomainError("image dimensions must be positive");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return px_.empty(); }

  RGBA& at(int x, int y) { return px_[static_cast<std::size_t>(y) * width_ + x]; }
  const RGBA& at(int x, int y) const {
    return px_[static_cast<std::size_t>(y) * width_ + x];
  }

  const std::vector<RGBA>& pixels() const { return px_; }
  std::vector<RGBA>& pixels() { return px_; }

  /// Number of pixels with alpha = 255.
  std::size_t foreground_area() const;

  bool operator==(const ImageRGBA& o) const {
    return width_ == o.width_ && height_ == o.height_ && px_ == o.px_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<RGBA> px_;
};

enum class SampleMode { kBilinear, kNearest };

/// Samples at continuous coordinates under the pixel-center convention.
/// wrap_x enables horizontal wrap-around (equirectangular seam); the
/// vertical axis always clamps.
RGBA sample_nearest(const ImageRGBA& img, double x, double y,
                    bool wrap_x = false);
RGBA sample_bilinear(const ImageRGBA& img, double x, double y,
                     bool wrap_x = false);

/// Grayscale luma in [0, 255]; background (alpha 0) reads as 0.
std::vector<float> to_gray(const ImageRGBA& img);

}  // namespace facade3d

#include "facade3d/image.hpp"

#include <algorithm>
#include <cmath>

namespace facade3d {

namespace {

int wrap_index(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

int resolve_x(int i, int n, bool wrap) {
  return wrap ? wrap_index(i, n) : std::clamp(i, 0, n - 1);
}

}  // namespace

std::size_t ImageRGBA::foreground_area() const {
  std::size_t n = 0;
  for (const RGBA& p : px_) {
    if (p.a == 255) ++n;
  }
  return n;
}

RGBA sample_nearest(const ImageRGBA& img, double x, double y, bool wrap_x) {
  const int xi = resolve_x(static_cast<int>(std::floor(x)), img.width(), wrap_x);
  const int yi = std::clamp(static_cast<int>(std::floor(y)), 0, img.height() - 1);
  return img.at(xi, yi);
}

RGBA sample_bilinear(const ImageRGBA& img, double x, double y, bool wrap_x) {
  const double xf = x - 0.5;
  const double yf = y - 0.5;
  const int x0 = static_cast<int>(std::floor(xf));
  const int y0 = static_cast<int>(std::floor(yf));
  const double fx = xf - x0;
  const double fy = yf - y0;

  const int xa = resolve_x(x0, img.width(), wrap_x);
  const int xb = resolve_x(x0 + 1, img.width(), wrap_x);
  const int ya = std::clamp(y0, 0, img.height() - 1);
  const int yb = std::clamp(y0 + 1, 0, img.height() - 1);

  const RGBA p00 = img.at(xa, ya);
  const RGBA p10 = img.at(xb, ya);
  const RGBA p01 = img.at(xa, yb);
  const RGBA p11 = img.at(xb, yb);

  auto lerp = [&](std::uint8_t c00, std::uint8_t c10, std::uint8_t c01,
                  std::uint8_t c11) {
    const double top = c00 * (1.0 - fx) + c10 * fx;
    const double bot = c01 * (1.0 - fx) + c11 * fx;
    const double v = top * (1.0 - fy) + bot * fy;
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  };

  return RGBA{lerp(p00.r, p10.r, p01.r, p11.r), lerp(p00.g, p10.g, p01.g, p11.g),
              lerp(p00.b, p10.b, p01.b, p11.b), lerp(p00.a, p10.a, p01.a, p11.a)};
}

std::vector<float> to_gray(const ImageRGBA& img) {
  std::vector<float> gray(static_cast<std::size_t>(img.width()) * img.height());
  const auto& px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (px[i].a == 0) {
      gray[i] = 0.0f;
    } else {
      gray[i] = 0.299f * px[i].r + 0.587f * px[i].g + 0.114f * px[i].b;
    }
  }
  return gray;
}

}  // namespace facade3d

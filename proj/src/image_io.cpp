#include "facade3d/image_io.hpp"

#include <algorithm>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "facade3d/errors.hpp"

namespace facade3d {

namespace fs = std::filesystem;

ImageRGBA load_image_rgba(const fs::path& path) {
  if (!fs::exists(path)) {
    throw IoError("image file not found: " + path.string());
  }
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    throw IoError("failed to decode image: " + path.string());
  }
  if (raw.depth() == CV_16U) {
    raw.convertTo(raw, CV_MAKETYPE(CV_8U, raw.channels()), 255.0 / 65535.0);
  } else if (raw.depth() != CV_8U) {
    throw IoError("unsupported bit depth in " + path.string());
  }

  ImageRGBA img(raw.cols, raw.rows);
  const int ch = raw.channels();
  for (int y = 0; y < raw.rows; ++y) {
    const std::uint8_t* row = raw.ptr<std::uint8_t>(y);
    for (int x = 0; x < raw.cols; ++x) {
      const std::uint8_t* p = row + static_cast<std::size_t>(x) * ch;
      RGBA out;
      switch (ch) {
        case 1:
          out = RGBA{p[0], p[0], p[0], 255};
          break;
        case 3:  // OpenCV decodes as BGR
          out = RGBA{p[2], p[1], p[0], 255};
          break;
        case 4:  // BGRA
          out = RGBA{p[2], p[1], p[0], p[3]};
          break;
        default:
          throw IoError("unsupported channel count in " + path.string());
      }
      img.at(x, y) = out;
    }
  }
  return img;
}

void save_image_png(const ImageRGBA& img, const fs::path& path) {
  cv::Mat bgra(img.height(), img.width(), CV_8UC4);
  for (int y = 0; y < img.height(); ++y) {
    cv::Vec4b* row = bgra.ptr<cv::Vec4b>(y);
    for (int x = 0; x < img.width(); ++x) {
      const RGBA& p = img.at(x, y);
      row[x] = cv::Vec4b(p.b, p.g, p.r, p.a);
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgra)) {
    throw IoError("failed to write PNG: " + path.string());
  }
}

Image16 load_image_png16(const fs::path& path) {
  if (!fs::exists(path)) {
    throw IoError("image file not found: " + path.string());
  }
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    throw IoError("failed to decode image: " + path.string());
  }
  if (raw.channels() != 1 || raw.depth() != CV_16U) {
    throw IoError("expected 16-bit single-channel PNG: " + path.string());
  }
  Image16 img;
  img.width = raw.cols;
  img.height = raw.rows;
  img.data.resize(static_cast<std::size_t>(raw.cols) * raw.rows);
  for (int y = 0; y < raw.rows; ++y) {
    const std::uint16_t* row = raw.ptr<std::uint16_t>(y);
    std::copy(row, row + raw.cols,
              img.data.begin() + static_cast<std::size_t>(y) * raw.cols);
  }
  return img;
}

void save_image_png16(const Image16& img, const fs::path& path) {
  cv::Mat m(img.height, img.width, CV_16UC1);
  for (int y = 0; y < img.height; ++y) {
    std::uint16_t* row = m.ptr<std::uint16_t>(y);
    std::copy(img.data.begin() + static_cast<std::size_t>(y) * img.width,
              img.data.begin() + static_cast<std::size_t>(y + 1) * img.width,
              row);
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m)) {
    throw IoError("failed to write PNG: " + path.string());
  }
}

}  // namespace facade3d

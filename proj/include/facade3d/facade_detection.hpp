#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "facade3d/ortho.hpp"

namespace facade3d {

struct LineSegment {
  Vec2 p0, p1;
  double angle_deg = 0.0;  // in [0, 180)
  double length_px = 0.0;

  static LineSegment from_endpoints(const Vec2& a, const Vec2& b);
};

/// Facade bounding box in the aligned reference grid.
struct FacadeBox {
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
  double score = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
};

struct LineDetectOptions {
  double magnitude_percentile = 70.0;
  double orientation_tol_deg = 22.5;
  double min_length_px = 20.0;
};

/// LSD-style detector: pixels above the gradient-magnitude percentile are
/// region-grown by level-line orientation (within the tolerance) and each
/// region is fitted to a segment; only segments >= min_length_px survive.
std::vector<LineSegment> detect_line_segments(const OrthoImage& img,
                                              const LineDetectOptions& opts = {});

struct AxisLines {
  std::vector<LineSegment> vertical;
  std::vector<LineSegment> horizontal;
  std::vector<LineSegment> other;
};

/// Vertical iff |angle - 90| <= tol; horizontal iff min(angle, 180 - angle)
/// <= tol; everything else is "other".
AxisLines classify_axis_lines(const std::vector<LineSegment>& lines,
                              double tol_deg = 10.0);

/// Axis lines agreeing across >= 2 images (offset within offset_tol_px and
/// span overlap >= min_span_overlap of the shorter span) merge into one
/// reliable line at the median offset with the union span; everything else
/// is discarded as irrelevant.
std::vector<LineSegment> build_reliable_set(
    const std::vector<std::vector<LineSegment>>& per_image_lines,
    double offset_tol_px = 5.0, double min_span_overlap = 0.5);

struct FacadeRansacOptions {
  int iterations = 1000;
  double inside_tol_px = 2.0;   // tolerance band for inside/crossing scoring
  double dbscan_eps_px = 15.0;  // corner agreement radius (~0.3 m at 0.02 m/px)
  int dbscan_min_pts = 2;
  std::uint64_t seed = 0;
};

/// Per image: `iterations` trials sample 2 vertical + 2 horizontal reliable
/// lines as a candidate box, scored by the image's own lines (full length
/// inside adds, crossing the boundary subtracts). The best per-image boxes'
/// corners are clustered with DBSCAN and the dominant cluster's per-coordinate
/// median becomes the consensus box. Throws InsufficientStructure unless the
/// reliable set holds >= 2 vertical and >= 2 horizontal lines.
FacadeBox ransac_facade(const std::vector<std::vector<LineSegment>>& per_image_lines,
                        const std::vector<LineSegment>& reliable,
                        const FacadeRansacOptions& opts = {});

/// Crops every image to the box (rounded to whole pixels, clamped to bounds);
/// sidecar grid origins shift by the crop offset. Throws CropOutOfBounds when
/// the box misses an image entirely.
std::vector<OrthoImage> crop_facades(const std::vector<OrthoImage>& images,
                                     const FacadeBox& box);

// lines.json passthrough: {"images": [{"source_id": str,
// "segments": [{"p0": [x,y], "p1": [x,y]}, ...]}, ...]}
std::vector<std::vector<LineSegment>> lines_from_json(const nlohmann::json& j);
nlohmann::json lines_to_json(const std::vector<std::vector<LineSegment>>& lines,
                             const std::vector<std::string>& source_ids);

}  // namespace facade3d

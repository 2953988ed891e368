#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "facade3d/dataset.hpp"
#include "facade3d/geometry.hpp"
#include "facade3d/image.hpp"
#include "facade3d/plane_clustering.hpp"

namespace facade3d {

/// True-to-scale orthographic facade image plus the sidecar geometry that
/// makes pixel coordinates convertible to world meters. This is the unified
/// interface between the sparse (panorama) and dense (volume) paths.
struct OrthoImage {
  ImageRGBA image;
  double pixel_size = 0.02;  // m/px
  Plane plane;               // world frame
  PlaneBasis basis;
  Vec2 grid_origin2d;        // meters in (u, v) plane coordinates of pixel (0,0)
  std::string source_id;

  int width() const { return image.width(); }
  int height() const { return image.height(); }

  /// World point of continuous ortho pixel coordinates (pixel-boundary based:
  /// (0,0) is the corner of pixel (0,0)).
  Vec3 world_at(const Vec2& px) const {
    return basis.world_point(grid_origin2d +
                             Vec2(px.x * pixel_size, px.y * pixel_size));
  }
};

/// Abstract volumetric renderer: color of a single ray. Implementations must
/// be deterministic for fixed inputs.
class RayColorOracle {
 public:
  virtual ~RayColorOracle() = default;
  virtual RGBA query(const Vec3& origin, const UnitVec3& dir,
                     int samples) const = 0;
};

enum class ExtentMode { kPercentile, kMinMax };

struct OrthoOptions {
  SampleMode sampling = SampleMode::kBilinear;
  ExtentMode extent = ExtentMode::kPercentile;
  double percentile_lo = 2.0;
  double percentile_hi = 98.0;
  /// Margin added around the segment extent so the facade boundary stays
  /// visible inside the image (meters per side).
  double extent_pad_m = 0.5;
};

/// Orthographic projection of one plane segment seen from one panorama:
/// builds the plane frame, sizes the grid from the projected segment extent
/// (2nd-98th percentile by default, optionally padded), then reprojects every
/// grid pixel into the panorama and samples its color. Out-of-view pixels get
/// background (alpha 0). Throws EmptySegment / DegenerateExtent; DomainError
/// when segment points are not near-coplanar with the plane (0.2 m).
OrthoImage ortho_from_pano(const PanoRecord& pano, const ImageRGBA& pano_image,
                           const Plane& world_plane,
                           const std::vector<Vec3>& segment_points,
                           double pixel_size, const OrthoOptions& opts = {});

/// 3D points of a segment: every full-resolution pano pixel whose association
/// cell names plane_idx, cast through the pixel center onto the segment's
/// world plane (forward hits only).
std::vector<Vec3> segment_points_3d(const PanoRecord& rec, int plane_idx);

struct SegmentOrtho {
  SegmentRef ref;
  int cluster_id = 0;
  OrthoImage image;
};

struct SegmentOrthoSet {
  std::vector<SegmentOrtho> images;
  std::vector<SegmentRef> skipped;  // segments with no associated 3D points
};

using PanoImageProvider =
    std::function<std::shared_ptr<const ImageRGBA>(const PanoRecord&)>;

/// One orthographic image per cluster member segment, each generated against
/// its own local plane transformed to world. Segments with no associated
/// points are skipped (and listed in the result).
SegmentOrthoSet ortho_per_segment(const std::vector<PlaneCluster>& clusters,
                                  const std::vector<PanoRecord>& panos,
                                  double pixel_size,
                                  const OrthoOptions& opts = {},
                                  const PanoImageProvider& provider = nullptr,
                                  int num_threads = 0);

/// Orthographic image from a volumetric ray-color oracle over the rectangle
/// spanned by corners (v0 = origin, v1 = along u, v2 = along v). Pixel (x, y)
/// samples the oracle at v0 + x*s*u_hat + y*s*v_hat along the outward facade
/// normal u_hat x v_hat. Throws DegenerateExtent for degenerate or
/// non-orthogonal (> 2 deg) corners.
OrthoImage ortho_from_volume(const RayColorOracle& oracle,
                             const std::array<Vec3, 3>& corners,
                             double pixel_size, int samples_per_pixel,
                             int num_threads = 0);

/// Persists an ortho image as <stem>.png + <stem>.json sidecar carrying
/// pixel_size, plane, basis, grid_origin2d and source_id.
void save_ortho_image(const OrthoImage& img, const std::filesystem::path& stem);
OrthoImage load_ortho_image(const std::filesystem::path& stem);

}  // namespace facade3d

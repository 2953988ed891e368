#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facade3d/geometry.hpp"
#include "facade3d/image.hpp"

namespace facade3d {

/// Plane entry as it arrives in the dataset: raw [a,b,c] normal plus offset,
/// kept unnormalized so zero padding rows survive ingest and can be filtered
/// later the same way the upstream data intends.
struct PlaneRecord {
  Vec3 raw_normal;
  double raw_d = 0.0;

  bool is_zero(double eps = 1e-9) const { return raw_normal.norm() < eps; }

  /// Normalized plane; throws DomainError when the record is a zero row.
  Plane to_plane() const {
    return Plane::from_coefficients(raw_normal.x, raw_normal.y, raw_normal.z,
                                    raw_d);
  }
};

/// Low-resolution grid assigning panorama pixels to plane indices, -1 = none.
struct PlaneAssocMatrix {
  int cols = 512;
  int rows = 256;
  std::vector<std::int32_t> indices;  // rows*cols, row-major

  std::int32_t at(int col, int row) const {
    return indices[static_cast<std::size_t>(row) * cols + col];
  }
  std::int32_t& at(int col, int row) {
    return indices[static_cast<std::size_t>(row) * cols + col];
  }
};

struct PanoRecord {
  std::string pano_id;
  std::string image_path;  // resolved to an absolute path at load time
  int width = 0;
  int height = 0;
  PanoPose pose;
  std::string capture_date;  // ISO-8601 date, YYYY-MM-DD
  std::vector<std::string> neighbor_ids;
  std::vector<PlaneRecord> planes;  // panorama-local frame
  RigidTransform transform;         // local -> world
  PlaneAssocMatrix assoc;
};

struct DatasetManifest {
  std::string dataset_id;
  std::string frame_origin;  // free-text note about the local frame
  std::vector<PanoRecord> panos;
  std::optional<std::vector<Vec3>> footprint;
  std::filesystem::path base_dir;

  const PanoRecord* find(const std::string& pano_id) const;
};

/// Loads and eagerly validates a dataset manifest. Distinct error kinds:
/// IoError (missing manifest/image/assoc files), ParseError (malformed
/// JSON/fields), InvariantViolation (failed invariants, message carries the
/// field path).
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Origin view = most recently captured pano within `radius` of `center`
/// (horizontal distance only; ties broken by smallest pano_id), followed by
/// a breadth-first traversal over neighbor links keeping panos within the
/// radius. Output order is traversal order. Throws EmptySelection.
std::vector<PanoRecord> select_origin_and_traverse(const DatasetManifest& manifest,
                                                   const Vec3& center,
                                                   double radius);

/// Keeps only panos sharing the most recent capture date; stable order.
std::vector<PanoRecord> filter_same_date(const std::vector<PanoRecord>& panos);

/// Plane index for a full-resolution pixel via the association matrix;
/// nullopt when the cell holds -1. Throws DomainError out of bounds.
std::optional<int> plane_for_pixel(const PanoRecord& rec, double x, double y);

/// Loads the pano image for a record (path already resolved by load_manifest).
ImageRGBA load_pano_image(const PanoRecord& rec);

}  // namespace facade3d

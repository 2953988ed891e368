#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "facade3d/facade_detection.hpp"
#include "facade3d/fusion.hpp"
#include "facade3d/geometry.hpp"

namespace facade3d {

/// 3D window rectangle on a facade plane; corners CCW viewed from outside.
struct WindowGeometry3D {
  std::array<Vec3, 4> corners;
  double width_m = 0.0;
  double height_m = 0.0;
  double area_m2 = 0.0;

  bool operator==(const WindowGeometry3D& o) const;
};

struct FacadeModel {
  std::string facade_id;
  Plane plane;
  PlaneBasis basis;
  FacadeBox bbox_px;   // in the aligned reference grid
  Vec2 origin2d;       // (u, v) meters of the facade crop's pixel (0, 0)
  Vec3 center3d;       // world point of the facade bbox center pixel
  double width_m = 0.0;
  double height_m = 0.0;
  double pixel_size = 0.02;
  std::vector<WindowGeometry3D> windows;
  double wwr = 0.0;

  bool operator==(const FacadeModel& o) const;
};

struct ThermalModel {
  std::string building_id;
  std::vector<FacadeModel> facades;
  std::optional<std::vector<Vec3>> footprint;
  std::string frame_note;

  bool operator==(const ThermalModel& o) const;
};

/// Converts a fused 2D detection (pixels in the facade crop grid) into 3D
/// window geometry via the facade's pixel scale and plane frame. Throws
/// OutOfFacade when the bbox leaves the facade crop.
WindowGeometry3D bbox_to_world(const Detection& det, const FacadeModel& facade);

/// Window-to-wall ratio: union area of the facade's windows (overlaps counted
/// once, exact rectilinear sweep) divided by the facade area. Throws
/// DegenerateFacade for zero facade area.
double compute_wwr(const FacadeModel& facade);

/// Exact union area of axis-aligned rectangles (coordinate-compression sweep).
double rect_union_area(const std::vector<Box2>& rects);

/// Validates and assembles the final model; facade ids must be unique.
ThermalModel assemble_model(const std::string& building_id,
                            std::vector<FacadeModel> facades,
                            std::optional<std::vector<Vec3>> footprint,
                            const std::string& frame_note = "");

/// Lossless JSON round trip: model_from_json(model_to_json(m)) == m.
nlohmann::json model_to_json(const ThermalModel& m);
ThermalModel model_from_json(const nlohmann::json& j);

void save_model(const ThermalModel& m, const std::filesystem::path& path);
ThermalModel load_model(const std::filesystem::path& path);

}  // namespace facade3d

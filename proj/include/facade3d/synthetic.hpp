#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "facade3d/dataset.hpp"
#include "facade3d/evaluation.hpp"
#include "facade3d/fusion.hpp"
#include "facade3d/geometry.hpp"
#include "facade3d/ortho.hpp"

namespace facade3d {

struct SynthWindow {
  Box2 rect_uv;  // absolute (u, v) rectangle in the facade's plane frame
  RGBA color;
};

struct SynthFacade {
  Plane plane;    // world frame, outward normal
  Box2 extent_uv; // facade rectangle in the plane frame
  RGBA wall_color;
  std::vector<SynthWindow> windows;
};

struct SynthOccluder {
  Vec3 lo, hi;  // axis-aligned box
  RGBA color;
};

struct SynthBuilding {
  std::vector<SynthFacade> facades;
  std::vector<Vec3> footprint;  // CCW, z = 0
  double height = 0.0;
  RGBA sky_color{135, 206, 235, 255};
  std::vector<SynthOccluder> occluders;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int n_facades = 4;  // 4 = rectangular footprint; >= 3 = regular polygon
  double side_min = 9.0, side_max = 15.0;
  double height_min = 7.0, height_max = 11.0;
  int win_rows_min = 2, win_rows_max = 4;
  int win_cols_min = 3, win_cols_max = 6;
  double win_fill_min = 0.50, win_fill_max = 0.65;  // window side / grid cell
  double win_w_min = 0.5, win_w_max = 2.4;          // absolute clamps, meters
  double win_h_min = 0.6, win_h_max = 2.6;
  double facade_margin = 0.8;

  int pano_count = 8;
  double pano_ring_radius = 0.0;  // 0 = auto: footprint half-diagonal + clearance
  double ring_clearance = 8.0;
  double eye_height = 2.5;
  int pano_width = 4096, pano_height = 2048;
  int assoc_cols = 512, assoc_rows = 256;

  double plane_d_jitter = 2.5e-4;  // per-(pano, facade) uniform offset jitter
  double pixel_noise_sigma = 0.0;
  std::string capture_date = "2024-05-01";
  bool add_ground_plane_record = true;
  bool add_zero_plane_record = true;

  RGBA sky{135, 206, 235, 255};
  RGBA window_color{40, 55, 90, 255};
  std::vector<RGBA> wall_palette{RGBA{205, 205, 200, 255},
                                 RGBA{185, 192, 198, 255},
                                 RGBA{212, 200, 188, 255},
                                 RGBA{196, 206, 186, 255}};
  std::vector<SynthOccluder> occluders;

  void validate() const;  // throws ConfigError
};

nlohmann::json synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Deterministic per seed. Throws ConfigError when the window grid cannot fit
/// inside a facade.
SynthBuilding generate_building(const SynthConfig& cfg);

/// Exact ground truth (facade rectangles, window rectangles, WWR).
GroundTruth building_ground_truth(const SynthBuilding& b,
                                  const std::string& building_id);

nlohmann::json building_to_json(const SynthBuilding& b);
SynthBuilding building_from_json(const nlohmann::json& j);

struct RenderOptions {
  int assoc_cols = 512, assoc_rows = 256;
  double plane_d_jitter = 0.0;
  double pixel_noise_sigma = 0.0;
  std::uint64_t seed = 0;
  bool add_ground_plane_record = true;
  bool add_zero_plane_record = true;
  int num_threads = 0;
};

struct RenderedPano {
  PanoRecord record;  // pano_id / image_path / capture_date left to the caller
  ImageRGBA image;
};

/// Analytic equirectangular render: per pixel, the nearest facade hit within
/// its extent (window color inside window rects, wall color otherwise),
/// occluders in front, sky on miss. The association matrix carries the
/// nearest-facade index at cell centers. Throws DegeneratePose when the pose
/// sits inside the building.
RenderedPano render_panorama(const SynthBuilding& b, const PanoPose& pose,
                             int width, int height,
                             const RenderOptions& opts = {});

/// Stand-in for a learned window detector on synthetic orthos: connected
/// components (4-connectivity) of pixels within tolerance of window_color;
/// tight bboxes, score 1.0.
std::vector<Detection> oracle_window_detector(const OrthoImage& img,
                                              RGBA window_color,
                                              int tolerance = 80,
                                              int min_area_px = 4);

/// Analytic ray-color oracle over the synthetic building (the dense-path
/// stand-in): a ray starting on a facade returns that facade's paint.
class SynthBuildingOracle : public RayColorOracle {
 public:
  explicit SynthBuildingOracle(SynthBuilding building);
  RGBA query(const Vec3& origin, const UnitVec3& dir, int samples) const override;

 private:
  SynthBuilding building_;
  std::vector<PlaneBasis> bases_;
};

class ConstantOracle : public RayColorOracle {
 public:
  explicit ConstantOracle(RGBA color) : color_(color) {}
  RGBA query(const Vec3&, const UnitVec3&, int) const override { return color_; }

 private:
  RGBA color_;
};

/// Writes a complete synthetic dataset: dataset.json + images/ + assoc/ +
/// ground_truth.json + scene.json, consumable by load_manifest.
void write_synthetic_dataset(const SynthConfig& cfg,
                             const std::filesystem::path& out_dir,
                             int num_threads = 0);

}  // namespace facade3d

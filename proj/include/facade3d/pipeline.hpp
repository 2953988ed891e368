#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "facade3d/alignment.hpp"
#include "facade3d/evaluation.hpp"
#include "facade3d/facade_detection.hpp"
#include "facade3d/fusion.hpp"
#include "facade3d/ortho.hpp"
#include "facade3d/synthetic.hpp"
#include "facade3d/thermal_model.hpp"

namespace facade3d {

enum class DataSourceType { kStreetView, kCamera2D };

struct PipelinePaths {
  std::filesystem::path dataset;       // dataset.json manifest (streetview)
  std::filesystem::path out;           // artifact directory
  std::filesystem::path detections;    // external detections file (optional)
  std::filesystem::path ground_truth;  // optional
  std::filesystem::path lines;         // optional precomputed lines.json
};

struct SelectionConfig {
  Vec3 center;
  double radius = 100.0;
  bool same_date_only = true;
};

struct DetectorConfig {
  bool use_oracle = true;
  RGBA window_color{40, 55, 90, 255};
  int tolerance = 80;
  int min_area_px = 4;
};

struct Camera2DConfig {
  std::array<Vec3, 3> corners{};  // v0, v1 (along u), v2 (along v)
  std::string oracle = "building";  // "building" (scene.json) or "constant"
  std::filesystem::path scene;
  RGBA constant_color{128, 128, 128, 255};
  int samples_per_pixel = 8;
};

struct FacadeStageConfig {
  LineDetectOptions line_detect;
  double axis_tol_deg = 10.0;
  double offset_tol_px = 5.0;
  double min_span_overlap = 0.5;
  FacadeRansacOptions ransac;
};

struct PipelineConfig {
  DataSourceType data_source_type = DataSourceType::kStreetView;
  std::uint64_t seed = 0;
  double pixel_size = 0.02;
  int threads = 0;
  PipelinePaths paths;
  SelectionConfig selection;
  double cluster_threshold = 1e-5;
  OrthoOptions ortho;
  AlignGroupOptions alignment;
  FacadeStageConfig facade;
  FusionConfig fusion;
  DetectorConfig detector;
  Camera2DConfig camera2d;

  void validate() const;  // throws ConfigError
};

/// Parses a config file; absent fields take the documented defaults, and
/// relative paths resolve against the config file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

// Stage functions; each reads the config plus the previous stage's artifacts
// from cfg.paths.out and writes its own artifact there, so running stages
// one-by-one equals one run_pipeline call. Errors gain a "stage <name>:"
// prefix; artifacts written before a failure stay on disk.
void stage_ingest(const PipelineConfig& cfg);   // selection.json
void stage_cluster(const PipelineConfig& cfg);  // clusters.json
void stage_ortho(const PipelineConfig& cfg);    // ortho/** + ortho_index.json
void stage_align(const PipelineConfig& cfg);    // aligned/** + alignment_report.json
void stage_facade(const PipelineConfig& cfg);   // cropped/** + facade_report.json
void stage_fuse(const PipelineConfig& cfg);     // detections_{raw,fused}.json
void stage_model(const PipelineConfig& cfg);    // model.json
void stage_eval(const PipelineConfig& cfg);     // eval_report.json + summary.csv

struct PipelineResult {
  ThermalModel model;
  std::optional<EvalReport> eval;
};

/// Runs the configured branch end-to-end (streetview: ingest/cluster/ortho/
/// align/facade/fuse/model; camera2d: ortho/fuse/model) plus eval when ground
/// truth is configured. Identical config + seed gives byte-identical
/// artifacts, independent of the thread count.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace facade3d

#include "facade3d/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "facade3d/json_util.hpp"
#include "facade3d/util.hpp"

namespace facade3d {

namespace fs = std::filesystem;

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (j.is_object() && j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

RGBA rgba_or(const Json& j, const char* key, RGBA fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const Json& a = j.at(key);
  if (!a.is_array() || a.size() != 4) throw ParseError("expected [r,g,b,a]");
  return RGBA{a[0].get<std::uint8_t>(), a[1].get<std::uint8_t>(),
              a[2].get<std::uint8_t>(), a[3].get<std::uint8_t>()};
}

fs::path path_or(const Json& j, const char* key, const fs::path& base_dir) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return {};
  const fs::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base_dir / p;
}

void collect_override_keys(const Json& j, const std::string& prefix,
                           std::vector<std::string>* out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      collect_override_keys(it.value(), prefix + "/" + it.key(), out);
    }
  } else {
    out->push_back(prefix);
  }
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == ':' || c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return out;
}

[[noreturn]] void rethrow_with_stage(const char* stage, const Error& e) {
  throw Error(e.error_class(), std::string("stage ") + stage + ": " + e.what());
}

#define FACADE3D_STAGE_GUARD(stage, body)      \
  try {                                        \
    body;                                      \
  } catch (const Error& e) {                   \
    rethrow_with_stage(stage, e);              \
  }

}  // namespace

void PipelineConfig::validate() const {
  if (!(pixel_size > 0.0)) throw ConfigError("pixel_size must be positive");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (paths.out.empty()) throw ConfigError("paths.out is required");
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(fusion.tau_conf) || !in01(fusion.tau_iou) || !in01(fusion.tau_score2)) {
    throw ConfigError("fusion thresholds must lie in [0,1]");
  }
  if (fusion.n_min < 1) throw ConfigError("fusion.n_min must be >= 1");
  if (facade.ransac.iterations < 1 || alignment.ransac.iterations < 1) {
    throw ConfigError("RANSAC iteration counts must be >= 1");
  }
  if (!(selection.radius > 0.0)) throw ConfigError("selection.radius must be positive");
  if (data_source_type == DataSourceType::kStreetView) {
    if (paths.dataset.empty()) {
      throw ConfigError("paths.dataset is required for the streetview branch");
    }
  } else {
    if (camera2d.oracle != "building" && camera2d.oracle != "constant") {
      throw ConfigError("camera2d.oracle must be 'building' or 'constant'");
    }
    if (camera2d.oracle == "building" && camera2d.scene.empty()) {
      throw ConfigError("camera2d.scene is required for the building oracle");
    }
  }
  if (!detector.use_oracle && paths.detections.empty()) {
    throw ConfigError(
        "paths.detections is required when detector.use_oracle is false");
  }
}

PipelineConfig pipeline_config_from_json(const Json& j, const fs::path& base_dir) {
  PipelineConfig cfg;

  const std::string source =
      get_or<std::string>(j, "data_source_type", "streetview");
  if (source == "streetview") {
    cfg.data_source_type = DataSourceType::kStreetView;
  } else if (source == "camera2d") {
    cfg.data_source_type = DataSourceType::kCamera2D;
  } else {
    throw ConfigError("data_source_type must be 'streetview' or 'camera2d'");
  }

  if (!j.contains("seed")) {
    throw ConfigError("seed is mandatory in the pipeline config");
  }
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.pixel_size = get_or<double>(j, "pixel_size", 0.02);
  cfg.threads = get_or<int>(j, "threads", 0);

  const Json paths = j.contains("paths") ? j.at("paths") : Json::object();
  cfg.paths.dataset = path_or(paths, "dataset", base_dir);
  cfg.paths.out = path_or(paths, "out", base_dir);
  if (cfg.paths.out.empty()) cfg.paths.out = base_dir / "out";
  cfg.paths.detections = path_or(paths, "detections", base_dir);
  cfg.paths.ground_truth = path_or(paths, "ground_truth", base_dir);
  cfg.paths.lines = path_or(paths, "lines", base_dir);

  const Json sel = j.contains("selection") ? j.at("selection") : Json::object();
  cfg.selection.center = get_or<Vec3>(sel, "center", Vec3());
  cfg.selection.radius = get_or<double>(sel, "radius", 100.0);
  cfg.selection.same_date_only = get_or<bool>(sel, "same_date_only", true);

  const Json clu = j.contains("clustering") ? j.at("clustering") : Json::object();
  cfg.cluster_threshold = get_or<double>(clu, "threshold", 1e-5);

  const Json ortho = j.contains("ortho") ? j.at("ortho") : Json::object();
  const std::string sampling = get_or<std::string>(ortho, "sampling", "bilinear");
  if (sampling == "bilinear") {
    cfg.ortho.sampling = SampleMode::kBilinear;
  } else if (sampling == "nearest") {
    cfg.ortho.sampling = SampleMode::kNearest;
  } else {
    throw ConfigError("ortho.sampling must be 'bilinear' or 'nearest'");
  }
  const std::string extent = get_or<std::string>(ortho, "extent", "percentile");
  if (extent == "percentile") {
    cfg.ortho.extent = ExtentMode::kPercentile;
  } else if (extent == "minmax") {
    cfg.ortho.extent = ExtentMode::kMinMax;
  } else {
    throw ConfigError("ortho.extent must be 'percentile' or 'minmax'");
  }
  cfg.ortho.percentile_lo = get_or<double>(ortho, "percentile_lo", 2.0);
  cfg.ortho.percentile_hi = get_or<double>(ortho, "percentile_hi", 98.0);
  cfg.ortho.extent_pad_m = get_or<double>(ortho, "extent_pad_m", 0.5);

  const Json align = j.contains("alignment") ? j.at("alignment") : Json::object();
  cfg.alignment.match.max_features = get_or<int>(align, "max_features", 500);
  cfg.alignment.match.ratio = get_or<double>(align, "ratio", 0.75);
  cfg.alignment.match.patch_radius = get_or<int>(align, "patch_radius", 4);
  cfg.alignment.ransac.iterations = get_or<int>(align, "iterations", 500);
  cfg.alignment.ransac.inlier_px = get_or<double>(align, "inlier_px", 2.0);
  cfg.alignment.ransac.min_inlier_ratio =
      get_or<double>(align, "min_inlier_ratio", 0.5);

  const Json fac = j.contains("facade") ? j.at("facade") : Json::object();
  cfg.facade.line_detect.magnitude_percentile =
      get_or<double>(fac, "line_magnitude_percentile", 70.0);
  cfg.facade.line_detect.orientation_tol_deg =
      get_or<double>(fac, "line_orientation_tol_deg", 22.5);
  cfg.facade.line_detect.min_length_px =
      get_or<double>(fac, "line_min_length_px", 20.0);
  cfg.facade.axis_tol_deg = get_or<double>(fac, "axis_tol_deg", 10.0);
  cfg.facade.offset_tol_px = get_or<double>(fac, "offset_tol_px", 5.0);
  cfg.facade.min_span_overlap = get_or<double>(fac, "min_span_overlap", 0.5);
  cfg.facade.ransac.iterations = get_or<int>(fac, "iterations", 1000);
  cfg.facade.ransac.inside_tol_px = get_or<double>(fac, "inside_tol_px", 2.0);
  cfg.facade.ransac.dbscan_eps_px = get_or<double>(fac, "dbscan_eps_px", 15.0);
  cfg.facade.ransac.dbscan_min_pts = get_or<int>(fac, "dbscan_min_pts", 2);

  const Json fus = j.contains("fusion") ? j.at("fusion") : Json::object();
  cfg.fusion.tau_conf = get_or<double>(fus, "tau_conf", 0.2);
  cfg.fusion.tau_iou = get_or<double>(fus, "tau_iou", 0.3);
  cfg.fusion.n_min = get_or<int>(fus, "n_min", 2);
  cfg.fusion.tau_score2 = get_or<double>(fus, "tau_score2", 0.4);
  cfg.fusion.count_distinct_sources =
      get_or<bool>(fus, "count_distinct_sources", false);

  const Json det = j.contains("detector") ? j.at("detector") : Json::object();
  cfg.detector.use_oracle = get_or<bool>(det, "use_oracle", true);
  cfg.detector.window_color = rgba_or(det, "window_color", RGBA{40, 55, 90, 255});
  cfg.detector.tolerance = get_or<int>(det, "tolerance", 80);
  cfg.detector.min_area_px = get_or<int>(det, "min_area_px", 4);

  const Json cam = j.contains("camera2d") ? j.at("camera2d") : Json::object();
  if (cam.contains("corners")) {
    const Json& c = cam.at("corners");
    if (!c.is_array() || c.size() != 3) {
      throw ConfigError("camera2d.corners must be [v0, v1, v2]");
    }
    for (int i = 0; i < 3; ++i) cfg.camera2d.corners[i] = c[i].get<Vec3>();
  }
  cfg.camera2d.oracle = get_or<std::string>(cam, "oracle", "building");
  cfg.camera2d.scene = path_or(cam, "scene", base_dir);
  cfg.camera2d.constant_color =
      rgba_or(cam, "constant_color", RGBA{128, 128, 128, 255});
  cfg.camera2d.samples_per_pixel = get_or<int>(cam, "samples_per_pixel", 8);

  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  const Json j = load_json_file(path);
  const fs::path base =
      path.has_parent_path() ? path.parent_path() : fs::path(".");
  return pipeline_config_from_json(j, base);
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
  Json j;
  j["data_source_type"] =
      cfg.data_source_type == DataSourceType::kStreetView ? "streetview"
                                                          : "camera2d";
  j["seed"] = cfg.seed;
  j["pixel_size"] = cfg.pixel_size;
  j["threads"] = cfg.threads;
  j["paths"] = Json{{"dataset", cfg.paths.dataset.string()},
                    {"out", cfg.paths.out.string()},
                    {"detections", cfg.paths.detections.string()},
                    {"ground_truth", cfg.paths.ground_truth.string()},
                    {"lines", cfg.paths.lines.string()}};
  j["selection"] = Json{{"center", cfg.selection.center},
                        {"radius", cfg.selection.radius},
                        {"same_date_only", cfg.selection.same_date_only}};
  j["clustering"] = Json{{"threshold", cfg.cluster_threshold}};
  j["ortho"] = Json{
      {"sampling", cfg.ortho.sampling == SampleMode::kBilinear ? "bilinear" : "nearest"},
      {"extent", cfg.ortho.extent == ExtentMode::kPercentile ? "percentile" : "minmax"},
      {"percentile_lo", cfg.ortho.percentile_lo},
      {"percentile_hi", cfg.ortho.percentile_hi},
      {"extent_pad_m", cfg.ortho.extent_pad_m}};
  j["alignment"] = Json{{"max_features", cfg.alignment.match.max_features},
                        {"ratio", cfg.alignment.match.ratio},
                        {"patch_radius", cfg.alignment.match.patch_radius},
                        {"iterations", cfg.alignment.ransac.iterations},
                        {"inlier_px", cfg.alignment.ransac.inlier_px},
                        {"min_inlier_ratio", cfg.alignment.ransac.min_inlier_ratio}};
  j["facade"] = Json{{"line_magnitude_percentile",
                      cfg.facade.line_detect.magnitude_percentile},
                     {"line_orientation_tol_deg",
                      cfg.facade.line_detect.orientation_tol_deg},
                     {"line_min_length_px", cfg.facade.line_detect.min_length_px},
                     {"axis_tol_deg", cfg.facade.axis_tol_deg},
                     {"offset_tol_px", cfg.facade.offset_tol_px},
                     {"min_span_overlap", cfg.facade.min_span_overlap},
                     {"iterations", cfg.facade.ransac.iterations},
                     {"inside_tol_px", cfg.facade.ransac.inside_tol_px},
                     {"dbscan_eps_px", cfg.facade.ransac.dbscan_eps_px},
                     {"dbscan_min_pts", cfg.facade.ransac.dbscan_min_pts}};
  j["fusion"] = Json{{"tau_conf", cfg.fusion.tau_conf},
                     {"tau_iou", cfg.fusion.tau_iou},
                     {"n_min", cfg.fusion.n_min},
                     {"tau_score2", cfg.fusion.tau_score2},
                     {"count_distinct_sources", cfg.fusion.count_distinct_sources}};
  j["detector"] = Json{{"use_oracle", cfg.detector.use_oracle},
                       {"window_color", Json::array({cfg.detector.window_color.r,
                                                     cfg.detector.window_color.g,
                                                     cfg.detector.window_color.b,
                                                     cfg.detector.window_color.a})},
                       {"tolerance", cfg.detector.tolerance},
                       {"min_area_px", cfg.detector.min_area_px}};
  Json corners = Json::array();
  for (const Vec3& c : cfg.camera2d.corners) corners.push_back(c);
  j["camera2d"] = Json{{"corners", corners},
                       {"oracle", cfg.camera2d.oracle},
                       {"scene", cfg.camera2d.scene.string()},
                       {"constant_color", Json::array({cfg.camera2d.constant_color.r,
                                                       cfg.camera2d.constant_color.g,
                                                       cfg.camera2d.constant_color.b,
                                                       cfg.camera2d.constant_color.a})},
                       {"samples_per_pixel", cfg.camera2d.samples_per_pixel}};
  return j;
}

namespace {

void write_config_echo(const PipelineConfig& cfg) {
  write_json_file(pipeline_config_to_json(cfg),
                  cfg.paths.out / "config_resolved.json");
}

std::vector<PanoRecord> load_selected_panos(const PipelineConfig& cfg,
                                            DatasetManifest* manifest_out) {
  DatasetManifest manifest = load_manifest(cfg.paths.dataset);
  const Json sel = load_json_file(cfg.paths.out / "selection.json");
  std::vector<PanoRecord> panos;
  for (const Json& id : require_field(sel, "pano_ids", "selection")) {
    const PanoRecord* rec = manifest.find(id.get<std::string>());
    if (rec == nullptr) {
      throw InvariantViolation("selection references unknown pano '" +
                               id.get<std::string>() + "'");
    }
    panos.push_back(*rec);
  }
  if (manifest_out != nullptr) *manifest_out = std::move(manifest);
  return panos;
}

struct FacadeEntry {
  int cluster_id = 0;
  std::string facade_id;
  bool ok = false;
  std::string reason;
  FacadeBox box;
  int crop_w = 0, crop_h = 0;
  Plane plane;
  PlaneBasis basis;
  Vec2 origin2d;  // crop pixel (0,0) in plane coordinates
  double pixel_size = 0.02;
  Vec3 center3d;
  std::vector<std::string> image_stems;  // cropped image stems, relative to out
  std::vector<std::string> source_ids;
};

Json facade_entry_to_json(const FacadeEntry& e) {
  Json j{{"cluster_id", e.cluster_id},
         {"facade_id", e.facade_id},
         {"status", e.ok ? "ok" : "failed"}};
  if (!e.ok) {
    j["reason"] = e.reason;
    return j;
  }
  j["box"] = Json::array({e.box.x_min, e.box.y_min, e.box.x_max, e.box.y_max});
  j["box_score"] = e.box.score;
  j["crop_size"] = Json::array({e.crop_w, e.crop_h});
  j["plane"] = e.plane;
  j["basis"] = e.basis;
  j["origin2d"] = e.origin2d;
  j["pixel_size"] = e.pixel_size;
  j["center3d"] = e.center3d;
  j["images"] = e.image_stems;
  j["sources"] = e.source_ids;
  return j;
}

FacadeEntry facade_entry_from_json(const Json& j) {
  FacadeEntry e;
  e.cluster_id = require_field(j, "cluster_id", "facade entry").get<int>();
  e.facade_id = require_field(j, "facade_id", "facade entry").get<std::string>();
  e.ok = require_field(j, "status", "facade entry").get<std::string>() == "ok";
  if (!e.ok) {
    e.reason = get_or<std::string>(j, "reason", "");
    return e;
  }
  const Json& b = require_field(j, "box", "facade entry");
  e.box = FacadeBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                    b[3].get<double>(), get_or<double>(j, "box_score", 0.0)};
  const Json& cs = require_field(j, "crop_size", "facade entry");
  e.crop_w = cs[0].get<int>();
  e.crop_h = cs[1].get<int>();
  e.plane = require_field(j, "plane", "facade entry").get<Plane>();
  e.basis = require_field(j, "basis", "facade entry").get<PlaneBasis>();
  e.origin2d = require_field(j, "origin2d", "facade entry").get<Vec2>();
  e.pixel_size = require_field(j, "pixel_size", "facade entry").get<double>();
  e.center3d = require_field(j, "center3d", "facade entry").get<Vec3>();
  e.image_stems =
      require_field(j, "images", "facade entry").get<std::vector<std::string>>();
  e.source_ids =
      require_field(j, "sources", "facade entry").get<std::vector<std::string>>();
  return e;
}

std::unique_ptr<RayColorOracle> make_oracle(const PipelineConfig& cfg) {
  if (cfg.camera2d.oracle == "constant") {
    return std::make_unique<ConstantOracle>(cfg.camera2d.constant_color);
  }
  const SynthBuilding scene =
      building_from_json(load_json_file(cfg.camera2d.scene));
  return std::make_unique<SynthBuildingOracle>(scene);
}

}  // namespace

void stage_ingest(const PipelineConfig& cfg) {
  FACADE3D_STAGE_GUARD("ingest", {
    if (cfg.data_source_type != DataSourceType::kStreetView) {
      throw ConfigError("ingest applies to the streetview branch only");
    }
    write_config_echo(cfg);
    const DatasetManifest manifest = load_manifest(cfg.paths.dataset);
    std::vector<PanoRecord> selected = select_origin_and_traverse(
        manifest, cfg.selection.center, cfg.selection.radius);
    if (cfg.selection.same_date_only) selected = filter_same_date(selected);
    Json ids = Json::array();
    for (const PanoRecord& rec : selected) ids.push_back(rec.pano_id);
    write_json_file(Json{{"dataset_id", manifest.dataset_id}, {"pano_ids", ids}},
                    cfg.paths.out / "selection.json");
  });
}

void stage_cluster(const PipelineConfig& cfg) {
  FACADE3D_STAGE_GUARD("cluster", {
    if (cfg.data_source_type != DataSourceType::kStreetView) {
      throw ConfigError("cluster applies to the streetview branch only");
    }
    write_config_echo(cfg);
    const std::vector<PanoRecord> panos = load_selected_panos(cfg, nullptr);
    const std::vector<PlaneCluster> clusters =
        cluster_planes(panos, cfg.cluster_threshold);
    write_json_file(cluster_report(clusters), cfg.paths.out / "clusters.json");
  });
}

void stage_ortho(const PipelineConfig& cfg) {
  FACADE3D_STAGE_GUARD("ortho", {
    write_config_echo(cfg);
    if (cfg.data_source_type == DataSourceType::kCamera2D) {
      const std::unique_ptr<RayColorOracle> oracle = make_oracle(cfg);
      OrthoImage img =
          ortho_from_volume(*oracle, cfg.camera2d.corners, cfg.pixel_size,
                            cfg.camera2d.samples_per_pixel, cfg.threads);
      save_ortho_image(img, cfg.paths.out / "ortho" / "camera2d");
      write_json_file(Json{{"camera2d", "ortho/camera2d"}},
                      cfg.paths.out / "ortho_index.json");
      return;
    }

    const std::vector<PanoRecord> panos = load_selected_panos(cfg, nullptr);
    const std::vector<PlaneCluster> clusters =
        clusters_from_report(load_json_file(cfg.paths.out / "clusters.json"));
    const SegmentOrthoSet set = ortho_per_segment(
        clusters, panos, cfg.pixel_size, cfg.ortho, nullptr, cfg.threads);

    std::map<int, Json> cluster_entries;
    for (const PlaneCluster& cl : clusters) {
      cluster_entries[cl.cluster_id] =
          Json{{"cluster_id", cl.cluster_id}, {"images", Json::array()},
               {"skipped", Json::array()}};
    }
    for (const SegmentOrtho& seg : set.images) {
      const std::string stem = "ortho/cluster_" + std::to_string(seg.cluster_id) +
                               "/" + sanitize(seg.ref.id());
      save_ortho_image(seg.image, cfg.paths.out / stem);
      cluster_entries[seg.cluster_id]["images"].push_back(stem);
    }
    for (const PlaneCluster& cl : clusters) {
      for (const SegmentRef& ref : cl.members) {
        if (std::find_if(set.skipped.begin(), set.skipped.end(),
                         [&](const SegmentRef& s) { return s == ref; }) !=
            set.skipped.end()) {
          cluster_entries[cl.cluster_id]["skipped"].push_back(ref.id());
        }
      }
    }
    Json index{{"clusters", Json::array()}};
    for (auto& [id, entry] : cluster_entries) index["clusters"].push_back(entry);
    write_json_file(index, cfg.paths.out / "ortho_index.json");
  });
}

void stage_align(const PipelineConfig& cfg) {
  FACADE3D_STAGE_GUARD("align", {
    if (cfg.data_source_type != DataSourceType::kStreetView) {
      throw ConfigError("align applies to the streetview branch only");
    }
    write_config_echo(cfg);
    const Json index = load_json_file(cfg.paths.out / "ortho_index.json");

    Json report{{"clusters", Json::array()}};
    for (const Json& entry : require_field(index, "clusters", "ortho index")) {
      const int cluster_id = entry.at("cluster_id").get<int>();
      std::vector<OrthoImage> images;
      for (const Json& stem : entry.at("images")) {
        images.push_back(load_ortho_image(cfg.paths.out / stem.get<std::string>()));
      }
      Json cluster_out{{"cluster_id", cluster_id},
                       {"images", Json::array()},
                       {"report", Json::array()}};
      if (!images.empty()) {
        AlignGroupOptions opts = cfg.alignment;
        opts.num_threads = cfg.threads;
        opts.ransac.seed = derive_seed(cfg.seed, "align-cluster",
                                       static_cast<std::uint64_t>(cluster_id));
        const AlignedGroup group = align_group(images, opts);
        for (std::size_t i = 0; i < group.images.size(); ++i) {
          char prefix[16];
          std::snprintf(prefix, sizeof(prefix), "%02zu_", i);
          const std::string stem = "aligned/cluster_" + std::to_string(cluster_id) +
                                   "/" + prefix + sanitize(group.images[i].source_id);
          save_ortho_image(group.images[i], cfg.paths.out / stem);
          cluster_out["images"].push_back(stem);
        }
        cluster_out["report"] = group.report;
      }
      report["clusters"].push_back(std::move(cluster_out));
    }
    write_json_file(report, cfg.paths.out / "alignment_report.json");
  });
}

void stage_facade(const PipelineConfig& cfg) {
  FACADE3D_STAGE_GUARD("facade", {
    write_config_echo(cfg);
    std::vector<FacadeEntry> entries;

    if (cfg.data_source_type == DataSourceType::kCamera2D) {
      const Json index = load_json_file(cfg.paths.out / "ortho_index.json");
      const std::string stem =
          require_field(index, "camera2d", "ortho index").get<std::string>();
      const OrthoImage img = load_ortho_image(cfg.paths.out / stem);

      FacadeEntry e;
      e.cluster_id = 0;
      e.facade_id = "facade_0";
      e.ok = true;
      e.box = FacadeBox{0.0, 0.0, static_cast<double>(img.width()),
                        static_cast<double>(img.height()), 0.0};
      e.crop_w = img.width();
      e.crop_h = img.height();
      e.plane = img.plane;
      e.basis = img.basis;
      e.origin2d = img.grid_origin2d;
      e.pixel_size = img.pixel_size;
      e.center3d = img.world_at(Vec2(img.width() / 2.0, img.height() / 2.0));
      const std::string crop_stem = "cropped/facade_0/00_volume";
      save_ortho_image(img, cfg.paths.out / crop_stem);
      e.image_stems = {crop_stem};
      e.source_ids = {img.source_id};
      entries.push_back(std::move(e));
    } else {
      const Json report = load_json_file(cfg.paths.out / "alignment_report.json");

      // Optional precomputed lines, keyed by source id.
      std::map<std::string, std::vector<LineSegment>> supplied;
      if (!cfg.paths.lines.empty()) {
        const Json lj = load_json_file(cfg.paths.lines);
        for (const Json& img : require_field(lj, "images", "lines file")) {
          std::vector<LineSegment> lines;
          for (const Json& seg : require_field(img, "segments", "lines image")) {
            lines.push_back(LineSegment::from_endpoints(
                require_field(seg, "p0", "segment").get<Vec2>(),
                require_field(seg, "p1", "segment").get<Vec2>()));
          }
          supplied[require_field(img, "source_id", "lines image").get<std::string>()] =
              std::move(lines);
        }
      }

      for (const Json& cluster : require_field(report, "clusters", "alignment report")) {
        const int cluster_id = cluster.at("cluster_id").get<int>();
        FacadeEntry e;
        e.cluster_id = cluster_id;
        e.facade_id = "facade_" + std::to_string(cluster_id);

        std::vector<OrthoImage> images;
        for (const Json& stem : cluster.at("images")) {
          images.push_back(load_ortho_image(cfg.paths.out / stem.get<std::string>()));
        }
        if (images.empty()) {
          e.reason = "no aligned images";
          entries.push_back(std::move(e));
          continue;
        }
        try {
          std::vector<std::vector<LineSegment>> per_image_lines(images.size());
          parallel_for(0, static_cast<int>(images.size()), cfg.threads, [&](int i) {
            auto it = supplied.find(images[i].source_id);
            per_image_lines[i] = it != supplied.end()
                                     ? it->second
                                     : detect_line_segments(images[i],
                                                            cfg.facade.line_detect);
          });
          const std::vector<LineSegment> reliable = build_reliable_set(
              per_image_lines, cfg.facade.offset_tol_px, cfg.facade.min_span_overlap);
          FacadeRansacOptions ropts = cfg.facade.ransac;
          ropts.seed = derive_seed(cfg.seed, "facade-cluster",
                                   static_cast<std::uint64_t>(cluster_id));
          const FacadeBox box = ransac_facade(per_image_lines, reliable, ropts);
          const std::vector<OrthoImage> crops = crop_facades(images, box);

          const OrthoImage& ref = crops.front();
          e.ok = true;
          e.box = box;
          e.crop_w = ref.width();
          e.crop_h = ref.height();
          e.plane = ref.plane;
          e.basis = ref.basis;
          e.origin2d = ref.grid_origin2d;
          e.pixel_size = ref.pixel_size;
          e.center3d = ref.world_at(Vec2(ref.width() / 2.0, ref.height() / 2.0));
          for (std::size_t i = 0; i < crops.size(); ++i) {
            char prefix[16];
            std::snprintf(prefix, sizeof(prefix), "%02zu_", i);
            const std::string stem = "cropped/cluster_" + std::to_string(cluster_id) +
                                     "/" + prefix + sanitize(crops[i].source_id);
            save_ortho_image(crops[i], cfg.paths.out / stem);
            e.image_stems.push_back(stem);
            e.source_ids.push_back(crops[i].source_id);
          }
        } catch (const Error& err) {
          e.ok = false;
          e.reason = err.what();
        }
        entries.push_back(std::move(e));
      }
    }

    Json out{{"facades", Json::array()}};
    for (const FacadeEntry& e : entries) {
      out["facades"].push_back(facade_entry_to_json(e));
    }
    write_json_file(out, cfg.paths.out / "facade_report.json");
  });
}

void stage_fuse(const PipelineConfig& cfg) {
  FACADE3D_STAGE_GUARD("fuse", {
    write_config_echo(cfg);
    const Json report = load_json_file(cfg.paths.out / "facade_report.json");

    std::map<std::string, std::vector<Detection>> external;
    if (!cfg.detector.use_oracle) {
      const Json ext = load_json_file(cfg.paths.detections);
      for (const Json& f : require_field(ext, "facades", "detections file")) {
        std::string facade_id;
        external[require_field(f, "facade_id", "detections file").get<std::string>()] =
            detections_from_json(f, &facade_id);
      }
    }

    Json raw_out{{"facades", Json::array()}};
    Json fused_out{{"facades", Json::array()}};
    for (const Json& fj : require_field(report, "facades", "facade report")) {
      const FacadeEntry e = facade_entry_from_json(fj);
      if (!e.ok) continue;

      std::vector<Detection> raw;
      if (cfg.detector.use_oracle) {
        for (const std::string& stem : e.image_stems) {
          const OrthoImage crop = load_ortho_image(cfg.paths.out / stem);
          const std::vector<Detection> dets = oracle_window_detector(
              crop, cfg.detector.window_color, cfg.detector.tolerance,
              cfg.detector.min_area_px);
          raw.insert(raw.end(), dets.begin(), dets.end());
        }
      } else {
        auto it = external.find(e.facade_id);
        if (it != external.end()) raw = it->second;
      }

      const std::vector<Detection> fused =
          cfg.data_source_type == DataSourceType::kStreetView
              ? fuse_multiview(raw, cfg.fusion)
              : filter_single_view(raw, cfg.fusion.tau_conf);

      raw_out["facades"].push_back(detections_to_json(e.facade_id, raw));
      fused_out["facades"].push_back(detections_to_json(e.facade_id, fused));
    }
    write_json_file(raw_out, cfg.paths.out / "detections_raw.json");
    write_json_file(fused_out, cfg.paths.out / "detections_fused.json");
  });
}

void stage_model(const PipelineConfig& cfg) {
  FACADE3D_STAGE_GUARD("model", {
    write_config_echo(cfg);
    const Json report = load_json_file(cfg.paths.out / "facade_report.json");
    const Json fused_json = load_json_file(cfg.paths.out / "detections_fused.json");

    std::map<std::string, std::vector<Detection>> fused;
    for (const Json& f : require_field(fused_json, "facades", "fused detections")) {
      std::string facade_id;
      std::vector<Detection> dets = detections_from_json(f, &facade_id);
      fused[facade_id] = std::move(dets);
    }

    std::vector<FacadeModel> facades;
    for (const Json& fj : require_field(report, "facades", "facade report")) {
      const FacadeEntry e = facade_entry_from_json(fj);
      if (!e.ok) continue;

      FacadeModel f;
      f.facade_id = e.facade_id;
      f.plane = e.plane;
      f.basis = e.basis;
      f.bbox_px = e.box;
      f.origin2d = e.origin2d;
      f.pixel_size = e.pixel_size;
      f.width_m = e.crop_w * e.pixel_size;
      f.height_m = e.crop_h * e.pixel_size;
      f.center3d = e.center3d;

      auto it = fused.find(e.facade_id);
      if (it != fused.end()) {
        for (const Detection& d : it->second) {
          Detection clamped = d;
          clamped.bbox.x0 = std::clamp(d.bbox.x0, 0.0, static_cast<double>(e.crop_w));
          clamped.bbox.x1 = std::clamp(d.bbox.x1, 0.0, static_cast<double>(e.crop_w));
          clamped.bbox.y0 = std::clamp(d.bbox.y0, 0.0, static_cast<double>(e.crop_h));
          clamped.bbox.y1 = std::clamp(d.bbox.y1, 0.0, static_cast<double>(e.crop_h));
          if (!clamped.bbox.valid()) continue;
          f.windows.push_back(bbox_to_world(clamped, f));
        }
      }
      f.wwr = compute_wwr(f);
      facades.push_back(std::move(f));
    }

    std::string building_id = "building";
    std::optional<std::vector<Vec3>> footprint;
    std::string frame_note;
    if (cfg.data_source_type == DataSourceType::kStreetView) {
      const DatasetManifest manifest = load_manifest(cfg.paths.dataset);
      building_id = manifest.dataset_id;
      footprint = manifest.footprint;
      frame_note = manifest.frame_origin;
    } else {
      building_id = "camera2d";
      if (!cfg.camera2d.scene.empty() && fs::exists(cfg.camera2d.scene)) {
        const SynthBuilding scene =
            building_from_json(load_json_file(cfg.camera2d.scene));
        footprint = scene.footprint;
      }
      frame_note = "camera2d local frame, meters";
    }

    const ThermalModel model =
        assemble_model(building_id, std::move(facades), std::move(footprint),
                       frame_note);
    save_model(model, cfg.paths.out / "model.json");
  });
}

void stage_eval(const PipelineConfig& cfg) {
  FACADE3D_STAGE_GUARD("eval", {
    write_config_echo(cfg);
    if (cfg.paths.ground_truth.empty()) {
      throw ConfigError("paths.ground_truth is required for eval");
    }
    const ThermalModel model = load_model(cfg.paths.out / "model.json");
    const GroundTruth gt = load_ground_truth(cfg.paths.ground_truth);
    const EvalReport report = evaluate_model(model, gt);
    write_json_file(eval_report_to_json(report), cfg.paths.out / "eval_report.json");

    const std::string method =
        cfg.data_source_type == DataSourceType::kStreetView ? "streetview"
                                                            : "camera2d";
    std::ofstream csv(cfg.paths.out / "summary.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write summary.csv");
    csv << eval_report_csv(report, method);
  });
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.paths.out);
  if (cfg.data_source_type == DataSourceType::kStreetView) {
    stage_ingest(cfg);
    stage_cluster(cfg);
    stage_ortho(cfg);
    stage_align(cfg);
    stage_facade(cfg);
    stage_fuse(cfg);
    stage_model(cfg);
  } else {
    stage_ortho(cfg);
    stage_facade(cfg);
    stage_fuse(cfg);
    stage_model(cfg);
  }

  PipelineResult result;
  result.model = load_model(cfg.paths.out / "model.json");
  if (!cfg.paths.ground_truth.empty()) {
    stage_eval(cfg);
    result.eval = evaluate_model(result.model,
                                 load_ground_truth(cfg.paths.ground_truth));
  }
  return result;
}

}  // namespace facade3d

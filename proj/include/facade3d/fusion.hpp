#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "facade3d/geometry.hpp"

namespace facade3d {

/// Window detection in the shared aligned facade grid (pixel coordinates).
struct Detection {
  Box2 bbox;
  double score = 0.0;
  int category_id = 0;
  std::string source_id;
};

struct FusionConfig {
  double tau_conf = 0.2;
  double tau_iou = 0.3;
  int n_min = 2;
  double tau_score2 = 0.4;
  /// When true, n_min counts distinct source ids instead of cluster members.
  bool count_distinct_sources = false;
};

/// Intersection over union; 0 for disjoint or degenerate boxes.
double iou(const Box2& b1, const Box2& b2);

/// Multi-view fusion: drop scores below tau_conf, cluster per category as
/// connected components of the IoU > tau_iou graph, reject clusters smaller
/// than n_min, merge survivors (per-coordinate median bbox, mean of sqrt
/// scores) and reject merged scores below tau_score2. Output is sorted and
/// independent of input order; merged detections carry source_id "fused".
std::vector<Detection> fuse_multiview(const std::vector<Detection>& dets,
                                      const FusionConfig& cfg);

/// Single-view path: keeps detections with score >= tau_conf.
std::vector<Detection> filter_single_view(const std::vector<Detection>& dets,
                                          double tau_conf);

// Detections JSON: {"facade_id": str, "detections": [{"source_id": str,
// "bbox": [x0,y0,x1,y1], "score": f, "category_id": int}]}.
nlohmann::json detections_to_json(const std::string& facade_id,
                                  const std::vector<Detection>& dets);
std::vector<Detection> detections_from_json(const nlohmann::json& j,
                                            std::string* facade_id = nullptr);

}  // namespace facade3d

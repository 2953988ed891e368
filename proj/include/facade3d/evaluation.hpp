#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "facade3d/geometry.hpp"
#include "facade3d/thermal_model.hpp"

namespace facade3d {

struct GtWindow {
  std::array<Vec3, 4> corners;  // world rectangle
  double width_m = 0.0;
  double height_m = 0.0;
  double area_m2 = 0.0;
};

struct GtFacade {
  std::string facade_id;
  Plane plane;
  std::array<Vec3, 4> corners;
  double width_m = 0.0;
  double height_m = 0.0;
  double area_m2 = 0.0;
  double wwr = 0.0;
  std::vector<GtWindow> windows;
};

struct GroundTruth {
  std::string building_id;
  std::vector<GtFacade> facades;
};

GroundTruth ground_truth_from_json(const nlohmann::json& j);
nlohmann::json ground_truth_to_json(const GroundTruth& gt);
GroundTruth load_ground_truth(const std::filesystem::path& path);

struct MatchedPair {
  int pred_index = 0;
  int gt_index = 0;
  Box2 pred;  // facade-plane 2D frame, meters
  Box2 gt;
  double iou = 0.0;
};

struct MatchSet {
  std::vector<MatchedPair> pairs;
  std::vector<int> unmatched_pred;
  std::vector<int> unmatched_gt;
};

/// Greedy matching by descending IoU (ties: higher prediction score, then
/// lower pred index, then lower gt index); only pairs with IoU > threshold.
MatchSet match_windows(const std::vector<Box2>& pred, const std::vector<Box2>& gt,
                       double iou_threshold = 0.5,
                       const std::vector<double>* pred_scores = nullptr);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int tp = 0, fp = 0, fn = 0;
};

/// Conventions: P = 0 when TP+FP = 0 and ground truth is non-empty (P = 1
/// when both sides are empty); R symmetrically; F1 = 0 when P + R = 0.
F1Result f1_score(const MatchSet& ms);

/// Means over matched pairs; nullopt (reported as JSON null, never 0) when
/// there are no matches.
std::optional<double> mean_iou(const MatchSet& ms);
std::optional<double> mean_abs_rel_area_err(const MatchSet& ms);
std::optional<double> mean_abs_pos_err(const MatchSet& ms);

struct WwrErrors {
  /// Mean of pred - gt over facades with predictions.
  std::optional<double> standard;
  /// Mean over all gt facades, missing predictions treated as WWR 0.
  double total = 0.0;
  /// Mean over all gt facades, missing predictions imputed with the mean
  /// predicted WWR; nullopt when nothing was predicted at all.
  std::optional<double> imputed;
};

/// pred_wwr_per_gt[j] carries the predicted WWR for gt facade j, or nullopt
/// when that facade has no prediction. Throws DomainError on empty gt.
WwrErrors wwr_errors(const std::vector<std::optional<double>>& pred_wwr_per_gt,
                     const std::vector<double>& gt_wwr);

struct FacadeEval {
  std::string gt_facade_id;
  std::optional<std::string> pred_facade_id;
  F1Result f1;
  std::optional<double> mean_iou;
  std::optional<double> mean_abs_rel_area_err;
  std::optional<double> mean_abs_pos_err;
  std::optional<double> pred_wwr;
  double gt_wwr = 0.0;
};

struct EvalReport {
  std::string building_id;
  std::vector<FacadeEval> facades;
  F1Result f1;  // micro-averaged over all windows
  std::optional<double> mean_iou;
  std::optional<double> mean_abs_rel_area_err;
  std::optional<double> mean_abs_pos_err;
  WwrErrors wwr;
  int unmatched_pred_facades = 0;
};

/// Compares a predicted model to ground truth: gt facades pair with the
/// predicted facade of smallest plane distance (threshold 0.5), gt windows
/// are projected onto the predicted facade plane, and windows match per
/// match_windows. Pooled metrics aggregate over all matched pairs.
EvalReport evaluate_model(const ThermalModel& model, const GroundTruth& gt,
                          double iou_threshold = 0.5,
                          double facade_pairing_threshold = 0.5);

nlohmann::json eval_report_to_json(const EvalReport& report);

/// CSV summary, one data row per report: building, method, f1, mean_iou,
/// area err (%), pos err (m), wwr errors.
std::string eval_report_csv(const EvalReport& report, const std::string& method);

}  // namespace facade3d

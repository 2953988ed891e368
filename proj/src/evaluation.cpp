#include "facade3d/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "facade3d/json_util.hpp"
#include "facade3d/plane_clustering.hpp"

namespace facade3d {

namespace {

std::array<Vec3, 4> corners_from_json(const Json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4) {
    throw ParseError(ctx + ": expected 4 corners");
  }
  std::array<Vec3, 4> corners;
  for (int i = 0; i < 4; ++i) corners[i] = j[i].get<Vec3>();
  return corners;
}

Json corners_to_json(const std::array<Vec3, 4>& corners) {
  Json arr = Json::array();
  for (const Vec3& c : corners) arr.push_back(c);
  return arr;
}

}  // namespace

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth gt;
  gt.building_id = require_field(j, "building_id", "ground truth").get<std::string>();
  for (const Json& fj : require_field(j, "facades", "ground truth")) {
    GtFacade f;
    f.facade_id = require_field(fj, "facade_id", "gt facade").get<std::string>();
    f.plane = require_field(fj, "plane", "gt facade").get<Plane>();
    f.corners = corners_from_json(require_field(fj, "corners", "gt facade"),
                                  "gt facade corners");
    f.width_m = require_field(fj, "width_m", "gt facade").get<double>();
    f.height_m = require_field(fj, "height_m", "gt facade").get<double>();
    f.area_m2 = require_field(fj, "area_m2", "gt facade").get<double>();
    f.wwr = require_field(fj, "wwr", "gt facade").get<double>();
    for (const Json& wj : require_field(fj, "windows", "gt facade")) {
      GtWindow w;
      w.corners = corners_from_json(require_field(wj, "corners", "gt window"),
                                    "gt window corners");
      w.width_m = require_field(wj, "width_m", "gt window").get<double>();
      w.height_m = require_field(wj, "height_m", "gt window").get<double>();
      w.area_m2 = require_field(wj, "area_m2", "gt window").get<double>();
      f.windows.push_back(std::move(w));
    }
    gt.facades.push_back(std::move(f));
  }
  return gt;
}

nlohmann::json ground_truth_to_json(const GroundTruth& gt) {
  Json facades = Json::array();
  for (const GtFacade& f : gt.facades) {
    Json windows = Json::array();
    for (const GtWindow& w : f.windows) {
      windows.push_back(Json{{"corners", corners_to_json(w.corners)},
                             {"width_m", w.width_m},
                             {"height_m", w.height_m},
                             {"area_m2", w.area_m2}});
    }
    facades.push_back(Json{{"facade_id", f.facade_id},
                           {"plane", f.plane},
                           {"corners", corners_to_json(f.corners)},
                           {"width_m", f.width_m},
                           {"height_m", f.height_m},
                           {"area_m2", f.area_m2},
                           {"wwr", f.wwr},
                           {"windows", windows}});
  }
  return Json{{"building_id", gt.building_id}, {"facades", facades}};
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_json(load_json_file(path));
}

MatchSet match_windows(const std::vector<Box2>& pred, const std::vector<Box2>& gt,
                       double iou_threshold,
                       const std::vector<double>* pred_scores) {
  struct Pair {
    double iou_value;
    double score;
    int pred_index;
    int gt_index;
  };
  std::vector<Pair> all;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = iou(pred[p], gt[g]);
      if (v > iou_threshold) {
        const double score =
            pred_scores != nullptr && p < pred_scores->size() ? (*pred_scores)[p] : 0.0;
        all.push_back(Pair{v, score, static_cast<int>(p), static_cast<int>(g)});
      }
    }
  }
  std::sort(all.begin(), all.end(), [](const Pair& a, const Pair& b) {
    if (a.iou_value != b.iou_value) return a.iou_value > b.iou_value;
    if (a.score != b.score) return a.score > b.score;
    if (a.pred_index != b.pred_index) return a.pred_index < b.pred_index;
    return a.gt_index < b.gt_index;
  });

  MatchSet ms;
  std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
  for (const Pair& p : all) {
    if (pred_used[p.pred_index] || gt_used[p.gt_index]) continue;
    pred_used[p.pred_index] = true;
    gt_used[p.gt_index] = true;
    ms.pairs.push_back(MatchedPair{p.pred_index, p.gt_index, pred[p.pred_index],
                                   gt[p.gt_index], p.iou_value});
  }
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (!pred_used[p]) ms.unmatched_pred.push_back(static_cast<int>(p));
  }
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (!gt_used[g]) ms.unmatched_gt.push_back(static_cast<int>(g));
  }
  return ms;
}

F1Result f1_score(const MatchSet& ms) {
  F1Result r;
  r.tp = static_cast<int>(ms.pairs.size());
  r.fp = static_cast<int>(ms.unmatched_pred.size());
  r.fn = static_cast<int>(ms.unmatched_gt.size());
  const int gt_count = r.tp + r.fn;
  const int pred_count = r.tp + r.fp;
  r.precision = pred_count > 0 ? static_cast<double>(r.tp) / pred_count
                               : (gt_count == 0 ? 1.0 : 0.0);
  r.recall = gt_count > 0 ? static_cast<double>(r.tp) / gt_count
                          : (pred_count == 0 ? 1.0 : 0.0);
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

std::optional<double> mean_iou(const MatchSet& ms) {
  if (ms.pairs.empty()) return std::nullopt;
  double s = 0.0;
  for (const MatchedPair& p : ms.pairs) s += p.iou;
  return s / static_cast<double>(ms.pairs.size());
}

std::optional<double> mean_abs_rel_area_err(const MatchSet& ms) {
  if (ms.pairs.empty()) return std::nullopt;
  double s = 0.0;
  for (const MatchedPair& p : ms.pairs) {
    s += std::abs(p.pred.area() - p.gt.area()) / p.gt.area();
  }
  return s / static_cast<double>(ms.pairs.size());
}

std::optional<double> mean_abs_pos_err(const MatchSet& ms) {
  if (ms.pairs.empty()) return std::nullopt;
  double s = 0.0;
  for (const MatchedPair& p : ms.pairs) {
    s += (p.pred.center() - p.gt.center()).norm();
  }
  return s / static_cast<double>(ms.pairs.size());
}

WwrErrors wwr_errors(const std::vector<std::optional<double>>& pred_wwr_per_gt,
                     const std::vector<double>& gt_wwr) {
  if (gt_wwr.empty()) throw DomainError("wwr_errors needs ground-truth facades");
  if (pred_wwr_per_gt.size() != gt_wwr.size()) {
    throw DomainError("wwr_errors: prediction/gt size mismatch");
  }

  double sum_pred_err = 0.0;
  double sum_pred_wwr = 0.0;
  int n_pred = 0;
  for (std::size_t j = 0; j < gt_wwr.size(); ++j) {
    if (pred_wwr_per_gt[j]) {
      sum_pred_err += *pred_wwr_per_gt[j] - gt_wwr[j];
      sum_pred_wwr += *pred_wwr_per_gt[j];
      ++n_pred;
    }
  }

  WwrErrors out;
  if (n_pred > 0) out.standard = sum_pred_err / n_pred;

  double total = 0.0;
  for (std::size_t j = 0; j < gt_wwr.size(); ++j) {
    const double pred = pred_wwr_per_gt[j] ? *pred_wwr_per_gt[j] : 0.0;
    total += pred - gt_wwr[j];
  }
  out.total = total / static_cast<double>(gt_wwr.size());

  if (n_pred > 0) {
    const double mean_pred = sum_pred_wwr / n_pred;
    double imputed = 0.0;
    for (std::size_t j = 0; j < gt_wwr.size(); ++j) {
      const double pred = pred_wwr_per_gt[j] ? *pred_wwr_per_gt[j] : mean_pred;
      imputed += pred - gt_wwr[j];
    }
    out.imputed = imputed / static_cast<double>(gt_wwr.size());
  }
  return out;
}

namespace {

/// Axis-aligned (u, v) rectangle of world corners projected onto a facade
/// plane frame.
Box2 uv_rect(const std::array<Vec3, 4>& corners, const Plane& plane,
             const PlaneBasis& basis) {
  double lo_u = std::numeric_limits<double>::infinity(), lo_v = lo_u;
  double hi_u = -lo_u, hi_v = -lo_u;
  for (const Vec3& c : corners) {
    // Project onto the plane first, then take in-plane coordinates.
    const Vec3 on_plane = c - plane.normal.vec() * plane.signed_distance(c);
    const Vec2 uv = basis.plane_coords(on_plane);
    lo_u = std::min(lo_u, uv.x);
    hi_u = std::max(hi_u, uv.x);
    lo_v = std::min(lo_v, uv.y);
    hi_v = std::max(hi_v, uv.y);
  }
  return Box2{lo_u, lo_v, hi_u, hi_v};
}

}  // namespace

EvalReport evaluate_model(const ThermalModel& model, const GroundTruth& gt,
                          double iou_threshold, double facade_pairing_threshold) {
  EvalReport report;
  report.building_id = gt.building_id;

  // Pair each gt facade with the closest predicted facade by plane distance.
  std::vector<int> pred_for_gt(gt.facades.size(), -1);
  std::vector<bool> pred_used(model.facades.size(), false);
  for (std::size_t g = 0; g < gt.facades.size(); ++g) {
    double best = facade_pairing_threshold;
    int best_p = -1;
    for (std::size_t p = 0; p < model.facades.size(); ++p) {
      if (pred_used[p]) continue;
      const double d = plane_distance(model.facades[p].plane, gt.facades[g].plane);
      if (d < best) {
        best = d;
        best_p = static_cast<int>(p);
      }
    }
    if (best_p >= 0) {
      pred_for_gt[g] = best_p;
      pred_used[best_p] = true;
    }
  }

  MatchSet pooled;
  std::vector<std::optional<double>> pred_wwr(gt.facades.size());
  std::vector<double> gt_wwr(gt.facades.size());

  for (std::size_t g = 0; g < gt.facades.size(); ++g) {
    const GtFacade& gt_facade = gt.facades[g];
    gt_wwr[g] = gt_facade.wwr;
    FacadeEval fe;
    fe.gt_facade_id = gt_facade.facade_id;
    fe.gt_wwr = gt_facade.wwr;

    if (pred_for_gt[g] < 0) {
      // Missing facade: every gt window is a false negative.
      MatchSet ms;
      for (std::size_t w = 0; w < gt_facade.windows.size(); ++w) {
        ms.unmatched_gt.push_back(static_cast<int>(w));
        pooled.unmatched_gt.push_back(static_cast<int>(pooled.unmatched_gt.size()));
      }
      fe.f1 = f1_score(ms);
      report.facades.push_back(std::move(fe));
      continue;
    }

    const FacadeModel& pred_facade = model.facades[pred_for_gt[g]];
    fe.pred_facade_id = pred_facade.facade_id;
    fe.pred_wwr = pred_facade.wwr;
    pred_wwr[g] = pred_facade.wwr;

    std::vector<Box2> pred_boxes;
    for (const WindowGeometry3D& w : pred_facade.windows) {
      pred_boxes.push_back(uv_rect(w.corners, pred_facade.plane, pred_facade.basis));
    }
    std::vector<Box2> gt_boxes;
    for (const GtWindow& w : gt_facade.windows) {
      gt_boxes.push_back(uv_rect(w.corners, pred_facade.plane, pred_facade.basis));
    }

    const MatchSet ms = match_windows(pred_boxes, gt_boxes, iou_threshold);
    fe.f1 = f1_score(ms);
    fe.mean_iou = mean_iou(ms);
    fe.mean_abs_rel_area_err = mean_abs_rel_area_err(ms);
    fe.mean_abs_pos_err = mean_abs_pos_err(ms);

    for (const MatchedPair& p : ms.pairs) pooled.pairs.push_back(p);
    for (int i : ms.unmatched_pred) {
      (void)i;
      pooled.unmatched_pred.push_back(static_cast<int>(pooled.unmatched_pred.size()));
    }
    for (int i : ms.unmatched_gt) {
      (void)i;
      pooled.unmatched_gt.push_back(static_cast<int>(pooled.unmatched_gt.size()));
    }
    report.facades.push_back(std::move(fe));
  }

  // Windows on predicted facades that paired with no gt facade count as FPs.
  for (std::size_t p = 0; p < model.facades.size(); ++p) {
    if (!pred_used[p]) {
      ++report.unmatched_pred_facades;
      for (std::size_t w = 0; w < model.facades[p].windows.size(); ++w) {
        pooled.unmatched_pred.push_back(static_cast<int>(pooled.unmatched_pred.size()));
      }
    }
  }

  report.f1 = f1_score(pooled);
  report.mean_iou = mean_iou(pooled);
  report.mean_abs_rel_area_err = mean_abs_rel_area_err(pooled);
  report.mean_abs_pos_err = mean_abs_pos_err(pooled);
  report.wwr = wwr_errors(pred_wwr, gt_wwr);
  return report;
}

namespace {

Json opt_json(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string opt_csv(const std::optional<double>& v) {
  if (!v) return "null";
  std::ostringstream os;
  os << *v;
  return os.str();
}

Json f1_json(const F1Result& f) {
  return Json{{"precision", f.precision}, {"recall", f.recall}, {"f1", f.f1},
              {"tp", f.tp},               {"fp", f.fp},         {"fn", f.fn}};
}

}  // namespace

nlohmann::json eval_report_to_json(const EvalReport& report) {
  Json facades = Json::array();
  for (const FacadeEval& fe : report.facades) {
    facades.push_back(Json{
        {"gt_facade_id", fe.gt_facade_id},
        {"pred_facade_id", fe.pred_facade_id ? Json(*fe.pred_facade_id) : Json(nullptr)},
        {"f1", f1_json(fe.f1)},
        {"mean_iou", opt_json(fe.mean_iou)},
        {"mean_abs_rel_area_err", opt_json(fe.mean_abs_rel_area_err)},
        {"mean_abs_pos_err_m", opt_json(fe.mean_abs_pos_err)},
        {"pred_wwr", opt_json(fe.pred_wwr)},
        {"gt_wwr", fe.gt_wwr}});
  }
  return Json{{"building_id", report.building_id},
              {"facades", facades},
              {"f1", f1_json(report.f1)},
              {"mean_iou", opt_json(report.mean_iou)},
              {"mean_abs_rel_area_err", opt_json(report.mean_abs_rel_area_err)},
              {"mean_abs_pos_err_m", opt_json(report.mean_abs_pos_err)},
              {"wwr_error", opt_json(report.wwr.standard)},
              {"wwr_error_total", report.wwr.total},
              {"wwr_error_imputed", opt_json(report.wwr.imputed)},
              {"unmatched_pred_facades", report.unmatched_pred_facades}};
}

std::string eval_report_csv(const EvalReport& report, const std::string& method) {
  std::ostringstream os;
  os << "building,method,f1,mean_iou,mean_abs_rel_area_err_pct,"
        "mean_abs_pos_err_m,wwr_error,wwr_error_total,wwr_error_imputed\n";
  os << report.building_id << "," << method << "," << report.f1.f1 << ",";
  os << opt_csv(report.mean_iou) << ",";
  if (report.mean_abs_rel_area_err) {
    os << (*report.mean_abs_rel_area_err * 100.0);
  } else {
    os << "null";
  }
  os << "," << opt_csv(report.mean_abs_pos_err) << ","
     << opt_csv(report.wwr.standard) << "," << report.wwr.total << ","
     << opt_csv(report.wwr.imputed) << "\n";
  return os.str();
}

}  // namespace facade3d

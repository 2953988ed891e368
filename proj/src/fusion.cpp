#include "facade3d/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "facade3d/json_util.hpp"
#include "facade3d/util.hpp"

namespace facade3d {

double iou(const Box2& b1, const Box2& b2) {
  const double ix0 = std::max(b1.x0, b2.x0);
  const double iy0 = std::max(b1.y0, b2.y0);
  const double ix1 = std::min(b1.x1, b2.x1);
  const double iy1 = std::min(b1.y1, b2.y1);
  if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
  const double inter = (ix1 - ix0) * (iy1 - iy0);
  const double uni = b1.area() + b2.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

bool detection_order(const Detection& a, const Detection& b) {
  if (a.category_id != b.category_id) return a.category_id < b.category_id;
  if (a.bbox.x0 != b.bbox.x0) return a.bbox.x0 < b.bbox.x0;
  if (a.bbox.y0 != b.bbox.y0) return a.bbox.y0 < b.bbox.y0;
  if (a.bbox.x1 != b.bbox.x1) return a.bbox.x1 < b.bbox.x1;
  if (a.bbox.y1 != b.bbox.y1) return a.bbox.y1 < b.bbox.y1;
  if (a.score != b.score) return a.score < b.score;
  return a.source_id < b.source_id;
}

/// Connected components of the IoU > tau graph via union-find.
std::vector<std::vector<int>> iou_components(const std::vector<Detection>& dets,
                                             double tau_iou) {
  const int n = static_cast<int>(dets.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (iou(dets[i].bbox, dets[j].bbox) > tau_iou) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::map<int, std::vector<int>> by_root;
  for (int i = 0; i < n; ++i) by_root[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : by_root) out.push_back(std::move(members));
  return out;
}

Detection merge_cluster(const std::vector<Detection>& dets,
                        const std::vector<int>& members) {
  std::vector<double> x0s, y0s, x1s, y1s;
  double sqrt_sum = 0.0;
  for (int i : members) {
    x0s.push_back(dets[i].bbox.x0);
    y0s.push_back(dets[i].bbox.y0);
    x1s.push_back(dets[i].bbox.x1);
    y1s.push_back(dets[i].bbox.y1);
    sqrt_sum += std::sqrt(dets[i].score);
  }
  Detection merged;
  merged.bbox = Box2{median(std::move(x0s)), median(std::move(y0s)),
                     median(std::move(x1s)), median(std::move(y1s))};
  merged.score = sqrt_sum / static_cast<double>(members.size());
  merged.source_id = "fused";
  return merged;
}

}  // namespace

std::vector<Detection> fuse_multiview(const std::vector<Detection>& dets,
                                      const FusionConfig& cfg) {
  // Stage 1: confidence gate.
  std::vector<Detection> kept;
  for (const Detection& d : dets) {
    if (d.score >= cfg.tau_conf) kept.push_back(d);
  }
  // Canonical order makes clustering and medians input-order independent.
  std::sort(kept.begin(), kept.end(), detection_order);

  std::set<int> categories;
  for (const Detection& d : kept) categories.insert(d.category_id);

  std::vector<Detection> out;
  for (int cat : categories) {
    std::vector<Detection> of_cat;
    for (const Detection& d : kept) {
      if (d.category_id == cat) of_cat.push_back(d);
    }

    // Stage 2: spatial clusters as connected components of IoU > tau_iou.
    for (const std::vector<int>& members : iou_components(of_cat, cfg.tau_iou)) {
      // Stage 3: validate and merge.
      std::size_t support = members.size();
      if (cfg.count_distinct_sources) {
        std::set<std::string> sources;
        for (int i : members) sources.insert(of_cat[i].source_id);
        support = sources.size();
      }
      if (support < static_cast<std::size_t>(cfg.n_min)) continue;

      Detection merged = merge_cluster(of_cat, members);
      merged.category_id = cat;
      if (merged.score < cfg.tau_score2) continue;
      out.push_back(std::move(merged));
    }
  }
  std::sort(out.begin(), out.end(), detection_order);
  return out;
}

std::vector<Detection> filter_single_view(const std::vector<Detection>& dets,
                                          double tau_conf) {
  std::vector<Detection> out;
  for (const Detection& d : dets) {
    if (d.score >= tau_conf) out.push_back(d);
  }
  return out;
}

nlohmann::json detections_to_json(const std::string& facade_id,
                                  const std::vector<Detection>& dets) {
  Json arr = Json::array();
  for (const Detection& d : dets) {
    arr.push_back(Json{{"source_id", d.source_id},
                       {"bbox", d.bbox},
                       {"score", d.score},
                       {"category_id", d.category_id}});
  }
  return Json{{"facade_id", facade_id}, {"detections", arr}};
}

std::vector<Detection> detections_from_json(const nlohmann::json& j,
                                            std::string* facade_id) {
  if (facade_id != nullptr) {
    *facade_id = require_field(j, "facade_id", "detections").get<std::string>();
  }
  std::vector<Detection> dets;
  for (const Json& dj : require_field(j, "detections", "detections")) {
    Detection d;
    d.source_id = require_field(dj, "source_id", "detection").get<std::string>();
    d.bbox = require_field(dj, "bbox", "detection").get<Box2>();
    d.score = require_field(dj, "score", "detection").get<double>();
    d.category_id = require_field(dj, "category_id", "detection").get<int>();
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw InvariantViolation("detection score out of [0,1]");
    }
    if (!(d.bbox.x1 > d.bbox.x0 && d.bbox.y1 > d.bbox.y0)) {
      throw InvariantViolation("detection bbox not ordered");
    }
    dets.push_back(std::move(d));
  }
  return dets;
}

}  // namespace facade3d

#include "facade3d/facade_detection.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "facade3d/json_util.hpp"
#include "facade3d/util.hpp"

namespace facade3d {

LineSegment LineSegment::from_endpoints(const Vec2& a, const Vec2& b) {
  LineSegment s;
  s.p0 = a;
  s.p1 = b;
  s.length_px = (b - a).norm();
  double ang = rad2deg(std::atan2(b.y - a.y, b.x - a.x));
  ang = std::fmod(ang + 360.0, 180.0);
  s.angle_deg = ang;
  return s;
}

namespace {

double angle_diff_mod180(double a, double b) {
  double d = std::abs(a - b);
  d = std::fmod(d, 180.0);
  return std::min(d, 180.0 - d);
}

}  // namespace

std::vector<LineSegment> detect_line_segments(const OrthoImage& img,
                                              const LineDetectOptions& opts) {
  const int w = img.width();
  const int h = img.height();
  std::vector<LineSegment> segments;
  if (w < 3 || h < 3) return segments;

  const std::vector<float> gray = to_gray(img.image);
  auto g = [&](int x, int y) -> float {
    return gray[static_cast<std::size_t>(y) * w + x];
  };

  std::vector<double> mag(gray.size(), 0.0);
  std::vector<double> line_angle(gray.size(), 0.0);  // level-line angle, deg mod 180
  std::vector<double> interior;
  interior.reserve(gray.size());
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double gx = 0.5 * (g(x + 1, y) - g(x - 1, y));
      const double gy = 0.5 * (g(x, y + 1) - g(x, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      mag[i] = std::hypot(gx, gy);
      line_angle[i] = std::fmod(rad2deg(std::atan2(gy, gx)) + 90.0 + 360.0, 180.0);
      interior.push_back(mag[i]);
    }
  }
  const double thr = percentile(std::move(interior), opts.magnitude_percentile);

  struct Cand {
    int x, y;
    double m;
  };
  std::vector<Cand> cands;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double m = mag[static_cast<std::size_t>(y) * w + x];
      if (m > thr && m > 1e-9) cands.push_back(Cand{x, y, m});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.m != b.m) return a.m > b.m;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  std::vector<bool> usable(gray.size(), false);
  for (const Cand& c : cands) usable[static_cast<std::size_t>(c.y) * w + c.x] = true;
  std::vector<bool> visited(gray.size(), false);

  for (const Cand& seed : cands) {
    const std::size_t seed_i = static_cast<std::size_t>(seed.y) * w + seed.x;
    if (visited[seed_i]) continue;

    // Region-grow by orientation agreement with the running circular mean
    // (angles doubled so the mean works modulo 180).
    std::vector<std::pair<int, int>> region;
    double sum_cos = 0.0, sum_sin = 0.0;
    std::deque<std::pair<int, int>> queue{{seed.x, seed.y}};
    visited[seed_i] = true;
    while (!queue.empty()) {
      const auto [cx, cy] = queue.front();
      queue.pop_front();
      const std::size_t ci = static_cast<std::size_t>(cy) * w + cx;
      region.emplace_back(cx, cy);
      const double a2 = 2.0 * deg2rad(line_angle[ci]);
      sum_cos += std::cos(a2);
      sum_sin += std::sin(a2);
      const double mean_angle =
          std::fmod(rad2deg(std::atan2(sum_sin, sum_cos)) / 2.0 + 180.0, 180.0);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = cx + dx, ny = cy + dy;
          if (nx < 1 || ny < 1 || nx >= w - 1 || ny >= h - 1) continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (!usable[ni] || visited[ni]) continue;
          if (angle_diff_mod180(line_angle[ni], mean_angle) >
              opts.orientation_tol_deg) {
            continue;
          }
          visited[ni] = true;
          queue.emplace_back(nx, ny);
        }
      }
    }
    if (region.size() < 4) continue;

    // PCA fit: centroid plus principal direction of the pixel cloud.
    double mx = 0.0, my = 0.0;
    for (const auto& [px, py] : region) {
      mx += px + 0.5;
      my += py + 0.5;
    }
    mx /= static_cast<double>(region.size());
    my /= static_cast<double>(region.size());
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [px, py] : region) {
      const double dx = px + 0.5 - mx;
      const double dy = py + 0.5 - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
    const double tr = sxx + syy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - (sxx * syy - sxy * sxy)));
    const double lambda = tr / 2.0 + disc;
    Vec2 dir(sxy, lambda - sxx);
    if (dir.norm() < 1e-9) dir = sxx >= syy ? Vec2(1, 0) : Vec2(0, 1);
    dir = dir * (1.0 / dir.norm());

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [px, py] : region) {
      const double t = (px + 0.5 - mx) * dir.x + (py + 0.5 - my) * dir.y;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    if (hi - lo < opts.min_length_px) continue;
    segments.push_back(LineSegment::from_endpoints(
        Vec2(mx + lo * dir.x, my + lo * dir.y),
        Vec2(mx + hi * dir.x, my + hi * dir.y)));
  }
  return segments;
}

AxisLines classify_axis_lines(const std::vector<LineSegment>& lines,
                              double tol_deg) {
  AxisLines out;
  for (const LineSegment& l : lines) {
    if (std::abs(l.angle_deg - 90.0) <= tol_deg) {
      out.vertical.push_back(l);
    } else if (std::min(l.angle_deg, 180.0 - l.angle_deg) <= tol_deg) {
      out.horizontal.push_back(l);
    } else {
      out.other.push_back(l);
    }
  }
  return out;
}

namespace {

struct AxisLineObs {
  int image_idx = 0;
  double offset = 0.0;   // x for vertical lines, y for horizontal
  double span_lo = 0.0;  // along the line axis
  double span_hi = 0.0;
};

double span_overlap_frac(const AxisLineObs& a, const AxisLineObs& b) {
  const double inter =
      std::min(a.span_hi, b.span_hi) - std::max(a.span_lo, b.span_lo);
  if (inter <= 0.0) return 0.0;
  const double shorter =
      std::min(a.span_hi - a.span_lo, b.span_hi - b.span_lo);
  return shorter > 0.0 ? inter / shorter : 0.0;
}

std::vector<LineSegment> merge_axis_observations(std::vector<AxisLineObs> obs,
                                                 bool vertical,
                                                 double offset_tol_px,
                                                 double min_span_overlap) {
  const int n = static_cast<int>(obs.size());
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
      if (obs[i].image_idx == obs[j].image_idx) continue;  // match across images
      if (std::abs(obs[i].offset - obs[j].offset) > offset_tol_px) continue;
      if (span_overlap_frac(obs[i], obs[j]) < min_span_overlap) continue;
      parent[find(i)] = find(j);
    }
  }

  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);

  std::vector<LineSegment> merged;
  for (const auto& [root, members] : groups) {
    std::map<int, int> images_seen;
    for (int i : members) images_seen[obs[i].image_idx]++;
    if (images_seen.size() < 2) continue;  // not consistent across views

    std::vector<double> offsets;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i : members) {
      offsets.push_back(obs[i].offset);
      lo = std::min(lo, obs[i].span_lo);
      hi = std::max(hi, obs[i].span_hi);
    }
    const double off = median(std::move(offsets));
    if (vertical) {
      merged.push_back(LineSegment::from_endpoints(Vec2(off, lo), Vec2(off, hi)));
    } else {
      merged.push_back(LineSegment::from_endpoints(Vec2(lo, off), Vec2(hi, off)));
    }
  }
  std::sort(merged.begin(), merged.end(),
            [](const LineSegment& a, const LineSegment& b) {
              if (a.p0.x != b.p0.x) return a.p0.x < b.p0.x;
              return a.p0.y < b.p0.y;
            });
  return merged;
}

}  // namespace

std::vector<LineSegment> build_reliable_set(
    const std::vector<std::vector<LineSegment>>& per_image_lines,
    double offset_tol_px, double min_span_overlap) {
  std::vector<AxisLineObs> vertical, horizontal;
  for (std::size_t k = 0; k < per_image_lines.size(); ++k) {
    const AxisLines axes = classify_axis_lines(per_image_lines[k]);
    for (const LineSegment& l : axes.vertical) {
      AxisLineObs o;
      o.image_idx = static_cast<int>(k);
      o.offset = 0.5 * (l.p0.x + l.p1.x);
      o.span_lo = std::min(l.p0.y, l.p1.y);
      o.span_hi = std::max(l.p0.y, l.p1.y);
      vertical.push_back(o);
    }
    for (const LineSegment& l : axes.horizontal) {
      AxisLineObs o;
      o.image_idx = static_cast<int>(k);
      o.offset = 0.5 * (l.p0.y + l.p1.y);
      o.span_lo = std::min(l.p0.x, l.p1.x);
      o.span_hi = std::max(l.p0.x, l.p1.x);
      horizontal.push_back(o);
    }
  }

  std::vector<LineSegment> reliable = merge_axis_observations(
      std::move(vertical), /*vertical=*/true, offset_tol_px, min_span_overlap);
  std::vector<LineSegment> hor = merge_axis_observations(
      std::move(horizontal), /*vertical=*/false, offset_tol_px, min_span_overlap);
  reliable.insert(reliable.end(), hor.begin(), hor.end());
  return reliable;
}

namespace {

struct CandidateBox {
  double x0, y0, x1, y1;
};

enum class SegBoxRelation { kInside, kCrossing, kOutside };

/// Inside: both endpoints within the box inflated by tol. Crossing: not
/// inside but intersecting the box deflated by tol. Everything else outside.
SegBoxRelation segment_box_relation(const LineSegment& l, const CandidateBox& b,
                                    double tol) {
  auto in_rect = [](const Vec2& p, double x0, double y0, double x1, double y1) {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  };
  if (in_rect(l.p0, b.x0 - tol, b.y0 - tol, b.x1 + tol, b.y1 + tol) &&
      in_rect(l.p1, b.x0 - tol, b.y0 - tol, b.x1 + tol, b.y1 + tol)) {
    return SegBoxRelation::kInside;
  }
  // Liang-Barsky style clip against the deflated box.
  const double x0 = b.x0 + tol, y0 = b.y0 + tol;
  const double x1 = b.x1 - tol, y1 = b.y1 - tol;
  if (x1 <= x0 || y1 <= y0) return SegBoxRelation::kOutside;
  double t0 = 0.0, t1 = 1.0;
  const double dx = l.p1.x - l.p0.x;
  const double dy = l.p1.y - l.p0.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {l.p0.x - x0, x1 - l.p0.x, l.p0.y - y0, y1 - l.p0.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return SegBoxRelation::kOutside;
    } else {
      const double r = q[i] / p[i];
      if (p[i] < 0.0) {
        t0 = std::max(t0, r);
      } else {
        t1 = std::min(t1, r);
      }
    }
  }
  return t0 <= t1 ? SegBoxRelation::kCrossing : SegBoxRelation::kOutside;
}

double score_box(const CandidateBox& b, const std::vector<LineSegment>& lines,
                 double tol) {
  double score = 0.0;
  for (const LineSegment& l : lines) {
    switch (segment_box_relation(l, b, tol)) {
      case SegBoxRelation::kInside:
        score += l.length_px;
        break;
      case SegBoxRelation::kCrossing:
        score -= l.length_px;
        break;
      case SegBoxRelation::kOutside:
        break;
    }
  }
  return score;
}

double box_distance(const CandidateBox& a, const CandidateBox& b) {
  // Largest displacement among the four corresponding corners.
  const double d00 = std::hypot(a.x0 - b.x0, a.y0 - b.y0);
  const double d01 = std::hypot(a.x0 - b.x0, a.y1 - b.y1);
  const double d10 = std::hypot(a.x1 - b.x1, a.y0 - b.y0);
  const double d11 = std::hypot(a.x1 - b.x1, a.y1 - b.y1);
  return std::max({d00, d01, d10, d11});
}

/// Plain DBSCAN over candidate boxes; returns cluster labels, -1 = noise.
std::vector<int> dbscan_boxes(const std::vector<CandidateBox>& boxes, double eps,
                              int min_pts) {
  const int n = static_cast<int>(boxes.size());
  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (box_distance(boxes[i], boxes[j]) <= eps) neighbors[i].push_back(j);
    }
  }
  std::vector<int> label(n, -2);  // -2 unvisited, -1 noise
  int cluster = 0;
  for (int i = 0; i < n; ++i) {
    if (label[i] != -2) continue;
    if (static_cast<int>(neighbors[i].size()) < min_pts) {
      label[i] = -1;
      continue;
    }
    label[i] = cluster;
    std::deque<int> queue(neighbors[i].begin(), neighbors[i].end());
    while (!queue.empty()) {
      const int j = queue.front();
      queue.pop_front();
      if (label[j] == -1) label[j] = cluster;
      if (label[j] != -2) continue;
      label[j] = cluster;
      if (static_cast<int>(neighbors[j].size()) >= min_pts) {
        queue.insert(queue.end(), neighbors[j].begin(), neighbors[j].end());
      }
    }
    ++cluster;
  }
  return label;
}

}  // namespace

FacadeBox ransac_facade(const std::vector<std::vector<LineSegment>>& per_image_lines,
                        const std::vector<LineSegment>& reliable,
                        const FacadeRansacOptions& opts) {
  std::vector<double> v_offsets, h_offsets;
  for (const LineSegment& l : reliable) {
    if (std::abs(l.angle_deg - 90.0) <= 10.0) {
      v_offsets.push_back(0.5 * (l.p0.x + l.p1.x));
    } else if (std::min(l.angle_deg, 180.0 - l.angle_deg) <= 10.0) {
      h_offsets.push_back(0.5 * (l.p0.y + l.p1.y));
    }
  }
  if (v_offsets.size() < 2 || h_offsets.size() < 2) {
    throw InsufficientStructure(
        "reliable set needs >= 2 vertical and >= 2 horizontal lines (have " +
        std::to_string(v_offsets.size()) + "v/" + std::to_string(h_offsets.size()) +
        "h)");
  }

  const int n_images = static_cast<int>(per_image_lines.size());
  std::vector<std::optional<CandidateBox>> candidates(n_images);
  std::vector<double> candidate_scores(n_images, 0.0);

  for (int k = 0; k < n_images; ++k) {
    Rng rng = make_rng(derive_seed(opts.seed, "facade-ransac", k));
    std::uniform_int_distribution<int> pick_v(0, static_cast<int>(v_offsets.size()) - 1);
    std::uniform_int_distribution<int> pick_h(0, static_cast<int>(h_offsets.size()) - 1);
    double best_score = -std::numeric_limits<double>::infinity();
    std::optional<CandidateBox> best;
    for (int it = 0; it < opts.iterations; ++it) {
      const int v1 = pick_v(rng);
      const int v2 = pick_v(rng);
      const int h1 = pick_h(rng);
      const int h2 = pick_h(rng);
      if (v1 == v2 || h1 == h2) continue;
      CandidateBox box{std::min(v_offsets[v1], v_offsets[v2]),
                       std::min(h_offsets[h1], h_offsets[h2]),
                       std::max(v_offsets[v1], v_offsets[v2]),
                       std::max(h_offsets[h1], h_offsets[h2])};
      if (box.x1 - box.x0 < 2.0 || box.y1 - box.y0 < 2.0) continue;
      const double s = score_box(box, per_image_lines[k], opts.inside_tol_px);
      if (s > best_score) {
        best_score = s;
        best = box;
      }
    }
    candidates[k] = best;
    candidate_scores[k] = best_score;
  }

  std::vector<CandidateBox> boxes;
  std::vector<double> scores;
  for (int k = 0; k < n_images; ++k) {
    if (candidates[k]) {
      boxes.push_back(*candidates[k]);
      scores.push_back(candidate_scores[k]);
    }
  }
  if (boxes.empty()) {
    throw InsufficientStructure("no candidate facade box found in any image");
  }

  const std::vector<int> labels =
      dbscan_boxes(boxes, opts.dbscan_eps_px, opts.dbscan_min_pts);
  std::map<int, std::vector<int>> clusters;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (labels[i] >= 0) clusters[labels[i]].push_back(static_cast<int>(i));
  }

  std::vector<int> dominant;
  for (const auto& [label, members] : clusters) {
    if (members.size() > dominant.size()) dominant = members;
  }
  if (dominant.empty()) {
    // Too few candidates to form a density cluster; fall back to the median
    // of all of them.
    dominant.resize(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) dominant[i] = static_cast<int>(i);
  }

  std::vector<double> x0s, y0s, x1s, y1s;
  double score_sum = 0.0;
  for (int i : dominant) {
    x0s.push_back(boxes[i].x0);
    y0s.push_back(boxes[i].y0);
    x1s.push_back(boxes[i].x1);
    y1s.push_back(boxes[i].y1);
    score_sum += scores[i];
  }
  FacadeBox out;
  out.x_min = median(std::move(x0s));
  out.y_min = median(std::move(y0s));
  out.x_max = median(std::move(x1s));
  out.y_max = median(std::move(y1s));
  out.score = score_sum / static_cast<double>(dominant.size());
  return out;
}

std::vector<OrthoImage> crop_facades(const std::vector<OrthoImage>& images,
                                     const FacadeBox& box) {
  std::vector<OrthoImage> out;
  out.reserve(images.size());
  for (const OrthoImage& img : images) {
    const int x0 = std::max(0, static_cast<int>(std::lround(box.x_min)));
    const int y0 = std::max(0, static_cast<int>(std::lround(box.y_min)));
    const int x1 = std::min(img.width(), static_cast<int>(std::lround(box.x_max)));
    const int y1 = std::min(img.height(), static_cast<int>(std::lround(box.y_max)));
    if (x1 - x0 < 1 || y1 - y0 < 1) {
      throw CropOutOfBounds("facade box does not intersect image '" +
                            img.source_id + "'");
    }
    OrthoImage crop;
    crop.image = ImageRGBA(x1 - x0, y1 - y0);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        crop.image.at(x - x0, y - y0) = img.image.at(x, y);
      }
    }
    crop.pixel_size = img.pixel_size;
    crop.plane = img.plane;
    crop.basis = img.basis;
    crop.grid_origin2d = img.grid_origin2d +
                         Vec2(x0 * img.pixel_size, y0 * img.pixel_size);
    crop.source_id = img.source_id;
    out.push_back(std::move(crop));
  }
  return out;
}

std::vector<std::vector<LineSegment>> lines_from_json(const nlohmann::json& j) {
  std::vector<std::vector<LineSegment>> out;
  for (const Json& img : require_field(j, "images", "lines file")) {
    std::vector<LineSegment> lines;
    for (const Json& seg : require_field(img, "segments", "lines image")) {
      lines.push_back(LineSegment::from_endpoints(
          require_field(seg, "p0", "segment").get<Vec2>(),
          require_field(seg, "p1", "segment").get<Vec2>()));
    }
    out.push_back(std::move(lines));
  }
  return out;
}

nlohmann::json lines_to_json(const std::vector<std::vector<LineSegment>>& lines,
                             const std::vector<std::string>& source_ids) {
  Json images = Json::array();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Json segs = Json::array();
    for (const LineSegment& l : lines[i]) {
      segs.push_back(Json{{"p0", l.p0}, {"p1", l.p1}});
    }
    Json entry{{"segments", segs}};
    if (i < source_ids.size()) entry["source_id"] = source_ids[i];
    images.push_back(std::move(entry));
  }
  return Json{{"images", images}};
}

}  // namespace facade3d

#include "facade3d/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "facade3d/image_io.hpp"
#include "facade3d/json_util.hpp"

namespace facade3d {

namespace fs = std::filesystem;

namespace {

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

double horizontal_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

PanoRecord parse_pano(const Json& j, const fs::path& base_dir,
                      int assoc_cols, int assoc_rows,
                      const std::string& ctx) {
  PanoRecord rec;
  rec.pano_id = require_field(j, "pano_id", ctx).get<std::string>();
  const std::string image_rel = require_field(j, "image", ctx).get<std::string>();
  rec.image_path = (base_dir / image_rel).string();
  rec.width = require_field(j, "width", ctx).get<int>();
  rec.height = require_field(j, "height", ctx).get<int>();
  if (rec.width <= 0 || rec.height <= 0) {
    throw InvariantViolation(ctx + ".width/height: must be positive");
  }

  const Json& pose = require_field(j, "pose", ctx);
  rec.pose.position = require_field(pose, "position", ctx + ".pose").get<Vec3>();
  rec.pose.heading_deg = require_field(pose, "heading", ctx + ".pose").get<double>();
  rec.pose.pitch_deg = require_field(pose, "pitch", ctx + ".pose").get<double>();
  rec.pose.roll_deg = require_field(pose, "roll", ctx + ".pose").get<double>();
  try {
    rec.pose.validate();
  } catch (const InvariantViolation& e) {
    throw InvariantViolation(ctx + ".pose: " + e.what());
  }

  rec.capture_date = require_field(j, "capture_date", ctx).get<std::string>();
  if (!is_iso_date(rec.capture_date)) {
    throw ParseError(ctx + ".capture_date: expected YYYY-MM-DD, got '" +
                     rec.capture_date + "'");
  }

  if (j.contains("neighbors")) {
    rec.neighbor_ids = j.at("neighbors").get<std::vector<std::string>>();
  }

  const Json& planes = require_field(j, "planes", ctx);
  if (!planes.is_array()) throw ParseError(ctx + ".planes: expected array");
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const Json& p = planes[i];
    if (!p.is_array() || p.size() != 4) {
      throw ParseError(ctx + ".planes[" + std::to_string(i) +
                       "]: expected [a,b,c,d]");
    }
    PlaneRecord pr;
    pr.raw_normal = Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    pr.raw_d = p[3].get<double>();
    rec.planes.push_back(pr);
  }

  const Json& t = require_field(j, "transform", ctx);
  rec.transform.rotation = require_field(t, "rotation", ctx + ".transform").get<Mat3>();
  rec.transform.translation =
      require_field(t, "translation", ctx + ".transform").get<Vec3>();
  try {
    rec.transform.validate();
  } catch (const InvariantViolation& e) {
    throw InvariantViolation(ctx + ".transform: " + e.what());
  }

  const std::string assoc_rel = require_field(j, "assoc", ctx).get<std::string>();
  const fs::path assoc_path = base_dir / assoc_rel;
  const Image16 assoc_png = load_image_png16(assoc_path);
  if (assoc_png.width != assoc_cols || assoc_png.height != assoc_rows) {
    throw InvariantViolation(
        ctx + ".assoc: expected " + std::to_string(assoc_cols) + "x" +
        std::to_string(assoc_rows) + ", got " + std::to_string(assoc_png.width) +
        "x" + std::to_string(assoc_png.height));
  }
  rec.assoc.cols = assoc_png.width;
  rec.assoc.rows = assoc_png.height;
  rec.assoc.indices.resize(assoc_png.data.size());
  const auto n_planes = static_cast<std::int32_t>(rec.planes.size());
  for (std::size_t i = 0; i < assoc_png.data.size(); ++i) {
    // PNG encoding: 0 = no plane, k+1 = plane k.
    const std::int32_t idx = static_cast<std::int32_t>(assoc_png.data[i]) - 1;
    if (idx < -1 || idx >= n_planes) {
      throw InvariantViolation(ctx + ".assoc: index " + std::to_string(idx) +
                               " out of range for " + std::to_string(n_planes) +
                               " planes");
    }
    rec.assoc.indices[i] = idx;
  }

  if (!fs::exists(rec.image_path)) {
    throw IoError(ctx + ".image: file not found: " + rec.image_path);
  }
  return rec;
}

}  // namespace

const PanoRecord* DatasetManifest::find(const std::string& pano_id) const {
  for (const PanoRecord& rec : panos) {
    if (rec.pano_id == pano_id) return &rec;
  }
  return nullptr;
}

DatasetManifest load_manifest(const fs::path& path) {
  const Json j = load_json_file(path);
  DatasetManifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  m.dataset_id = require_field(j, "dataset_id", "manifest").get<std::string>();
  if (j.contains("frame_origin")) {
    m.frame_origin = j.at("frame_origin").get<std::string>();
  }

  int assoc_cols = 512, assoc_rows = 256;
  if (j.contains("assoc_size")) {
    const Json& s = j.at("assoc_size");
    if (!s.is_array() || s.size() != 2) {
      throw ParseError("manifest.assoc_size: expected [cols, rows]");
    }
    assoc_cols = s[0].get<int>();
    assoc_rows = s[1].get<int>();
    if (assoc_cols <= 0 || assoc_rows <= 0) {
      throw InvariantViolation("manifest.assoc_size: must be positive");
    }
  }

  if (j.contains("footprint")) {
    m.footprint = j.at("footprint").get<std::vector<Vec3>>();
  }

  const Json& panos = require_field(j, "panos", "manifest");
  if (!panos.is_array()) throw ParseError("manifest.panos: expected array");
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < panos.size(); ++i) {
    const std::string ctx = "manifest.panos[" + std::to_string(i) + "]";
    PanoRecord rec = parse_pano(panos[i], m.base_dir, assoc_cols, assoc_rows, ctx);
    if (!ids.insert(rec.pano_id).second) {
      throw InvariantViolation(ctx + ".pano_id: duplicate id '" + rec.pano_id + "'");
    }
    m.panos.push_back(std::move(rec));
  }

  for (std::size_t i = 0; i < m.panos.size(); ++i) {
    for (const std::string& nb : m.panos[i].neighbor_ids) {
      if (!ids.count(nb)) {
        throw InvariantViolation("manifest.panos[" + std::to_string(i) +
                                 "].neighbors: dangling neighbor '" + nb + "'");
      }
    }
  }
  return m;
}

std::vector<PanoRecord> select_origin_and_traverse(const DatasetManifest& manifest,
                                                   const Vec3& center,
                                                   double radius) {
  if (!(radius > 0.0)) throw DomainError("radius must be positive");

  std::unordered_map<std::string, const PanoRecord*> by_id;
  for (const PanoRecord& rec : manifest.panos) by_id[rec.pano_id] = &rec;

  const PanoRecord* origin = nullptr;
  for (const PanoRecord& rec : manifest.panos) {
    if (horizontal_distance(rec.pose.position, center) > radius) continue;
    if (origin == nullptr || rec.capture_date > origin->capture_date ||
        (rec.capture_date == origin->capture_date &&
         rec.pano_id < origin->pano_id)) {
      origin = &rec;
    }
  }
  if (origin == nullptr) {
    throw EmptySelection("no panorama within radius " + std::to_string(radius));
  }

  std::vector<PanoRecord> out;
  std::unordered_set<std::string> visited{origin->pano_id};
  std::deque<const PanoRecord*> queue{origin};
  while (!queue.empty()) {
    const PanoRecord* cur = queue.front();
    queue.pop_front();
    out.push_back(*cur);
    for (const std::string& nb : cur->neighbor_ids) {
      if (visited.count(nb)) continue;
      visited.insert(nb);
      const PanoRecord* next = by_id.at(nb);
      if (horizontal_distance(next->pose.position, center) <= radius) {
        queue.push_back(next);
      }
    }
  }
  return out;
}

std::vector<PanoRecord> filter_same_date(const std::vector<PanoRecord>& panos) {
  if (panos.empty()) throw DomainError("filter_same_date on empty input");
  std::string latest;
  for (const PanoRecord& rec : panos) latest = std::max(latest, rec.capture_date);
  std::vector<PanoRecord> out;
  for (const PanoRecord& rec : panos) {
    if (rec.capture_date == latest) out.push_back(rec);
  }
  return out;
}

std::optional<int> plane_for_pixel(const PanoRecord& rec, double x, double y) {
  if (!(x >= 0.0 && x < rec.width && y >= 0.0 && y < rec.height)) {
    throw DomainError("pixel outside pano bounds");
  }
  const int col = std::min(static_cast<int>(std::floor(x * rec.assoc.cols / rec.width)),
                           rec.assoc.cols - 1);
  const int row = std::min(static_cast<int>(std::floor(y * rec.assoc.rows / rec.height)),
                           rec.assoc.rows - 1);
  const std::int32_t idx = rec.assoc.at(col, row);
  if (idx < 0) return std::nullopt;
  return static_cast<int>(idx);
}

ImageRGBA load_pano_image(const PanoRecord& rec) {
  ImageRGBA img = load_image_rgba(rec.image_path);
  if (img.width() != rec.width || img.height() != rec.height) {
    throw InvariantViolation("pano image size mismatch for '" + rec.pano_id +
                             "': manifest says " + std::to_string(rec.width) +
                             "x" + std::to_string(rec.height) + ", file is " +
                             std::to_string(img.width()) + "x" +
                             std::to_string(img.height()));
  }
  return img;
}

}  // namespace facade3d

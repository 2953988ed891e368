#include "facade3d/thermal_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "facade3d/json_util.hpp"

namespace facade3d {

bool WindowGeometry3D::operator==(const WindowGeometry3D& o) const {
  for (int i = 0; i < 4; ++i) {
    if (corners[i].x != o.corners[i].x || corners[i].y != o.corners[i].y ||
        corners[i].z != o.corners[i].z) {
      return false;
    }
  }
  return width_m == o.width_m && height_m == o.height_m && area_m2 == o.area_m2;
}

namespace {

bool vec3_eq(const Vec3& a, const Vec3& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z;
}

bool plane_eq(const Plane& a, const Plane& b) {
  return vec3_eq(a.normal.vec(), b.normal.vec()) && a.d == b.d;
}

bool basis_eq(const PlaneBasis& a, const PlaneBasis& b) {
  return vec3_eq(a.u.vec(), b.u.vec()) && vec3_eq(a.v.vec(), b.v.vec()) &&
         vec3_eq(a.n.vec(), b.n.vec()) && vec3_eq(a.origin3d, b.origin3d);
}

}  // namespace

bool FacadeModel::operator==(const FacadeModel& o) const {
  return facade_id == o.facade_id && plane_eq(plane, o.plane) &&
         basis_eq(basis, o.basis) && bbox_px.x_min == o.bbox_px.x_min &&
         bbox_px.y_min == o.bbox_px.y_min && bbox_px.x_max == o.bbox_px.x_max &&
         bbox_px.y_max == o.bbox_px.y_max && origin2d.x == o.origin2d.x &&
         origin2d.y == o.origin2d.y && vec3_eq(center3d, o.center3d) &&
         width_m == o.width_m && height_m == o.height_m &&
         pixel_size == o.pixel_size && windows == o.windows && wwr == o.wwr;
}

bool ThermalModel::operator==(const ThermalModel& o) const {
  if (building_id != o.building_id || frame_note != o.frame_note ||
      facades != o.facades || footprint.has_value() != o.footprint.has_value()) {
    return false;
  }
  if (footprint) {
    if (footprint->size() != o.footprint->size()) return false;
    for (std::size_t i = 0; i < footprint->size(); ++i) {
      if (!vec3_eq((*footprint)[i], (*o.footprint)[i])) return false;
    }
  }
  return true;
}

WindowGeometry3D bbox_to_world(const Detection& det, const FacadeModel& facade) {
  const double w_px = facade.width_m / facade.pixel_size;
  const double h_px = facade.height_m / facade.pixel_size;
  const double tol = 1e-6;
  if (det.bbox.x0 < -tol || det.bbox.y0 < -tol || det.bbox.x1 > w_px + tol ||
      det.bbox.y1 > h_px + tol) {
    throw OutOfFacade("detection bbox outside the facade crop");
  }

  const double s = facade.pixel_size;
  const double u0 = facade.origin2d.x + det.bbox.x0 * s;
  const double u1 = facade.origin2d.x + det.bbox.x1 * s;
  const double v0 = facade.origin2d.y + det.bbox.y0 * s;
  const double v1 = facade.origin2d.y + det.bbox.y1 * s;

  WindowGeometry3D win;
  // CCW seen from outside (+n side) because u x v = n.
  win.corners = {facade.basis.world_point({u0, v0}),
                 facade.basis.world_point({u1, v0}),
                 facade.basis.world_point({u1, v1}),
                 facade.basis.world_point({u0, v1})};
  win.width_m = det.bbox.width() * s;
  win.height_m = det.bbox.height() * s;
  win.area_m2 = win.width_m * win.height_m;
  return win;
}

double rect_union_area(const std::vector<Box2>& rects) {
  std::vector<double> xs;
  for (const Box2& r : rects) {
    if (!r.valid()) continue;
    xs.push_back(r.x0);
    xs.push_back(r.x1);
  }
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x_lo = xs[i], x_hi = xs[i + 1];
    const double mid = 0.5 * (x_lo + x_hi);
    // Merge the y intervals of rectangles covering this x slab.
    std::vector<std::pair<double, double>> ys;
    for (const Box2& r : rects) {
      if (!r.valid()) continue;
      if (r.x0 <= mid && mid <= r.x1) ys.emplace_back(r.y0, r.y1);
    }
    std::sort(ys.begin(), ys.end());
    double covered = 0.0;
    double cur_lo = 0.0, cur_hi = -1.0;
    bool open = false;
    for (const auto& [lo, hi] : ys) {
      if (!open) {
        cur_lo = lo;
        cur_hi = hi;
        open = true;
      } else if (lo <= cur_hi) {
        cur_hi = std::max(cur_hi, hi);
      } else {
        covered += cur_hi - cur_lo;
        cur_lo = lo;
        cur_hi = hi;
      }
    }
    if (open) covered += cur_hi - cur_lo;
    area += covered * (x_hi - x_lo);
  }
  return area;
}

double compute_wwr(const FacadeModel& facade) {
  const double facade_area = facade.width_m * facade.height_m;
  if (!(facade_area > 0.0)) {
    throw DegenerateFacade("facade area must be positive");
  }
  std::vector<Box2> rects;
  rects.reserve(facade.windows.size());
  for (const WindowGeometry3D& w : facade.windows) {
    // Windows live on the facade plane; recover their (u, v) rectangle.
    const Vec2 a = facade.basis.plane_coords(w.corners[0]);
    const Vec2 b = facade.basis.plane_coords(w.corners[2]);
    rects.push_back(Box2{std::min(a.x, b.x), std::min(a.y, b.y),
                         std::max(a.x, b.x), std::max(a.y, b.y)});
  }
  return rect_union_area(rects) / facade_area;
}

ThermalModel assemble_model(const std::string& building_id,
                            std::vector<FacadeModel> facades,
                            std::optional<std::vector<Vec3>> footprint,
                            const std::string& frame_note) {
  std::set<std::string> ids;
  for (const FacadeModel& f : facades) {
    if (!ids.insert(f.facade_id).second) {
      throw InvariantViolation("duplicate facade id '" + f.facade_id + "'");
    }
    if (!(f.wwr >= 0.0 && f.wwr <= 1.0)) {
      throw InvariantViolation("facade '" + f.facade_id + "' wwr out of [0,1]");
    }
  }
  ThermalModel m;
  m.building_id = building_id;
  m.facades = std::move(facades);
  m.footprint = std::move(footprint);
  m.frame_note = frame_note;
  return m;
}

namespace {

Json window_to_json(const WindowGeometry3D& w) {
  Json corners = Json::array();
  for (const Vec3& c : w.corners) corners.push_back(c);
  return Json{{"type", "Aperture"},
              {"boundary", corners},
              {"width_m", w.width_m},
              {"height_m", w.height_m},
              {"area_m2", w.area_m2}};
}

WindowGeometry3D window_from_json(const Json& j) {
  WindowGeometry3D w;
  const Json& corners = require_field(j, "boundary", "aperture");
  if (!corners.is_array() || corners.size() != 4) {
    throw ParseError("aperture boundary must have 4 vertices");
  }
  for (int i = 0; i < 4; ++i) w.corners[i] = corners[i].get<Vec3>();
  w.width_m = require_field(j, "width_m", "aperture").get<double>();
  w.height_m = require_field(j, "height_m", "aperture").get<double>();
  w.area_m2 = require_field(j, "area_m2", "aperture").get<double>();
  return w;
}

Json facade_to_json(const FacadeModel& f) {
  Json windows = Json::array();
  for (const WindowGeometry3D& w : f.windows) windows.push_back(window_to_json(w));

  // Facade rectangle corners, CCW from outside, derived for HBJSON likeness.
  const Vec2 o = f.origin2d;
  Json boundary = Json::array();
  boundary.push_back(f.basis.world_point({o.x, o.y}));
  boundary.push_back(f.basis.world_point({o.x + f.width_m, o.y}));
  boundary.push_back(f.basis.world_point({o.x + f.width_m, o.y + f.height_m}));
  boundary.push_back(f.basis.world_point({o.x, o.y + f.height_m}));

  return Json{{"type", "Face"},
              {"facade_id", f.facade_id},
              {"boundary", boundary},
              {"plane", f.plane},
              {"basis", f.basis},
              {"bbox_px", Json::array({f.bbox_px.x_min, f.bbox_px.y_min,
                                       f.bbox_px.x_max, f.bbox_px.y_max})},
              {"origin2d", f.origin2d},
              {"center3d", f.center3d},
              {"width_m", f.width_m},
              {"height_m", f.height_m},
              {"pixel_size", f.pixel_size},
              {"wwr", f.wwr},
              {"apertures", windows},
              {"properties", Json::object()}};
}

FacadeModel facade_from_json(const Json& j) {
  FacadeModel f;
  f.facade_id = require_field(j, "facade_id", "face").get<std::string>();
  f.plane = require_field(j, "plane", "face").get<Plane>();
  f.basis = require_field(j, "basis", "face").get<PlaneBasis>();
  const Json& bb = require_field(j, "bbox_px", "face");
  if (!bb.is_array() || bb.size() != 4) throw ParseError("face bbox_px malformed");
  f.bbox_px = FacadeBox{bb[0].get<double>(), bb[1].get<double>(),
                        bb[2].get<double>(), bb[3].get<double>(), 0.0};
  f.origin2d = require_field(j, "origin2d", "face").get<Vec2>();
  f.center3d = require_field(j, "center3d", "face").get<Vec3>();
  f.width_m = require_field(j, "width_m", "face").get<double>();
  f.height_m = require_field(j, "height_m", "face").get<double>();
  f.pixel_size = require_field(j, "pixel_size", "face").get<double>();
  f.wwr = require_field(j, "wwr", "face").get<double>();
  for (const Json& wj : require_field(j, "apertures", "face")) {
    f.windows.push_back(window_from_json(wj));
  }
  return f;
}

}  // namespace

nlohmann::json model_to_json(const ThermalModel& m) {
  Json faces = Json::array();
  for (const FacadeModel& f : m.facades) faces.push_back(facade_to_json(f));
  Json j{{"type", "Model"},
         {"building_id", m.building_id},
         {"units", "Meters"},
         {"frame_note", m.frame_note},
         {"faces", faces}};
  if (m.footprint) {
    Json fp = Json::array();
    for (const Vec3& p : *m.footprint) fp.push_back(p);
    j["footprint"] = fp;
  }
  return j;
}

ThermalModel model_from_json(const nlohmann::json& j) {
  ThermalModel m;
  m.building_id = require_field(j, "building_id", "model").get<std::string>();
  if (j.contains("frame_note")) m.frame_note = j.at("frame_note").get<std::string>();
  for (const Json& fj : require_field(j, "faces", "model")) {
    m.facades.push_back(facade_from_json(fj));
  }
  if (j.contains("footprint")) {
    m.footprint = j.at("footprint").get<std::vector<Vec3>>();
  }
  // Re-validate invariants on the way in.
  return assemble_model(m.building_id, std::move(m.facades), std::move(m.footprint),
                        m.frame_note);
}

void save_model(const ThermalModel& m, const std::filesystem::path& path) {
  write_json_file(model_to_json(m), path);
}

ThermalModel load_model(const std::filesystem::path& path) {
  return model_from_json(load_json_file(path));
}

}  // namespace facade3d

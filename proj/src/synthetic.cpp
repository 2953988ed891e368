#include "facade3d/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "facade3d/image_io.hpp"
#include "facade3d/json_util.hpp"
#include "facade3d/util.hpp"

namespace facade3d {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (n_facades < 3) throw ConfigError("n_facades must be >= 3");
  if (!(side_min > 0.0 && side_max >= side_min)) {
    throw ConfigError("invalid facade side range");
  }
  if (!(height_min > 0.0 && height_max >= height_min)) {
    throw ConfigError("invalid facade height range");
  }
  if (win_rows_min < 1 || win_rows_max < win_rows_min || win_cols_min < 1 ||
      win_cols_max < win_cols_min) {
    throw ConfigError("invalid window grid range");
  }
  if (!(win_fill_min > 0.0 && win_fill_max <= 0.95 &&
        win_fill_max >= win_fill_min)) {
    throw ConfigError("window fill fractions must be in (0, 0.95]");
  }
  if (pano_count < 1) throw ConfigError("pano_count must be >= 1");
  if (pano_width < 512 || pano_height < 256) {
    throw ConfigError("pano resolution must be at least 512x256");
  }
  if (assoc_cols < 1 || assoc_rows < 1) throw ConfigError("invalid assoc size");
  if (wall_palette.empty()) throw ConfigError("wall palette must not be empty");
  auto close = [](const RGBA& a, const RGBA& b) {
    return std::abs(a.r - b.r) + std::abs(a.g - b.g) + std::abs(a.b - b.b) < 60;
  };
  for (const RGBA& wall : wall_palette) {
    if (close(wall, window_color) || close(wall, sky)) {
      throw ConfigError("wall color too close to window or sky color");
    }
  }
  if (close(window_color, sky)) {
    throw ConfigError("window color too close to sky color");
  }
}

namespace {

bool point_in_polygon(const std::vector<Vec3>& poly, double x, double y) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const bool crosses = (poly[i].y > y) != (poly[j].y > y);
    if (crosses) {
      const double x_at =
          poly[j].x + (y - poly[j].y) * (poly[i].x - poly[j].x) / (poly[i].y - poly[j].y);
      if (x < x_at) inside = !inside;
    }
  }
  return inside;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

SynthBuilding generate_building(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed);

  SynthBuilding b;
  b.sky_color = cfg.sky;
  b.occluders = cfg.occluders;
  b.height = uniform(rng, cfg.height_min, cfg.height_max);

  // Footprint corners, CCW seen from above.
  if (cfg.n_facades == 4) {
    const double wx = uniform(rng, cfg.side_min, cfg.side_max);
    const double wy = uniform(rng, cfg.side_min, cfg.side_max);
    b.footprint = {Vec3(wx / 2, -wy / 2, 0), Vec3(wx / 2, wy / 2, 0),
                   Vec3(-wx / 2, wy / 2, 0), Vec3(-wx / 2, -wy / 2, 0)};
  } else {
    const double side = uniform(rng, cfg.side_min, cfg.side_max);
    const int n = cfg.n_facades;
    const double circumradius = side / (2.0 * std::sin(kPi / n));
    for (int k = 0; k < n; ++k) {
      const double ang = 2.0 * kPi * k / n;
      b.footprint.push_back(
          Vec3(circumradius * std::cos(ang), circumradius * std::sin(ang), 0));
    }
  }

  const int n_sides = static_cast<int>(b.footprint.size());
  for (int k = 0; k < n_sides; ++k) {
    const Vec3 c0 = b.footprint[k];
    const Vec3 c1 = b.footprint[(k + 1) % n_sides];
    const Vec3 edge = c1 - c0;
    // CCW footprint: outward normal is the edge direction rotated -90 deg.
    const UnitVec3 normal = UnitVec3::normalized(Vec3(edge.y, -edge.x, 0.0));

    SynthFacade f;
    f.plane = Plane(normal, normal.dot(c0));
    f.wall_color = cfg.wall_palette[k % cfg.wall_palette.size()];

    const PlaneBasis basis = plane_basis(f.plane);
    const Vec2 uv0 = basis.plane_coords(c0);
    const Vec2 uv1 = basis.plane_coords(c1);
    f.extent_uv = Box2{std::min(uv0.x, uv1.x), 0.0, std::max(uv0.x, uv1.x),
                       b.height};

    const int rows = uniform_int(rng, cfg.win_rows_min, cfg.win_rows_max);
    const int cols = uniform_int(rng, cfg.win_cols_min, cfg.win_cols_max);
    const double fill_u = uniform(rng, cfg.win_fill_min, cfg.win_fill_max);
    const double fill_v = uniform(rng, cfg.win_fill_min, cfg.win_fill_max);

    const double usable_w = f.extent_uv.width() - 2.0 * cfg.facade_margin;
    const double usable_h = f.extent_uv.height() - 2.0 * cfg.facade_margin;
    if (usable_w <= 0.0 || usable_h <= 0.0) {
      throw ConfigError("facade margin leaves no room for windows");
    }
    const double cell_w = usable_w / cols;
    const double cell_h = usable_h / rows;
    const double win_w = std::clamp(fill_u * cell_w, cfg.win_w_min, cfg.win_w_max);
    const double win_h = std::clamp(fill_v * cell_h, cfg.win_h_min, cfg.win_h_max);
    if (win_w > cell_w - 0.02 || win_h > cell_h - 0.02) {
      throw ConfigError("window grid infeasible: windows exceed their cells");
    }

    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double cu = f.extent_uv.x0 + cfg.facade_margin + (c + 0.5) * cell_w;
        const double cv = cfg.facade_margin + (r + 0.5) * cell_h;
        SynthWindow w;
        w.rect_uv = Box2{cu - win_w / 2, cv - win_h / 2, cu + win_w / 2,
                         cv + win_h / 2};
        w.color = cfg.window_color;
        f.windows.push_back(w);
      }
    }
    b.facades.push_back(std::move(f));
  }
  return b;
}

GroundTruth building_ground_truth(const SynthBuilding& b,
                                  const std::string& building_id) {
  GroundTruth gt;
  gt.building_id = building_id;
  for (std::size_t k = 0; k < b.facades.size(); ++k) {
    const SynthFacade& f = b.facades[k];
    const PlaneBasis basis = plane_basis(f.plane);
    GtFacade gf;
    gf.facade_id = "gt_facade_" + std::to_string(k);
    gf.plane = f.plane;
    gf.width_m = f.extent_uv.width();
    gf.height_m = f.extent_uv.height();
    gf.area_m2 = gf.width_m * gf.height_m;
    gf.corners = {basis.world_point({f.extent_uv.x0, f.extent_uv.y0}),
                  basis.world_point({f.extent_uv.x1, f.extent_uv.y0}),
                  basis.world_point({f.extent_uv.x1, f.extent_uv.y1}),
                  basis.world_point({f.extent_uv.x0, f.extent_uv.y1})};
    double window_area = 0.0;
    for (const SynthWindow& w : f.windows) {
      GtWindow gw;
      gw.corners = {basis.world_point({w.rect_uv.x0, w.rect_uv.y0}),
                    basis.world_point({w.rect_uv.x1, w.rect_uv.y0}),
                    basis.world_point({w.rect_uv.x1, w.rect_uv.y1}),
                    basis.world_point({w.rect_uv.x0, w.rect_uv.y1})};
      gw.width_m = w.rect_uv.width();
      gw.height_m = w.rect_uv.height();
      gw.area_m2 = gw.width_m * gw.height_m;
      window_area += gw.area_m2;
      gf.windows.push_back(gw);
    }
    gf.wwr = window_area / gf.area_m2;
    gt.facades.push_back(std::move(gf));
  }
  return gt;
}

namespace {

void rgba_to_json(Json& j, const RGBA& c) {
  j = Json::array({c.r, c.g, c.b, c.a});
}

RGBA rgba_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("expected [r,g,b,a]");
  return RGBA{j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(),
              j[2].get<std::uint8_t>(), j[3].get<std::uint8_t>()};
}

}  // namespace

nlohmann::json building_to_json(const SynthBuilding& b) {
  Json facades = Json::array();
  for (const SynthFacade& f : b.facades) {
    Json windows = Json::array();
    for (const SynthWindow& w : f.windows) {
      Json color;
      rgba_to_json(color, w.color);
      windows.push_back(Json{{"rect_uv", w.rect_uv}, {"color", color}});
    }
    Json wall;
    rgba_to_json(wall, f.wall_color);
    facades.push_back(Json{{"plane", f.plane},
                           {"extent_uv", f.extent_uv},
                           {"wall_color", wall},
                           {"windows", windows}});
  }
  Json footprint = Json::array();
  for (const Vec3& p : b.footprint) footprint.push_back(p);
  Json sky;
  rgba_to_json(sky, b.sky_color);
  Json occluders = Json::array();
  for (const SynthOccluder& o : b.occluders) {
    Json color;
    rgba_to_json(color, o.color);
    occluders.push_back(Json{{"lo", o.lo}, {"hi", o.hi}, {"color", color}});
  }
  return Json{{"facades", facades},
              {"footprint", footprint},
              {"height", b.height},
              {"sky_color", sky},
              {"occluders", occluders}};
}

SynthBuilding building_from_json(const nlohmann::json& j) {
  SynthBuilding b;
  for (const Json& fj : require_field(j, "facades", "scene")) {
    SynthFacade f;
    f.plane = require_field(fj, "plane", "scene facade").get<Plane>();
    f.extent_uv = require_field(fj, "extent_uv", "scene facade").get<Box2>();
    f.wall_color = rgba_from_json(require_field(fj, "wall_color", "scene facade"));
    for (const Json& wj : require_field(fj, "windows", "scene facade")) {
      SynthWindow w;
      w.rect_uv = require_field(wj, "rect_uv", "scene window").get<Box2>();
      w.color = rgba_from_json(require_field(wj, "color", "scene window"));
      f.windows.push_back(w);
    }
    b.facades.push_back(std::move(f));
  }
  b.footprint = require_field(j, "footprint", "scene").get<std::vector<Vec3>>();
  b.height = require_field(j, "height", "scene").get<double>();
  b.sky_color = rgba_from_json(require_field(j, "sky_color", "scene"));
  for (const Json& oj : require_field(j, "occluders", "scene")) {
    SynthOccluder o;
    o.lo = require_field(oj, "lo", "occluder").get<Vec3>();
    o.hi = require_field(oj, "hi", "occluder").get<Vec3>();
    o.color = rgba_from_json(require_field(oj, "color", "occluder"));
    b.occluders.push_back(o);
  }
  return b;
}

namespace {

struct SceneTracer {
  const SynthBuilding* b;
  std::vector<PlaneBasis> owned_bases;
  const std::vector<PlaneBasis>* bases_ptr;

  explicit SceneTracer(const SynthBuilding& building,
                       const std::vector<PlaneBasis>* precomputed = nullptr)
      : b(&building), bases_ptr(precomputed) {
    if (bases_ptr == nullptr) {
      owned_bases.reserve(b->facades.size());
      for (const SynthFacade& f : b->facades) {
        owned_bases.push_back(plane_basis(f.plane));
      }
      bases_ptr = &owned_bases;
    }
  }

  const std::vector<PlaneBasis>& bases() const { return *bases_ptr; }

  /// Nearest facade hit along origin + t*dir (t > eps); returns index and t.
  int trace_facade(const Vec3& origin, const Vec3& dir, double* t_out) const {
    int best = -1;
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < b->facades.size(); ++k) {
      const SynthFacade& f = b->facades[k];
      const auto t = ray_plane_t(origin, dir, f.plane, 1e-12);
      if (!t || *t >= best_t) continue;
      const Vec2 uv = bases()[k].plane_coords(origin + dir * *t);
      if (uv.x < f.extent_uv.x0 || uv.x > f.extent_uv.x1 ||
          uv.y < f.extent_uv.y0 || uv.y > f.extent_uv.y1) {
        continue;
      }
      best = static_cast<int>(k);
      best_t = *t;
    }
    if (best >= 0 && t_out != nullptr) *t_out = best_t;
    return best;
  }

  /// Nearest occluder-box hit (slab method); infinity when none.
  double trace_occluder(const Vec3& origin, const Vec3& dir, int* idx) const {
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < b->occluders.size(); ++k) {
      const SynthOccluder& o = b->occluders[k];
      double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
      bool miss = false;
      const double olo[3] = {o.lo.x, o.lo.y, o.lo.z};
      const double ohi[3] = {o.hi.x, o.hi.y, o.hi.z};
      const double org[3] = {origin.x, origin.y, origin.z};
      const double d[3] = {dir.x, dir.y, dir.z};
      for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
          if (org[a] < olo[a] || org[a] > ohi[a]) {
            miss = true;
            break;
          }
        } else {
          double ta = (olo[a] - org[a]) / d[a];
          double tb = (ohi[a] - org[a]) / d[a];
          if (ta > tb) std::swap(ta, tb);
          t0 = std::max(t0, ta);
          t1 = std::min(t1, tb);
          if (t0 > t1) {
            miss = true;
            break;
          }
        }
      }
      if (!miss && t0 > 1e-9 && t0 < best_t) {
        best_t = t0;
        if (idx != nullptr) *idx = static_cast<int>(k);
      }
    }
    return best_t;
  }

  RGBA facade_color(int idx, const Vec2& uv) const {
    const SynthFacade& f = b->facades[idx];
    for (const SynthWindow& w : f.windows) {
      if (uv.x >= w.rect_uv.x0 && uv.x <= w.rect_uv.x1 && uv.y >= w.rect_uv.y0 &&
          uv.y <= w.rect_uv.y1) {
        return w.color;
      }
    }
    return f.wall_color;
  }

  /// Full shade: facade paint, occluder color, or sky. facade_idx reports the
  /// facade that owns the pixel (-1 for occluder/sky).
  RGBA shade(const Vec3& origin, const Vec3& dir, int* facade_idx) const {
    double t_facade = std::numeric_limits<double>::infinity();
    const int hit = trace_facade(origin, dir, &t_facade);
    int occ_idx = -1;
    const double t_occ = trace_occluder(origin, dir, &occ_idx);
    if (facade_idx != nullptr) *facade_idx = -1;
    if (occ_idx >= 0 && t_occ < t_facade) {
      return b->occluders[occ_idx].color;
    }
    if (hit >= 0) {
      if (facade_idx != nullptr) *facade_idx = hit;
      const Vec2 uv = bases()[hit].plane_coords(origin + dir * t_facade);
      return facade_color(hit, uv);
    }
    return b->sky_color;
  }
};

}  // namespace

RenderedPano render_panorama(const SynthBuilding& b, const PanoPose& pose,
                             int width, int height, const RenderOptions& opts) {
  pose.validate();
  if (point_in_polygon(b.footprint, pose.position.x, pose.position.y) &&
      pose.position.z >= -0.5 && pose.position.z <= b.height + 0.5) {
    throw DegeneratePose("pano pose inside the building");
  }

  const SceneTracer tracer(b);
  const Mat3 rot = pose.rotation();

  RenderedPano out;
  out.image = ImageRGBA(width, height, RGBA{0, 0, 0, 255});
  out.record.width = width;
  out.record.height = height;
  out.record.pose = pose;
  out.record.transform.rotation = rot;
  out.record.transform.translation = pose.position;

  parallel_for(0, height, opts.num_threads, [&](int y) {
    Rng noise_rng = make_rng(derive_seed(opts.seed, "noise", y));
    std::normal_distribution<double> noise(0.0, opts.pixel_noise_sigma);
    for (int x = 0; x < width; ++x) {
      const Vec3 dir = rot * local_dir_from_pixel(x + 0.5, y + 0.5, width, height);
      RGBA c = tracer.shade(pose.position, dir, nullptr);
      if (opts.pixel_noise_sigma > 0.0) {
        auto jitter = [&](std::uint8_t v) {
          return static_cast<std::uint8_t>(
              std::clamp(std::lround(v + noise(noise_rng)), 0L, 255L));
        };
        c = RGBA{jitter(c.r), jitter(c.g), jitter(c.b), 255};
      }
      out.image.at(x, y) = c;
    }
  });

  // Association matrix at cell centers.
  out.record.assoc.cols = opts.assoc_cols;
  out.record.assoc.rows = opts.assoc_rows;
  out.record.assoc.indices.assign(
      static_cast<std::size_t>(opts.assoc_cols) * opts.assoc_rows, -1);
  for (int r = 0; r < opts.assoc_rows; ++r) {
    for (int c = 0; c < opts.assoc_cols; ++c) {
      const double px = (c + 0.5) * width / opts.assoc_cols;
      const double py = (r + 0.5) * height / opts.assoc_rows;
      const Vec3 dir = rot * local_dir_from_pixel(px, py, width, height);
      int idx = -1;
      tracer.shade(pose.position, dir, &idx);
      out.record.assoc.at(c, r) = idx;
    }
  }

  // Plane list in the panorama-local frame; facade offsets optionally
  // jittered to mimic provider noise. Index order matches the assoc matrix.
  Rng jitter_rng = make_rng(derive_seed(opts.seed, "plane-jitter", 0));
  const Mat3 rot_t = rot.transposed();
  for (const SynthFacade& f : b.facades) {
    double d_world = f.plane.d;
    if (opts.plane_d_jitter > 0.0) {
      d_world += uniform(jitter_rng, -opts.plane_d_jitter, opts.plane_d_jitter);
    }
    const Vec3 n_local = rot_t * f.plane.normal.vec();
    const double d_local = d_world - f.plane.normal.dot(pose.position);
    PlaneRecord pr;
    pr.raw_normal = n_local;
    pr.raw_d = d_local;
    out.record.planes.push_back(pr);
  }
  if (opts.add_ground_plane_record) {
    PlaneRecord ground;
    ground.raw_normal = rot_t * Vec3(0, 0, 1);
    ground.raw_d = -pose.position.z;
    out.record.planes.push_back(ground);
  }
  if (opts.add_zero_plane_record) {
    out.record.planes.push_back(PlaneRecord{});  // zero padding row
  }
  return out;
}

std::vector<Detection> oracle_window_detector(const OrthoImage& img,
                                              RGBA window_color, int tolerance,
                                              int min_area_px) {
  const int w = img.width();
  const int h = img.height();
  auto is_window = [&](int x, int y) {
    const RGBA& p = img.image.at(x, y);
    if (p.a != 255) return false;
    return std::abs(p.r - window_color.r) <= tolerance &&
           std::abs(p.g - window_color.g) <= tolerance &&
           std::abs(p.b - window_color.b) <= tolerance;
  };

  std::vector<bool> visited(static_cast<std::size_t>(w) * h, false);
  std::vector<Detection> dets;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (visited[i] || !is_window(x, y)) continue;

      int x_min = x, x_max = x, y_min = y, y_max = y;
      int area = 0;
      std::deque<std::pair<int, int>> queue{{x, y}};
      visited[i] = true;
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        ++area;
        x_min = std::min(x_min, cx);
        x_max = std::max(x_max, cx);
        y_min = std::min(y_min, cy);
        y_max = std::max(y_max, cy);
        const int nbs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& nb : nbs) {
          const int nx = cx + nb[0], ny = cy + nb[1];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (visited[ni] || !is_window(nx, ny)) continue;
          visited[ni] = true;
          queue.emplace_back(nx, ny);
        }
      }
      if (area < min_area_px) continue;
      Detection d;
      d.bbox = Box2{static_cast<double>(x_min), static_cast<double>(y_min),
                    static_cast<double>(x_max + 1), static_cast<double>(y_max + 1)};
      d.score = 1.0;
      d.category_id = 0;
      d.source_id = img.source_id;
      dets.push_back(d);
    }
  }
  return dets;
}

SynthBuildingOracle::SynthBuildingOracle(SynthBuilding building)
    : building_(std::move(building)) {
  bases_.reserve(building_.facades.size());
  for (const SynthFacade& f : building_.facades) {
    bases_.push_back(plane_basis(f.plane));
  }
}

RGBA SynthBuildingOracle::query(const Vec3& origin, const UnitVec3& dir,
                                int /*samples*/) const {
  const SceneTracer tracer(building_, &bases_);
  // A ray that starts on a facade surface sees that surface first.
  for (std::size_t k = 0; k < building_.facades.size(); ++k) {
    const SynthFacade& f = building_.facades[k];
    if (std::abs(f.plane.signed_distance(origin)) > 1e-6) continue;
    const Vec2 uv = bases_[k].plane_coords(origin);
    if (uv.x < f.extent_uv.x0 || uv.x > f.extent_uv.x1 ||
        uv.y < f.extent_uv.y0 || uv.y > f.extent_uv.y1) {
      continue;
    }
    return tracer.facade_color(static_cast<int>(k), uv);
  }
  return tracer.shade(origin, dir, nullptr);
}

void write_synthetic_dataset(const SynthConfig& cfg, const fs::path& out_dir,
                             int num_threads) {
  cfg.validate();
  const SynthBuilding building = generate_building(cfg);
  const std::string building_id = "synth-" + std::to_string(cfg.seed);

  double half_diag = 0.0;
  for (const Vec3& p : building.footprint) {
    half_diag = std::max(half_diag, std::hypot(p.x, p.y));
  }
  const double radius = cfg.pano_ring_radius > 0.0
                            ? cfg.pano_ring_radius
                            : half_diag + cfg.ring_clearance;

  fs::create_directories(out_dir);
  Json panos = Json::array();
  for (int i = 0; i < cfg.pano_count; ++i) {
    const double ang = 2.0 * kPi * i / cfg.pano_count;
    PanoPose pose;
    pose.position = Vec3(radius * std::cos(ang), radius * std::sin(ang),
                         cfg.eye_height);
    // Face the building center.
    double heading = rad2deg(std::atan2(-pose.position.x, -pose.position.y));
    heading = std::fmod(heading + 360.0, 360.0);
    pose.heading_deg = heading;

    RenderOptions ropts;
    ropts.assoc_cols = cfg.assoc_cols;
    ropts.assoc_rows = cfg.assoc_rows;
    ropts.plane_d_jitter = cfg.plane_d_jitter;
    ropts.pixel_noise_sigma = cfg.pixel_noise_sigma;
    ropts.seed = derive_seed(cfg.seed, "pano", static_cast<std::uint64_t>(i));
    ropts.add_ground_plane_record = cfg.add_ground_plane_record;
    ropts.add_zero_plane_record = cfg.add_zero_plane_record;
    ropts.num_threads = num_threads;
    RenderedPano pano =
        render_panorama(building, pose, cfg.pano_width, cfg.pano_height, ropts);

    char name[32];
    std::snprintf(name, sizeof(name), "pano_%03d", i);
    const std::string image_rel = std::string("images/") + name + ".png";
    const std::string assoc_rel = std::string("assoc/") + name + "_assoc.png";
    save_image_png(pano.image, out_dir / image_rel);

    Image16 assoc;
    assoc.width = pano.record.assoc.cols;
    assoc.height = pano.record.assoc.rows;
    assoc.data.resize(pano.record.assoc.indices.size());
    for (std::size_t k = 0; k < assoc.data.size(); ++k) {
      assoc.data[k] =
          static_cast<std::uint16_t>(pano.record.assoc.indices[k] + 1);
    }
    save_image_png16(assoc, out_dir / assoc_rel);

    Json planes = Json::array();
    for (const PlaneRecord& pr : pano.record.planes) {
      planes.push_back(Json::array(
          {pr.raw_normal.x, pr.raw_normal.y, pr.raw_normal.z, pr.raw_d}));
    }
    const int prev = (i + cfg.pano_count - 1) % cfg.pano_count;
    const int next = (i + 1) % cfg.pano_count;
    char prev_name[32], next_name[32];
    std::snprintf(prev_name, sizeof(prev_name), "pano_%03d", prev);
    std::snprintf(next_name, sizeof(next_name), "pano_%03d", next);
    Json neighbors = Json::array();
    if (cfg.pano_count > 1) {
      neighbors.push_back(std::string(prev_name));
      if (next != prev) neighbors.push_back(std::string(next_name));
    }

    panos.push_back(Json{
        {"pano_id", name},
        {"image", image_rel},
        {"width", cfg.pano_width},
        {"height", cfg.pano_height},
        {"capture_date", cfg.capture_date},
        {"pose", Json{{"position", pose.position},
                      {"heading", pose.heading_deg},
                      {"pitch", pose.pitch_deg},
                      {"roll", pose.roll_deg}}},
        {"neighbors", neighbors},
        {"planes", planes},
        {"transform", Json{{"rotation", pano.record.transform.rotation},
                           {"translation", pano.record.transform.translation}}},
        {"assoc", assoc_rel}});
  }

  Json footprint = Json::array();
  for (const Vec3& p : building.footprint) footprint.push_back(p);
  const Json manifest{
      {"dataset_id", building_id},
      {"frame_origin", "synthetic local frame, meters, z-up"},
      {"assoc_size", Json::array({cfg.assoc_cols, cfg.assoc_rows})},
      {"footprint", footprint},
      {"panos", panos}};
  write_json_file(manifest, out_dir / "dataset.json");
  write_json_file(ground_truth_to_json(building_ground_truth(building, building_id)),
                  out_dir / "ground_truth.json");
  write_json_file(building_to_json(building), out_dir / "scene.json");
}

}  // namespace facade3d

#include "facade3d/ortho.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "facade3d/image_io.hpp"
#include "facade3d/json_util.hpp"
#include "facade3d/util.hpp"

namespace facade3d {

namespace {

constexpr double kCoplanarTolM = 0.2;

struct Extent2 {
  double lo_u = 0, hi_u = 0, lo_v = 0, hi_v = 0;
};

Extent2 segment_extent(const std::vector<Vec2>& uv, const OrthoOptions& opts) {
  Extent2 e;
  if (opts.extent == ExtentMode::kMinMax) {
    e.lo_u = e.hi_u = uv.front().x;
    e.lo_v = e.hi_v = uv.front().y;
    for (const Vec2& p : uv) {
      e.lo_u = std::min(e.lo_u, p.x);
      e.hi_u = std::max(e.hi_u, p.x);
      e.lo_v = std::min(e.lo_v, p.y);
      e.hi_v = std::max(e.hi_v, p.y);
    }
  } else {
    std::vector<double> us, vs;
    us.reserve(uv.size());
    vs.reserve(uv.size());
    for (const Vec2& p : uv) {
      us.push_back(p.x);
      vs.push_back(p.y);
    }
    e.lo_u = percentile(us, opts.percentile_lo);
    e.hi_u = percentile(us, opts.percentile_hi);
    e.lo_v = percentile(vs, opts.percentile_lo);
    e.hi_v = percentile(std::move(vs), opts.percentile_hi);
  }
  e.lo_u -= opts.extent_pad_m;
  e.hi_u += opts.extent_pad_m;
  e.lo_v -= opts.extent_pad_m;
  e.hi_v += opts.extent_pad_m;
  return e;
}

}  // namespace

OrthoImage ortho_from_pano(const PanoRecord& pano, const ImageRGBA& pano_image,
                           const Plane& world_plane,
                           const std::vector<Vec3>& segment_points,
                           double pixel_size, const OrthoOptions& opts) {
  if (segment_points.empty()) {
    throw EmptySegment("segment has no 3D points");
  }
  if (!(pixel_size > 0.0)) throw DomainError("pixel_size must be positive");

  // Stage 1: plane frame.
  const PlaneBasis basis = plane_basis(world_plane);

  // Stage 2: projected extent and output grid.
  std::vector<Vec2> uv;
  uv.reserve(segment_points.size());
  for (const Vec3& p : segment_points) {
    if (std::abs(world_plane.signed_distance(p)) >= kCoplanarTolM) {
      throw DomainError("segment point off plane by >= 0.2 m");
    }
    uv.push_back(basis.plane_coords(p));
  }
  const Extent2 ext = segment_extent(uv, opts);
  const int out_w = static_cast<int>(std::lround((ext.hi_u - ext.lo_u) / pixel_size));
  const int out_h = static_cast<int>(std::lround((ext.hi_v - ext.lo_v) / pixel_size));
  if (out_w < 2 || out_h < 2) {
    throw DegenerateExtent("ortho extent smaller than 2 px per axis");
  }

  OrthoImage out;
  out.image = ImageRGBA(out_w, out_h, RGBA{0, 0, 0, 0});
  out.pixel_size = pixel_size;
  out.plane = world_plane;
  out.basis = basis;
  out.grid_origin2d = Vec2(ext.lo_u, ext.lo_v);

  // Stage 3: reproject every grid pixel into the panorama and sample.
  const Mat3 rot_t = pano.pose.rotation().transposed();
  const int pano_w = pano_image.width();
  const int pano_h = pano_image.height();
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Vec2 p2d(ext.lo_u + (x + 0.5) * pixel_size,
                     ext.lo_v + (y + 0.5) * pixel_size);
      const Vec3 world = basis.world_point(p2d);
      const Vec3 rel = world - pano.pose.position;
      if (!(rel.squared_norm() > 1e-24)) continue;
      const Vec2 px = pixel_from_local_dir(rot_t * rel, pano_w, pano_h);
      if (!(px.x >= 0.0 && px.x < pano_w && px.y >= 0.0 && px.y <= pano_h)) {
        continue;  // stays background
      }
      RGBA c = (opts.sampling == SampleMode::kBilinear)
                   ? sample_bilinear(pano_image, px.x, px.y, /*wrap_x=*/true)
                   : sample_nearest(pano_image, px.x, px.y, /*wrap_x=*/true);
      c.a = 255;
      out.image.at(x, y) = c;
    }
  }
  return out;
}

std::vector<Vec3> segment_points_3d(const PanoRecord& rec, int plane_idx) {
  std::vector<Vec3> points;
  if (plane_idx < 0 || plane_idx >= static_cast<int>(rec.planes.size())) {
    throw DomainError("plane index out of range");
  }
  const PlaneRecord& pr = rec.planes[plane_idx];
  if (pr.is_zero()) return points;
  const Plane world = transform_plane(pr.to_plane(), rec.transform);

  const Mat3 rot = rec.pose.rotation();
  const int cols = rec.assoc.cols;
  const int rows = rec.assoc.rows;
  // Iterate association cells, then the block of full-resolution pixels each
  // cell covers; boundaries follow plane_for_pixel's floor mapping.
  for (int row = 0; row < rows; ++row) {
    const int y0 = static_cast<int>(std::ceil(static_cast<double>(row) * rec.height / rows));
    const int y1 = static_cast<int>(std::ceil(static_cast<double>(row + 1) * rec.height / rows));
    for (int col = 0; col < cols; ++col) {
      if (rec.assoc.at(col, row) != plane_idx) continue;
      const int x0 = static_cast<int>(std::ceil(static_cast<double>(col) * rec.width / cols));
      const int x1 = static_cast<int>(std::ceil(static_cast<double>(col + 1) * rec.width / cols));
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const Vec3 dir =
              rot * local_dir_from_pixel(x + 0.5, y + 0.5, rec.width, rec.height);
          if (auto t = ray_plane_t(rec.pose.position, dir, world)) {
            points.push_back(rec.pose.position + dir * *t);
          }
        }
      }
    }
  }
  return points;
}

SegmentOrthoSet ortho_per_segment(const std::vector<PlaneCluster>& clusters,
                                  const std::vector<PanoRecord>& panos,
                                  double pixel_size, const OrthoOptions& opts,
                                  const PanoImageProvider& provider,
                                  int num_threads) {
  std::map<std::string, const PanoRecord*> by_id;
  for (const PanoRecord& rec : panos) by_id[rec.pano_id] = &rec;

  PanoImageProvider load = provider;
  if (!load) {
    load = [](const PanoRecord& rec) {
      return std::make_shared<const ImageRGBA>(load_pano_image(rec));
    };
  }

  struct Task {
    SegmentRef ref;
    int cluster_id;
    const PanoRecord* pano;
  };
  std::vector<Task> tasks;
  for (const PlaneCluster& cl : clusters) {
    for (const SegmentRef& ref : cl.members) {
      auto it = by_id.find(ref.pano_id);
      if (it == by_id.end()) {
        throw InvariantViolation("cluster references unknown pano '" +
                                 ref.pano_id + "'");
      }
      tasks.push_back(Task{ref, cl.cluster_id, it->second});
    }
  }

  // Load each pano image once, up front; the per-segment loop can then run
  // in parallel without touching shared caches.
  std::map<std::string, std::shared_ptr<const ImageRGBA>> images;
  for (const Task& t : tasks) {
    if (!images.count(t.ref.pano_id)) images[t.ref.pano_id] = load(*t.pano);
  }

  std::vector<std::optional<SegmentOrtho>> results(tasks.size());
  parallel_for(0, static_cast<int>(tasks.size()), num_threads, [&](int i) {
    const Task& t = tasks[i];
    const std::vector<Vec3> points = segment_points_3d(*t.pano, t.ref.plane_idx);
    if (points.empty()) return;  // skipped, per-segment continue
    const PlaneRecord& pr = t.pano->planes[t.ref.plane_idx];
    const Plane world = transform_plane(pr.to_plane(), t.pano->transform);
    SegmentOrtho seg;
    seg.ref = t.ref;
    seg.cluster_id = t.cluster_id;
    seg.image = ortho_from_pano(*t.pano, *images.at(t.ref.pano_id), world,
                                points, pixel_size, opts);
    seg.image.source_id = t.ref.id();
    results[i] = std::move(seg);
  });

  SegmentOrthoSet out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i]) {
      out.images.push_back(std::move(*results[i]));
    } else {
      out.skipped.push_back(tasks[i].ref);
    }
  }
  return out;
}

OrthoImage ortho_from_volume(const RayColorOracle& oracle,
                             const std::array<Vec3, 3>& corners,
                             double pixel_size, int samples_per_pixel,
                             int num_threads) {
  if (!(pixel_size > 0.0)) throw DomainError("pixel_size must be positive");
  const Vec3 u_edge = corners[1] - corners[0];
  const Vec3 v_edge = corners[2] - corners[0];
  const double u_len = u_edge.norm();
  const double v_len = v_edge.norm();
  if (u_len < 2.0 * pixel_size || v_len < 2.0 * pixel_size) {
    throw DegenerateExtent("facade corners span less than 2 px per axis");
  }
  const double cos_angle = u_edge.dot(v_edge) / (u_len * v_len);
  if (std::abs(cos_angle) > std::sin(deg2rad(2.0))) {
    throw DegenerateExtent("facade corner axes deviate from orthogonal by > 2 deg");
  }

  const UnitVec3 u_hat = UnitVec3::normalized(u_edge);
  const UnitVec3 v_hat = UnitVec3::normalized(v_edge);
  const UnitVec3 n_hat = UnitVec3::normalized(u_hat.cross(v_hat));

  const int out_w = static_cast<int>(std::lround(u_len / pixel_size));
  const int out_h = static_cast<int>(std::lround(v_len / pixel_size));

  OrthoImage out;
  out.image = ImageRGBA(out_w, out_h, RGBA{0, 0, 0, 255});
  out.pixel_size = pixel_size;
  out.plane = Plane(n_hat, n_hat.dot(corners[0]));
  out.basis.u = u_hat;
  out.basis.v = v_hat;
  out.basis.n = n_hat;
  out.basis.origin3d = n_hat.vec() * out.plane.d;
  out.grid_origin2d = Vec2(u_hat.dot(corners[0]), v_hat.dot(corners[0]));
  out.source_id = "volume";

  const Vec3 v0 = corners[0];
  parallel_for(0, out_h, num_threads, [&](int y) {
    for (int x = 0; x < out_w; ++x) {
      const Vec3 p = v0 + u_hat.vec() * (x * pixel_size) +
                     v_hat.vec() * (y * pixel_size);
      RGBA c = oracle.query(p, n_hat, samples_per_pixel);
      c.a = 255;
      out.image.at(x, y) = c;
    }
  });
  return out;
}

void save_ortho_image(const OrthoImage& img, const std::filesystem::path& stem) {
  std::filesystem::path png = stem;
  png += ".png";
  save_image_png(img.image, png);

  Json side{{"width", img.width()},
            {"height", img.height()},
            {"pixel_size", img.pixel_size},
            {"plane", img.plane},
            {"basis", img.basis},
            {"grid_origin2d", img.grid_origin2d},
            {"source_id", img.source_id}};
  std::filesystem::path js = stem;
  js += ".json";
  write_json_file(side, js);
}

OrthoImage load_ortho_image(const std::filesystem::path& stem) {
  std::filesystem::path png = stem;
  png += ".png";
  std::filesystem::path js = stem;
  js += ".json";
  const Json side = load_json_file(js);

  OrthoImage img;
  img.image = load_image_rgba(png);
  img.pixel_size = require_field(side, "pixel_size", stem.string()).get<double>();
  img.plane = require_field(side, "plane", stem.string()).get<Plane>();
  img.basis = require_field(side, "basis", stem.string()).get<PlaneBasis>();
  img.grid_origin2d =
      require_field(side, "grid_origin2d", stem.string()).get<Vec2>();
  img.source_id = require_field(side, "source_id", stem.string()).get<std::string>();
  if (img.width() != side.at("width").get<int>() ||
      img.height() != side.at("height").get<int>()) {
    throw InvariantViolation("ortho sidecar/png size mismatch at " + stem.string());
  }
  return img;
}

}  // namespace facade3d

#include "facade3d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "facade3d/util.hpp"

namespace facade3d {

Mat3 Mat3::rotation_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r.m = {1, 0, 0, 0, c, -s, 0, s, c};
  return r;
}

Mat3 Mat3::rotation_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
  return r;
}

Mat3 Mat3::rotation_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return r;
}

Mat3 Mat3::from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
  Mat3 r;
  r.m = {c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z};
  return r;
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

double Mat3::det() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) -
         m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

bool Mat3::is_rotation(double tol) const {
  const Mat3 t = transposed();
  const Mat3 p = (*this) * t;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double expect = (i == j) ? 1.0 : 0.0;
      if (std::abs(p(i, j) - expect) > tol) return false;
    }
  }
  return std::abs(det() - 1.0) <= tol;
}

Mat3 PanoPose::rotation() const {
  return Mat3::rotation_z(-deg2rad(heading_deg)) *
         Mat3::rotation_x(deg2rad(pitch_deg)) *
         Mat3::rotation_y(deg2rad(roll_deg));
}

void PanoPose::validate() const {
  if (!position.finite()) throw InvariantViolation("pose position not finite");
  if (!(heading_deg >= 0.0 && heading_deg < 360.0)) {
    throw InvariantViolation("heading out of [0,360): " +
                             std::to_string(heading_deg));
  }
  if (!(pitch_deg >= -90.0 && pitch_deg <= 90.0)) {
    throw InvariantViolation("pitch out of [-90,90]: " +
                             std::to_string(pitch_deg));
  }
  if (!(roll_deg >= -180.0 && roll_deg <= 180.0)) {
    throw InvariantViolation("roll out of [-180,180]: " +
                             std::to_string(roll_deg));
  }
}

void RigidTransform::validate() const {
  if (!rotation.is_rotation(1e-9)) {
    throw InvariantViolation("transform rotation not orthonormal with det +1");
  }
  if (!translation.finite()) {
    throw InvariantViolation("transform translation not finite");
  }
}

Vec3 local_dir_from_pixel(double x, double y, int width, int height) {
  const double theta = 2.0 * kPi * (x / width) - kPi;
  const double phi = kPi / 2.0 - kPi * (y / height);
  const double cp = std::cos(phi);
  return {std::sin(theta) * cp, std::cos(theta) * cp, std::sin(phi)};
}

Vec2 pixel_from_local_dir(const Vec3& d_local, int width, int height) {
  // atan2(0, 0) = 0 resolves the zenith/nadir column to width/2.
  const double theta = std::atan2(d_local.x, d_local.y);
  const double xy = std::hypot(d_local.x, d_local.y);
  const double phi = std::atan2(d_local.z, xy);
  double x = (theta + kPi) / (2.0 * kPi) * width;
  if (x >= width) x -= width;
  const double y = (kPi / 2.0 - phi) / kPi * height;
  return {x, y};
}

UnitVec3 pixel_to_dir(double x, double y, int width, int height,
                      const PanoPose& pose) {
  if (width <= 0 || height <= 0) throw DomainError("non-positive pano size");
  if (!(x >= 0.0 && x < width && y >= 0.0 && y < height)) {
    throw DomainError("pixel (" + std::to_string(x) + "," + std::to_string(y) +
                      ") outside " + std::to_string(width) + "x" +
                      std::to_string(height) + " panorama");
  }
  const Vec3 local = local_dir_from_pixel(x, y, width, height);
  return UnitVec3::normalized(pose.rotation() * local);
}

std::optional<double> ray_plane_t(const Vec3& origin, const Vec3& dir,
                                  const Plane& plane, double eps) {
  const double denom = plane.normal.dot(dir);
  if (std::abs(denom) < eps) return std::nullopt;
  const double t = (plane.d - plane.normal.dot(origin)) / denom;
  if (t <= 0.0) return std::nullopt;
  return t;
}

Vec3 ray_plane_intersect(const Vec3& origin, const UnitVec3& dir,
                         const Plane& plane) {
  const double denom = plane.normal.dot(dir);
  if (std::abs(denom) < 1e-9) {
    throw ParallelRay("ray parallel to plane (n.dir = " +
                      std::to_string(denom) + ")");
  }
  const double t = (plane.d - plane.normal.dot(origin)) / denom;
  if (t <= 0.0) {
    throw BehindCamera("plane hit behind ray origin (t = " +
                       std::to_string(t) + ")");
  }
  return origin + dir.vec() * t;
}

Vec2 project_world_to_pano(const Vec3& p, const PanoPose& pose, int width,
                           int height) {
  const Vec3 rel = p - pose.position;
  if (!(rel.norm() > 1e-12)) {
    throw DegenerateRay("point coincides with camera center");
  }
  const Vec3 d_local = pose.rotation().transposed() * rel;
  return pixel_from_local_dir(d_local, width, height);
}

Plane transform_plane(const Plane& local, const RigidTransform& t) {
  const UnitVec3 n = UnitVec3::normalized(t.rotation * local.normal.vec());
  return Plane(n, local.d + n.dot(t.translation));
}

PlaneBasis plane_basis(const Plane& plane) {
  const Vec3 n = plane.normal.vec();
  Vec3 u_raw;
  if (std::abs(n.z) < 0.99) {
    u_raw = n.cross({0.0, 0.0, 1.0});
  } else {
    u_raw = {1.0, 0.0, 0.0};
  }
  UnitVec3 u = UnitVec3::normalized(u_raw);
  UnitVec3 v = UnitVec3::normalized(n.cross(u));
  if (v.z() < 0.0) {
    // Flip both axes so u x v = n stays right-handed while v points up.
    u = -u;
    v = -v;
  }
  PlaneBasis basis;
  basis.u = u;
  basis.v = v;
  basis.n = plane.normal;
  basis.origin3d = n * plane.d;
  return basis;
}

ScaleEstimate estimate_scale_from_triangle(
    const std::array<Vec3, 3>& recon_positions,
    const std::array<double, 3>& measured_lengths) {
  std::array<double, 3> ratios{};
  for (int i = 0; i < 3; ++i) {
    if (!(measured_lengths[i] > 0.0)) {
      throw DomainError("measured side length must be positive");
    }
    // Side i is opposite vertex i.
    const Vec3 a = recon_positions[(i + 1) % 3];
    const Vec3 b = recon_positions[(i + 2) % 3];
    const double recon_len = (a - b).norm();
    if (recon_len < 1e-9) {
      throw DegenerateTriangle("reconstructed side " + std::to_string(i) +
                               " collapses");
    }
    ratios[i] = measured_lengths[i] / recon_len;
  }
  ScaleEstimate est;
  est.scale = (ratios[0] + ratios[1] + ratios[2]) / 3.0;
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  est.relative_spread = (*hi - *lo) / est.scale;
  return est;
}

}  // namespace facade3d

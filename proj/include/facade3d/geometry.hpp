#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "facade3d/errors.hpp"

namespace facade3d {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double px, double py, double pz) : x(px), y(py), z(pz) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

struct Vec2 {
  double x = 0.0, y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double px, double py) : x(px), y(py) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

/// Axis-aligned 2D box, (x0, y0) inclusive-low / (x1, y1) exclusive-high by
/// convention; used both for pixel bboxes and metric in-plane rectangles.
struct Box2 {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return valid() ? width() * height() : 0.0; }
  bool valid() const { return x1 > x0 && y1 > y0; }
  Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  bool contains(const Vec2& p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  bool operator==(const Box2& o) const {
    return x0 == o.x0 && y0 == o.y0 && x1 == o.x1 && y1 == o.y1;
  }
};

/// Direction vector with |v| = 1 enforced at construction.
class UnitVec3 {
 public:
  UnitVec3() : v_(1.0, 0.0, 0.0) {}

  /// Normalizes v; throws DomainError when |v| is numerically zero.
  static UnitVec3 normalized(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 1e-12) || !v.finite()) {
      throw DomainError("cannot normalize near-zero or non-finite vector");
    }
    return UnitVec3(v / n);
  }

  static std::optional<UnitVec3> try_normalized(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 1e-12) || !v.finite()) return std::nullopt;
    return UnitVec3(v / n);
  }

  /// Adopts v verbatim after checking |v| = 1 within 1e-9; keeps values
  /// bit-exact across serialization round trips.
  static UnitVec3 assume_unit(const Vec3& v) {
    if (std::abs(v.norm() - 1.0) > 1e-9) {
      throw InvariantViolation("vector is not unit length");
    }
    return UnitVec3(v);
  }

  double x() const { return v_.x; }
  double y() const { return v_.y; }
  double z() const { return v_.z; }
  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }
  UnitVec3 operator-() const { return UnitVec3(-v_); }
  double dot(const Vec3& o) const { return v_.dot(o); }
  Vec3 cross(const Vec3& o) const { return v_.cross(o); }

 private:
  explicit UnitVec3(const Vec3& v) : v_(v) {}
  Vec3 v_;
};

/// Plane n·p = d with unit normal; d is the signed offset in meters.
struct Plane {
  UnitVec3 normal;
  double d = 0.0;

  Plane() = default;
  Plane(const UnitVec3& n, double offset) : normal(n), d(offset) {}

  /// Builds from raw [a, b, c, d] coefficients, normalizing to a unit normal.
  static Plane from_coefficients(double a, double b, double c, double dd) {
    const Vec3 raw(a, b, c);
    const double n = raw.norm();
    if (!(n > 1e-12)) throw DomainError("plane with zero normal");
    return Plane(UnitVec3::normalized(raw), dd / n);
  }

  double signed_distance(const Vec3& p) const { return normal.dot(p) - d; }
};

/// Row-major 3x3 matrix; only what the pipeline needs.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return Mat3{}; }
  static Mat3 rotation_x(double rad);
  static Mat3 rotation_y(double rad);
  static Mat3 rotation_z(double rad);
  static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2);

  double operator()(int r, int c) const { return m[r * 3 + c]; }
  double& operator()(int r, int c) { return m[r * 3 + c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
  double det() const;
  /// True when columns are orthonormal and det = +1 within tol.
  bool is_rotation(double tol = 1e-9) const;
};

/// Panorama pose: world position plus heading/pitch/roll in degrees.
/// Heading 0 looks along +y and increases clockwise seen from above
/// (compass-style); pitch raises the view toward zenith; roll tilts about
/// the forward axis. rotation() composes heading->pitch->roll intrinsically
/// (about z, then the rotated x', then the rotated y'').
struct PanoPose {
  Vec3 position;
  double heading_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;

  Mat3 rotation() const;

  /// Validates heading in [0,360), pitch in [-90,90], roll in [-180,180].
  void validate() const;
};

/// Orthonormal in-plane frame: u and v span the plane, n is the normal,
/// u x v = n, and v points "up" (v_z >= 0) unless the plane is horizontal.
struct PlaneBasis {
  UnitVec3 u, v, n;
  Vec3 origin3d;

  Vec2 plane_coords(const Vec3& p) const {
    const Vec3 rel = p - origin3d;
    return {u.dot(rel), v.dot(rel)};
  }
  Vec3 world_point(const Vec2& c) const {
    return origin3d + u.vec() * c.x + v.vec() * c.y;
  }
};

struct RigidTransform {
  Mat3 rotation = Mat3::identity();
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// Throws InvariantViolation unless rotation is orthonormal with det +1.
  void validate() const;
};

/// Result of the reference-triangle scale calibration: the scale factor plus
/// the relative spread of the three per-side ratios as a quality signal.
struct ScaleEstimate {
  double scale = 1.0;
  double relative_spread = 0.0;
};

// --- Equirectangular panorama mapping -------------------------------------
//
// Convention (fixed for the whole artifact): the azimuth is
// theta = 2*pi*(x/width) - pi, measured about +z starting from the heading
// direction (x = width/2 looks along the heading); the elevation is
// phi = pi/2 - pi*(y/height) (y = 0 is the zenith). Spherical-to-Cartesian
// happens in the pose-local frame and the pose rotation is applied last.

/// Pose-local direction for a pixel; unit by construction.
Vec3 local_dir_from_pixel(double x, double y, int width, int height);

/// Continuous pixel coordinates of a pose-local direction. The zenith/nadir
/// column ambiguity resolves to x = width/2.
Vec2 pixel_from_local_dir(const Vec3& d_local, int width, int height);

/// World-frame unit direction of the ray through pano pixel (x, y).
/// Throws DomainError for out-of-range pixels.
UnitVec3 pixel_to_dir(double x, double y, int width, int height,
                      const PanoPose& pose);

/// Forward ray/plane intersection parameter t, or nullopt when the ray is
/// parallel (|n.dir| < eps) or the hit is behind the origin (t <= 0).
std::optional<double> ray_plane_t(const Vec3& origin, const Vec3& dir,
                                  const Plane& plane, double eps = 1e-9);

/// Forward ray/plane intersection point; throws ParallelRay / BehindCamera.
Vec3 ray_plane_intersect(const Vec3& origin, const UnitVec3& dir,
                         const Plane& plane);

/// Projects a world point into the panorama; exact inverse of pixel_to_dir
/// composed with the ray through p. Throws DegenerateRay when p coincides
/// with the camera center.
Vec2 project_world_to_pano(const Vec3& p, const PanoPose& pose, int width,
                           int height);

/// Applies a local-to-world rigid transform to a plane:
/// n' = R n, d' = d + n'.t.
Plane transform_plane(const Plane& local, const RigidTransform& t);

/// In-plane frame for a plane: u = normalize(n x z) when |n_z| < 0.99 else
/// (1,0,0); v = n x u, with (u, v) jointly sign-flipped so v_z >= 0.
/// origin3d is the plane point closest to the world origin (d * n).
PlaneBasis plane_basis(const Plane& plane);

/// Scale factor from a reconstructed reference triangle and tape-measured
/// side lengths; measured_lengths[i] is the side opposite vertex i. Returns
/// the mean of the three measured/reconstructed ratios. Throws
/// DegenerateTriangle when a reconstructed side collapses; DomainError for
/// non-positive measured lengths.
ScaleEstimate estimate_scale_from_triangle(
    const std::array<Vec3, 3>& recon_positions,
    const std::array<double, 3>& measured_lengths);

}  // namespace facade3d

#include "replica_sync/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "replica_sync/errors.hpp"

namespace replica_sync {

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (n == 0.0) throw ConfigError("cannot normalise a zero vector");
  return (1.0 / n) * v;
}

Quat Quat::from_yaw(double radians) {
  return {std::cos(radians / 2.0), 0.0, std::sin(radians / 2.0), 0.0};
}

Quat Quat::look_along(const Vec3& forward) {
  const Vec3 f = normalized(forward);
  const double yaw = std::atan2(f.x, f.z);
  const double pitch = -std::asin(std::clamp(f.y, -1.0, 1.0));
  const Quat q_yaw = from_yaw(yaw);
  const Quat q_pitch{std::cos(pitch / 2.0), std::sin(pitch / 2.0), 0.0, 0.0};
  return q_yaw * q_pitch;
}

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat operator*(const Quat& a, const Quat& b) {
  return {
      a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
  };
}

Vec3 Quat::rotate(const Vec3& v) const {
  const Quat p{0.0, v.x, v.y, v.z};
  const Quat r = (*this) * p * conjugate();
  return {r.x, r.y, r.z};
}

Pose Pose::make(const Vec3& position, const Quat& orientation) {
  const double n = orientation.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ParseError("quaternion has zero or non-finite norm");
  if (std::abs(n - 1.0) <= kUnitTolerance) return {position, orientation};
  return {position, {orientation.w / n, orientation.x / n, orientation.y / n, orientation.z / n}};
}

Pose Pose::compose(const Pose& child) const {
  return make(position + orientation.rotate(child.position), orientation * child.orientation);
}

Pose Pose::inverse() const {
  const Quat inv = orientation.conjugate();
  return {inv.rotate(-1.0 * position), inv};
}

Vec3 Pose::apply(const Vec3& point) const { return position + orientation.rotate(point); }

bool Pose::is_unit() const { return std::abs(orientation.norm() - 1.0) <= kUnitTolerance; }

Mat4 to_matrix(const Pose& pose) {
  const auto& q = pose.orientation;
  Mat4 m{};
  m[0] = {1 - 2 * (q.y * q.y + q.z * q.z), 2 * (q.x * q.y - q.z * q.w), 2 * (q.x * q.z + q.y * q.w), pose.position.x};
  m[1] = {2 * (q.x * q.y + q.z * q.w), 1 - 2 * (q.x * q.x + q.z * q.z), 2 * (q.y * q.z - q.x * q.w), pose.position.y};
  m[2] = {2 * (q.x * q.z - q.y * q.w), 2 * (q.y * q.z + q.x * q.w), 1 - 2 * (q.x * q.x + q.y * q.y), pose.position.z};
  m[3] = {0, 0, 0, 1};
  return m;
}

}  // namespace replica_sync

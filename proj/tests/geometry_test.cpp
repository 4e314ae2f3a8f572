#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "replica_sync/errors.hpp"
#include "replica_sync/geometry.hpp"

using namespace replica_sync;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Rotation matrix straight from the quaternion formula, independent of
// Quat::rotate.
std::array<std::array<double, 3>, 3> rotation(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

Mat4 multiply(const Mat4& a, const Mat4& b) {
  Mat4 c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Pose::make({n(rng), n(rng), n(rng)}, Quat{n(rng), n(rng), n(rng), n(rng)});
}

}  // namespace

TEST(Geometry, MakeNormalisesQuaternion) {
  const Pose p = Pose::make({1, 2, 3}, Quat{2, 0, 0, 0});
  EXPECT_TRUE(p.is_unit());
  EXPECT_DOUBLE_EQ(p.orientation.w, 1.0);
}

TEST(Geometry, ZeroQuaternionIsRejected) { EXPECT_THROW(Pose::make({}, Quat{0, 0, 0, 0}), ParseError); }

TEST(Geometry, ZeroVectorCannotBeNormalised) { EXPECT_THROW(normalized(Vec3{}), ConfigError); }

TEST(Geometry, YawRotatesForwardOntoX) {
  const Vec3 v = Quat::from_yaw(kPi / 2).rotate({0, 0, 1});
  EXPECT_NEAR(v.x, 1.0, 1e-12);
  EXPECT_NEAR(v.y, 0.0, 1e-12);
  EXPECT_NEAR(v.z, 0.0, 1e-12);
}

TEST(Geometry, LookAlongPointsPlusZAtTarget) {
  const Vec3 dir = normalized({1, -2, 0.5});
  const Vec3 v = Quat::look_along(dir).rotate({0, 0, 1});
  EXPECT_NEAR(v.x, dir.x, 1e-12);
  EXPECT_NEAR(v.y, dir.y, 1e-12);
  EXPECT_NEAR(v.z, dir.z, 1e-12);
}

TEST(Geometry, ComposeMatchesMatrixProduct) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Mat4 expected = multiply(to_matrix(a), to_matrix(b));
    const Mat4 got = to_matrix(a.compose(b));
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) ASSERT_NEAR(got[r][c], expected[r][c], 1e-12);
  }
}

TEST(Geometry, ToMatrixUsesQuaternionFormula) {
  std::mt19937_64 rng(5);
  const Pose p = random_pose(rng);
  const auto r = rotation(p.orientation);
  const Mat4 m = to_matrix(p);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(m[i][j], r[i][j], 1e-12);
  }
  EXPECT_DOUBLE_EQ(m[0][3], p.position.x);
  EXPECT_DOUBLE_EQ(m[3][3], 1.0);
}

TEST(Geometry, InverseUndoesCompose) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng);
    const Pose id = a.compose(a.inverse());
    EXPECT_NEAR(norm(id.position), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(id.orientation.w), 1.0, 1e-12);
  }
}

TEST(Geometry, ApplyMatchesComposeTranslation) {
  std::mt19937_64 rng(8);
  const Pose a = random_pose(rng);
  const Vec3 p{0.3, -1.0, 2.0};
  const Vec3 via_compose = a.compose(Pose::make(p, Quat::identity())).position;
  const Vec3 via_apply = a.apply(p);
  EXPECT_NEAR(norm(via_compose - via_apply), 0.0, 1e-12);
}

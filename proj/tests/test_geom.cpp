#include <numbers>
#include <random>

#include "doctest.h"
#include "pointbench/error.hpp"
#include "pointbench/geom.hpp"

using namespace pointbench;

namespace {

Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Quat{g(rng), g(rng), g(rng), g(rng)}.normalized();
}

Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

Skeleton chain3() {
  return Skeleton({{"root", -1, {0, 0, 0}, {}, {}},
                   {"r_elbow", 0, {0, 1, 0}, {}, {}},
                   {"r_hand", 1, {0, 0.5, 0.25}, {}, {}}});
}

}  // namespace

TEST_CASE("angle_between on axis-aligned vectors") {
  CHECK(angle_between({1, 0, 0}, {2, 0, 0}) == doctest::Approx(0.0));
  CHECK(angle_between({1, 0, 0}, {0, 1, 0}) == doctest::Approx(std::numbers::pi / 2));
  CHECK(angle_between({1, 0, 0}, {-1, 0, 0}) == doctest::Approx(std::numbers::pi));
  CHECK_THROWS_AS(angle_between({0, 0, 0}, {1, 0, 0}), DegenerateVector);
  CHECK_THROWS_AS(angle_between({1, 0, 0}, {1e-10, 0, 0}), DegenerateVector);
}

TEST_CASE("angle_between is symmetric and scale invariant") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 u = random_vec(rng), v = random_vec(rng);
    const double a = angle_between(u, v);
    CHECK(a >= 0.0);
    CHECK(a <= std::numbers::pi);
    CHECK(angle_between(v, u) == doctest::Approx(a).epsilon(1e-12));
    CHECK(angle_between(pos(rng) * u, pos(rng) * v) == doctest::Approx(a).epsilon(1e-9));
  }
}

TEST_CASE("quaternion helpers") {
  const Quat q = Quat::from_axis_angle({0, 0, 1}, std::numbers::pi / 2);
  const Vec3 r = q.rotate({1, 0, 0});
  CHECK(r.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.y == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Quat a = random_rotation(rng);
    // from_basis reproduces the rotation (up to the double cover).
    const Quat b = Quat::from_basis(a.rotate({1, 0, 0}), a.rotate({0, 1, 0}), a.rotate({0, 0, 1}));
    CHECK(geodesic_angle(a, b) < 1e-7);
    CHECK(b.w >= 0.0);
    const Quat c = Quat::from_rotation_vector(a.to_rotation_vector());
    CHECK(geodesic_angle(a, c) < 1e-7);
    CHECK(geodesic_angle(a, Quat{-a.w, -a.x, -a.y, -a.z}) < 1e-7);
  }
  CHECK(geodesic_angle(Quat::identity(), Quat::from_axis_angle({0, 1, 0}, 0.3)) == doctest::Approx(0.3));
}

TEST_CASE("skeleton validation and arm designation") {
  CHECK_THROWS_AS(Skeleton({{"a", 0, {}, {}, {}}}), Error);
  CHECK_THROWS_AS(Skeleton({{"a", -1, {}, {}, {}}, {"b", -1, {}, {}, {}}}), Error);
  CHECK_THROWS_AS(Skeleton({{"a", -1, {}, {}, {}}, {"b", 2, {}, {}, {}}, {"c", 0, {}, {}, {}}}), Error);

  const Skeleton s = chain3();
  CHECK(s.has_arm(Side::Right));
  CHECK_FALSE(s.has_arm(Side::Left));
  CHECK(s.arm(Side::Right) == ArmJoints{0, 1, 2});
  CHECK_THROWS_AS(s.arm(Side::Left), Error);

  const Skeleton mixamo({{"Hips", -1, {}, {}, {}},
                         {"mixamorig:LeftArm", 0, {}, {}, {}},
                         {"mixamorig:LeftForeArm", 1, {}, {}, {}},
                         {"mixamorig:LeftHand", 2, {}, {}, {}}});
  CHECK(mixamo.arm(Side::Left) == ArmJoints{1, 2, 3});
}

TEST_CASE("forward kinematics") {
  const Skeleton s = chain3();
  SUBCASE("identity rotations sum offsets") {
    const auto p = forward_kinematics(s, rest_pose(s));
    CHECK(p[1] == Vec3{0, 1, 0});
    CHECK(p[2] == Vec3{0, 1.5, 0.25});
  }
  SUBCASE("parent rotated 90 degrees about z") {
    const Skeleton two({{"root", -1, {}, {}, {}}, {"child", 0, {0, 1, 0}, {}, {}}});
    Pose pose = rest_pose(two);
    pose.rotations[0] = Quat::from_axis_angle({0, 0, 1}, std::numbers::pi / 2);
    const auto p = forward_kinematics(two, pose);
    CHECK(p[1].x == doctest::Approx(-1.0));
    CHECK(p[1].y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p[1].z == doctest::Approx(0.0));
  }
  SUBCASE("root translation shifts every joint") {
    const Vec3 t{0.3, -2.0, 5.0};
    const auto a = forward_kinematics(s, rest_pose(s));
    const auto b = forward_kinematics(s, rest_pose(s, t));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(distance(b[i], a[i] + t) < 1e-12);
  }
  SUBCASE("bone lengths are preserved for random poses") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      Pose pose = rest_pose(s, random_vec(rng, 3.0));
      for (auto& q : pose.rotations) q = random_rotation(rng);
      const auto p = forward_kinematics(s, pose);
      for (std::size_t j = 1; j < s.size(); ++j) {
        const auto parent = static_cast<std::size_t>(s.joints()[j].parent);
        CHECK(std::abs(distance(p[j], p[parent]) - norm(s.joints()[j].offset)) < 1e-9);
      }
    }
  }
  SUBCASE("pose size mismatch") {
    Pose pose = rest_pose(s);
    pose.rotations.pop_back();
    CHECK_THROWS_AS(forward_kinematics(s, pose), SkeletonMismatch);
  }
}

TEST_CASE("finite differences") {
  const std::vector<double> ramp{0, 1, 2, 3};
  CHECK(finite_difference(ramp, 1.0, 1) == std::vector<double>{1, 1, 1});
  CHECK(finite_difference(ramp, 1.0, 2) == std::vector<double>{0, 0});

  const std::vector<double> constant(10, 4.2);
  for (int order = 1; order <= 3; ++order) {
    const auto d = finite_difference(constant, 0.1, order);
    CHECK(d.size() == 10u - static_cast<std::size_t>(order));
    for (double v : d) CHECK(v == 0.0);
  }

  // sin sampled at dt = 1e-3 differentiates to cos within the forward-difference truncation error.
  const double dt = 1e-3;
  std::vector<double> s;
  for (int i = 0; i <= 6283; ++i) s.push_back(std::sin(i * dt));
  const auto d = finite_difference(s, dt, 1);
  double sup = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) sup = std::max(sup, std::abs(d[i] - std::cos(static_cast<double>(i) * dt)));
  CHECK(sup < 1e-3);

  CHECK_THROWS_AS(finite_difference(std::vector<double>{1, 2, 3}, 1.0, 3), SeriesTooShort);
  CHECK_THROWS_AS(finite_difference(ramp, 0.0, 1), Error);
}

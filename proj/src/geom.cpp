#include "pointbench/geom.hpp"

#include <algorithm>
#include <cctype>

#include "pointbench/error.hpp"

namespace pointbench {

Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (!(n > kDegenerateEps)) throw DegenerateVector("vector norm below tolerance");
  return v / n;
}

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = pointbench::normalized(axis);
  const double h = 0.5 * angle;
  const double s = std::sin(h);
  return {std::cos(h), a.x * s, a.y * s, a.z * s};
}

Quat Quat::from_rotation_vector(const Vec3& v) {
  const double angle = pointbench::norm(v);
  if (angle < 1e-300) return identity();
  return from_axis_angle(v / angle, angle);
}

Quat Quat::from_basis(const Vec3& cx, const Vec3& cy, const Vec3& cz) {
  // Shepperd's method on the matrix [cx cy cz].
  const double m00 = cx.x, m10 = cx.y, m20 = cx.z;
  const double m01 = cy.x, m11 = cy.y, m21 = cy.z;
  const double m02 = cz.x, m12 = cz.y, m22 = cz.z;
  const double trace = m00 + m11 + m22;
  Quat q;
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
  } else if (m00 > m11 && m00 > m22) {
    const double s = 2.0 * std::sqrt(1.0 + m00 - m11 - m22);
    q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
  } else if (m11 > m22) {
    const double s = 2.0 * std::sqrt(1.0 + m11 - m00 - m22);
    q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m22 - m00 - m11);
    q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
  }
  return q.normalized().canonical();
}

Quat Quat::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) throw DegenerateVector("zero quaternion");
  return {w / n, x / n, y / n, z / n};
}

Quat Quat::canonical() const {
  if (w < 0.0) return {-w, -x, -y, -z};
  return *this;
}

Vec3 Quat::rotate(const Vec3& v) const {
  const Vec3 u{x, y, z};
  const Vec3 t = 2.0 * cross(u, v);
  return v + w * t + cross(u, t);
}

Vec3 Quat::to_rotation_vector() const {
  const Quat q = canonical();
  const Vec3 u{q.x, q.y, q.z};
  const double s = pointbench::norm(u);
  if (s < 1e-300) return {};
  const double angle = 2.0 * std::atan2(s, q.w);
  return u * (angle / s);
}

Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

double geodesic_angle(const Quat& a, const Quat& b) {
  const Quat rel = a.conjugate() * b;
  const double s = std::sqrt(rel.x * rel.x + rel.y * rel.y + rel.z * rel.z);
  return 2.0 * std::atan2(s, std::abs(rel.w));
}

std::string_view side_name(Side s) { return s == Side::Left ? "left" : "right"; }

Side parse_side(std::string_view text) {
  if (text == "left" || text == "Left" || text == "L") return Side::Left;
  if (text == "right" || text == "Right" || text == "R") return Side::Right;
  throw Error("unknown hand '" + std::string(text) + "'");
}

std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::Xposition: return "Xposition";
    case Channel::Yposition: return "Yposition";
    case Channel::Zposition: return "Zposition";
    case Channel::Xrotation: return "Xrotation";
    case Channel::Yrotation: return "Yrotation";
    case Channel::Zrotation: return "Zrotation";
  }
  return "";
}

std::optional<Channel> parse_channel(std::string_view text) {
  for (Channel c : {Channel::Xposition, Channel::Yposition, Channel::Zposition, Channel::Xrotation,
                    Channel::Yrotation, Channel::Zrotation}) {
    if (text == channel_name(c)) return c;
  }
  return std::nullopt;
}

namespace {

enum class ArmRole { None, Elbow, Hand };

std::string squash(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

ArmRole role_of(std::string_view rest) {
  if (rest == "forearm" || rest == "elbow" || rest == "lowerarm") return ArmRole::Elbow;
  if (rest == "hand" || rest == "wrist") return ArmRole::Hand;
  return ArmRole::None;
}

// Recognises "LeftForeArm", "mixamorig:RightHand", "l_elbow", "r_hand", "LeftHand".
std::optional<std::pair<Side, ArmRole>> classify_name(std::string_view name) {
  const std::string s = squash(name);
  for (auto [token, side] : {std::pair{"left", Side::Left}, std::pair{"right", Side::Right}}) {
    const auto pos = s.find(token);
    if (pos != std::string::npos) {
      const ArmRole role = role_of(std::string_view(s).substr(pos + std::string_view(token).size()));
      if (role != ArmRole::None) return std::pair{side, role};
    }
  }
  if (s.size() > 1 && (s[0] == 'l' || s[0] == 'r')) {
    const ArmRole role = role_of(std::string_view(s).substr(1));
    if (role != ArmRole::None) return std::pair{s[0] == 'l' ? Side::Left : Side::Right, role};
  }
  return std::nullopt;
}

}  // namespace

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints)) {
  if (joints_.empty()) throw Error("skeleton has no joints");
  if (joints_[0].parent != -1) throw Error("joint 0 must be the root");
  for (std::size_t i = 1; i < joints_.size(); ++i) {
    const int p = joints_[i].parent;
    if (p < 0) throw Error("skeleton has more than one root ('" + joints_[i].name + "')");
    if (p >= static_cast<int>(i)) {
      throw Error("joint '" + joints_[i].name + "' is not in topological order");
    }
  }
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const auto cls = classify_name(joints_[i].name);
    if (!cls) continue;
    ArmJoints& arm = arm_[index(cls->first)];
    const int idx = static_cast<int>(i);
    if (cls->second == ArmRole::Elbow && arm.elbow < 0) arm.elbow = idx;
    if (cls->second == ArmRole::Hand && arm.hand < 0) arm.hand = idx;
  }
  for (ArmJoints& arm : arm_) {
    if (arm.elbow > 0 && arm.hand > arm.elbow && joints_[static_cast<std::size_t>(arm.hand)].parent == arm.elbow) {
      arm.shoulder = joints_[static_cast<std::size_t>(arm.elbow)].parent;
    } else {
      arm = ArmJoints{};
    }
  }
}

const ArmJoints& Skeleton::arm(Side s) const {
  if (!has_arm(s)) throw Error("skeleton has no designated " + std::string(side_name(s)) + " arm");
  return arm_[index(s)];
}

void Skeleton::set_arm(Side s, const ArmJoints& j) {
  const int n = static_cast<int>(joints_.size());
  if (!(j.shoulder >= 0 && j.elbow > j.shoulder && j.hand > j.elbow && j.hand < n)) {
    throw Error("invalid arm designation");
  }
  arm_[index(s)] = j;
}

int Skeleton::find(std::string_view name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (joints_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Pose rest_pose(const Skeleton& skel, const Vec3& root) {
  return Pose{root, std::vector<Quat>(skel.size(), Quat::identity())};
}

double angle_between(const Vec3& u, const Vec3& v) {
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > kDegenerateEps) || !(nv > kDegenerateEps)) {
    throw DegenerateVector("angle_between: degenerate vector");
  }
  const double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
  return std::acos(c);
}

namespace {
void check_pose(const Skeleton& skel, const Pose& pose) {
  if (pose.rotations.size() != skel.size()) {
    throw SkeletonMismatch("pose has " + std::to_string(pose.rotations.size()) +
                           " rotations, skeleton has " + std::to_string(skel.size()) + " joints");
  }
}
}  // namespace

std::vector<Quat> world_rotations(const Skeleton& skel, const Pose& pose) {
  check_pose(skel, pose);
  std::vector<Quat> world(skel.size());
  for (std::size_t i = 0; i < skel.size(); ++i) {
    const int p = skel.joints()[i].parent;
    world[i] = p < 0 ? pose.rotations[i] : world[static_cast<std::size_t>(p)] * pose.rotations[i];
  }
  return world;
}

std::vector<Vec3> forward_kinematics(const Skeleton& skel, const Pose& pose) {
  const std::vector<Quat> world = world_rotations(skel, pose);
  std::vector<Vec3> pos(skel.size());
  for (std::size_t i = 0; i < skel.size(); ++i) {
    const Joint& j = skel.joints()[i];
    if (j.parent < 0) {
      pos[i] = pose.root;
    } else {
      const auto p = static_cast<std::size_t>(j.parent);
      pos[i] = pos[p] + world[p].rotate(j.offset);
    }
  }
  return pos;
}

std::vector<double> finite_difference(std::span<const double> series, double dt, int order) {
  if (order < 1 || order > 3) throw Error("finite_difference: order must be 1, 2 or 3");
  if (!(dt > 0.0)) throw Error("finite_difference: dt must be positive");
  if (series.size() <= static_cast<std::size_t>(order)) {
    throw SeriesTooShort("finite_difference: need more than " + std::to_string(order) + " samples");
  }
  std::vector<double> cur(series.begin(), series.end());
  for (int k = 0; k < order; ++k) {
    std::vector<double> next(cur.size() - 1);
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) next[i] = (cur[i + 1] - cur[i]) / dt;
    cur = std::move(next);
  }
  return cur;
}

}  // namespace pointbench

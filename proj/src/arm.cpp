#include "pointbench/arm.hpp"

#include <algorithm>
#include <numbers>

#include "pointbench/error.hpp"

namespace pointbench {

Skeleton standard_skeleton() {
  std::vector<Joint> j;
  j.push_back({"root", -1, {0.0, 0.0, 0.0}, {}, {}});
  j.push_back({"chest", 0, {0.0, 0.45, 0.0}, {}, {}});
  j.push_back({"head", 1, {0.0, 0.25, 0.0}, {}, {}});
  j.push_back({"l_shoulder", 1, {0.18, 0.0, 0.0}, {}, {}});
  j.push_back({"l_elbow", 3, {0.0, -0.30, 0.0}, {}, {}});
  j.push_back({"l_hand", 4, {0.0, -0.28, 0.0}, {}, {}});
  j.push_back({"r_shoulder", 1, {-0.18, 0.0, 0.0}, {}, {}});
  j.push_back({"r_elbow", 6, {0.0, -0.30, 0.0}, {}, {}});
  j.push_back({"r_hand", 7, {0.0, -0.28, 0.0}, {}, {}});
  return Skeleton(std::move(j));
}

namespace {

bool hangs_down(const Vec3& offset) {
  return offset.y < 0.0 && std::abs(offset.x) < 1e-9 * std::abs(offset.y) + 1e-12 &&
         std::abs(offset.z) < 1e-9 * std::abs(offset.y) + 1e-12;
}

// Unit component of v perpendicular to unit u, or nullopt when v is (anti)parallel to u.
std::optional<Vec3> perpendicular(const Vec3& v, const Vec3& u) {
  const Vec3 p = v - u * dot(v, u);
  const double n = norm(p);
  if (n < 1e-9) return std::nullopt;
  return p / n;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

}  // namespace

ArmModel::ArmModel(Skeleton skeleton, Side side, Pose base)
    : skel_(std::move(skeleton)), side_(side), base_(std::move(base)) {
  joints_ = skel_.arm(side_);
  if (base_.rotations.size() != skel_.size()) throw SkeletonMismatch("arm base pose does not match skeleton");
  const Vec3 elbow_off = skel_.joint(joints_.elbow).offset;
  const Vec3 hand_off = skel_.joint(joints_.hand).offset;
  if (!hangs_down(elbow_off) || !hangs_down(hand_off)) {
    throw Error("arm model requires elbow and hand offsets along -Y");
  }
  upper_ = -elbow_off.y;
  fore_ = -hand_off.y;
  if (!(upper_ > fore_)) throw Error("arm model requires the upper arm to be longer than the forearm");
  const auto world = world_rotations(skel_, base_);
  parent_world_ = world[static_cast<std::size_t>(skel_.joint(joints_.shoulder).parent)];
  shoulder_ = forward_kinematics(skel_, base_)[static_cast<std::size_t>(joints_.shoulder)];
}

Quat ArmModel::shoulder_rotation(const ArmAngles& q) const {
  return Quat::from_rotation_vector({q[kSwingX], 0.0, q[kSwingZ]}) *
         Quat::from_axis_angle({0.0, 1.0, 0.0}, q[kTwist]);
}

Quat ArmModel::elbow_rotation(const ArmAngles& q) const {
  return Quat::from_axis_angle({1.0, 0.0, 0.0}, -q[kElbowFlex]);
}

Pose ArmModel::pose(const ArmAngles& q) const {
  Pose p = base_;
  p.rotations[static_cast<std::size_t>(joints_.shoulder)] = shoulder_rotation(q);
  p.rotations[static_cast<std::size_t>(joints_.elbow)] = elbow_rotation(q);
  return p;
}

ArmAngles ArmModel::angles(const Pose& pose) const {
  const Quat s = pose.rotations.at(static_cast<std::size_t>(joints_.shoulder)).canonical();
  const double twist = 2.0 * std::atan2(s.y, s.w);
  const Quat twist_q{std::cos(0.5 * twist), 0.0, std::sin(0.5 * twist), 0.0};
  const Vec3 swing = (s * twist_q.conjugate()).to_rotation_vector();
  const Quat e = pose.rotations.at(static_cast<std::size_t>(joints_.elbow)).canonical();
  const double flex = 2.0 * std::atan2(-e.x, e.w);
  return {swing.x, swing.z, wrap_angle(twist), flex};
}

ArmModel::Points ArmModel::points(const ArmAngles& q) const {
  const Quat rs = parent_world_ * shoulder_rotation(q);
  const Vec3 elbow = shoulder_ + rs.rotate({0.0, -upper_, 0.0});
  const Vec3 hand = elbow + (rs * elbow_rotation(q)).rotate({0.0, -fore_, 0.0});
  return {elbow, hand};
}

ArmAngles ArmModel::solve(const Vec3& hand) const {
  const Vec3 down = parent_world_.rotate({0.0, -1.0, 0.0});
  const Vec3 pole = parent_world_.rotate(Vec3{0.0, -1.0, -1.0} / std::sqrt(2.0));

  Vec3 v = hand - shoulder_;
  double dist = norm(v);
  const Vec3 u = dist > 1e-12 ? v / dist : down;
  dist = std::clamp(dist, upper_ - fore_ + 1e-9, upper_ + fore_);

  const double cos_b = std::clamp((upper_ * upper_ + dist * dist - fore_ * fore_) / (2.0 * upper_ * dist), -1.0, 1.0);
  const double b = std::acos(cos_b);

  Vec3 e1;
  if (auto p = perpendicular(pole, u)) {
    e1 = *p;
  } else if (auto p2 = perpendicular(parent_world_.rotate({0.0, 0.0, -1.0}), u)) {
    e1 = *p2;
  } else {
    e1 = *perpendicular(parent_world_.rotate({1.0, 0.0, 0.0}), u);
  }

  const Vec3 elbow = shoulder_ + upper_ * (std::cos(b) * u + std::sin(b) * e1);
  const Vec3 h = shoulder_ + dist * u;
  const Vec3 a = normalized(elbow - shoulder_);
  const Vec3 f = normalized(h - elbow);
  const double flex = std::acos(std::clamp(dot(a, f), -1.0, 1.0));

  // Hinge plane: the forearm bends from the upper arm toward c_z, away from the elbow's swivel side.
  Vec3 cz;
  if (auto p = perpendicular(-e1, a)) {
    cz = *p;
  } else {
    cz = *perpendicular(parent_world_.rotate({0.0, 0.0, 1.0}), a);
  }
  const Vec3 cy = -a;
  const Vec3 cx = cross(cy, cz);
  const Quat world = Quat::from_basis(cx, cy, cz);
  const Quat local = (parent_world_.conjugate() * world).normalized();

  Pose p = base_;
  p.rotations[static_cast<std::size_t>(joints_.shoulder)] = local;
  p.rotations[static_cast<std::size_t>(joints_.elbow)] = Quat::from_axis_angle({1.0, 0.0, 0.0}, -flex);
  return angles(p);
}

ArmAngles ArmModel::pointing_hold(const Vec3& target, double alignment_error) const {
  const Vec3 w = target - shoulder_;
  const double d = norm(w);
  const PointingShell sh = shell();
  if (!sh.contains(d)) {
    throw Unreachable("target at " + std::to_string(d) + " m from the shoulder is outside [" +
                      std::to_string(sh.min_distance) + ", " + std::to_string(sh.max_distance) + "]");
  }
  if (!(alignment_error >= 0.0 && alignment_error < std::numbers::pi)) {
    throw Error("alignment error must lie in [0, pi)");
  }
  const Vec3 u = w / d;
  const double L = reach();
  // Triangle shoulder-hand-target: the exterior angle at the hand is the alignment error.
  const double tilt = alignment_error - std::asin(std::clamp(L / d * std::sin(alignment_error), -1.0, 1.0));
  Vec3 down_dir;
  if (auto p = perpendicular(parent_world_.rotate({0.0, -1.0, 0.0}), u)) {
    down_dir = *p;
  } else {
    down_dir = *perpendicular(parent_world_.rotate({0.0, 0.0, 1.0}), u);
  }
  const Vec3 f = std::cos(tilt) * u + std::sin(tilt) * down_dir;
  return solve(shoulder_ + L * f);
}

}  // namespace pointbench

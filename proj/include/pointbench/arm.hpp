#pragma once

#include <array>

#include "pointbench/geom.hpp"

namespace pointbench {

/// Generalised coordinates of one arm: shoulder swing (rotation-vector x and z components),
/// shoulder twist about the upper-arm axis, and elbow flexion. Radians.
using ArmAngles = std::array<double, 4>;

enum ArmDof : int { kSwingX = 0, kSwingZ = 1, kTwist = 2, kElbowFlex = 3 };
inline constexpr int kArmDofs = 4;

/// Nine-joint upper-body skeleton (root, chest, head, two three-joint arms hanging along -Y).
Skeleton standard_skeleton();

/// Root position of the standing actor used by the generator and the environment.
inline Vec3 standard_root() { return {0.0, 1.0, 0.0}; }

/// Distance band (from the pointing shoulder) in which targets can be pointed at.
struct PointingShell {
  double min_distance = 0.0;
  double max_distance = 0.0;

  bool contains(double d) const { return d >= min_distance && d <= max_distance; }
};

/// Maps ArmAngles onto a skeleton pose and back, and solves the arm analytically.
/// The arm's rest offsets must hang along -Y in the parent frame.
class ArmModel {
 public:
  ArmModel(Skeleton skeleton, Side side, Pose base);

  const Skeleton& skeleton() const { return skel_; }
  Side side() const { return side_; }
  const ArmJoints& joints() const { return joints_; }
  const Pose& base() const { return base_; }

  Vec3 shoulder() const { return shoulder_; }
  double upper_length() const { return upper_; }
  double forearm_length() const { return fore_; }
  double reach() const { return upper_ + fore_; }
  PointingShell shell() const { return {1.2 * reach(), 1.9 * reach()}; }

  Quat shoulder_rotation(const ArmAngles& q) const;
  Quat elbow_rotation(const ArmAngles& q) const;

  /// Base pose with the arm's shoulder and elbow rotations set from q.
  Pose pose(const ArmAngles& q) const;
  /// Projection of a pose's shoulder/elbow rotations onto the arm coordinates.
  ArmAngles angles(const Pose& pose) const;

  struct Points {
    Vec3 elbow;
    Vec3 hand;
  };
  Points points(const ArmAngles& q) const;

  /// Two-link analytic solution placing the hand at `hand` (clamped to the reachable band).
  /// The elbow swivels toward a down-and-back pole.
  ArmAngles solve(const Vec3& hand) const;

  /// Straight-arm hold pose whose forearm deviates from the hand->target ray by
  /// `alignment_error` radians, tilted downward. Throws Unreachable outside the shell.
  ArmAngles pointing_hold(const Vec3& target, double alignment_error) const;

 private:
  Skeleton skel_;
  Side side_;
  ArmJoints joints_;
  Pose base_;
  Quat parent_world_;
  Vec3 shoulder_;
  double upper_ = 0.0;
  double fore_ = 0.0;
};

}  // namespace pointbench

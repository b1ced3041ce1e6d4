#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pointbench {

// World frame: Y up, the actor faces +Z, +X is the actor's left. Meters.

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator/(Vec3 a, double s) { return a *= 1.0 / s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Vectors shorter than this are treated as degenerate.
inline constexpr double kDegenerateEps = 1e-9;

/// Throws DegenerateVector when |v| <= kDegenerateEps.
Vec3 normalized(const Vec3& v);

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Unit quaternion (w, x, y, z).
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {}; }
  static Quat from_axis_angle(const Vec3& axis, double angle);
  /// Rotation vector (axis * angle); zero vector gives identity.
  static Quat from_rotation_vector(const Vec3& v);
  /// Rotation whose matrix has the given (orthonormal, right-handed) columns.
  static Quat from_basis(const Vec3& col_x, const Vec3& col_y, const Vec3& col_z);

  Quat conjugate() const { return {w, -x, -y, -z}; }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const;
  /// Same rotation with w >= 0.
  Quat canonical() const;
  Vec3 rotate(const Vec3& v) const;
  /// Axis * angle with angle in [0, pi].
  Vec3 to_rotation_vector() const;

  friend bool operator==(const Quat&, const Quat&) = default;
};

Quat operator*(const Quat& a, const Quat& b);

/// Angle of the relative rotation a^-1 b, in [0, pi].
double geodesic_angle(const Quat& a, const Quat& b);

enum class Side { Left, Right };

std::string_view side_name(Side s);
Side parse_side(std::string_view text);

enum class Channel : std::uint8_t { Xposition, Yposition, Zposition, Xrotation, Yrotation, Zrotation };

std::string_view channel_name(Channel c);
std::optional<Channel> parse_channel(std::string_view text);
inline bool is_rotation(Channel c) { return c >= Channel::Xrotation; }

struct Joint {
  std::string name;
  int parent = -1;
  Vec3 offset;
  std::vector<Channel> channels;
  std::optional<Vec3> end_site;

  friend bool operator==(const Joint&, const Joint&) = default;
};

struct ArmJoints {
  int shoulder = -1;
  int elbow = -1;
  int hand = -1;

  bool valid() const { return shoulder >= 0 && elbow >= 0 && hand >= 0; }
  friend bool operator==(const ArmJoints&, const ArmJoints&) = default;
};

/// Joint hierarchy in topological order (parent index < joint index, joint 0 is the only root).
/// Arm joints are designated from the joint names when they follow a recognisable convention
/// (LeftForeArm, l_elbow, RightHand, ...); the shoulder is the elbow's parent.
class Skeleton {
 public:
  Skeleton() = default;
  explicit Skeleton(std::vector<Joint> joints);

  const std::vector<Joint>& joints() const { return joints_; }
  const Joint& joint(int i) const { return joints_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return joints_.size(); }
  int root() const { return 0; }

  bool has_arm(Side s) const { return arm_[index(s)].valid(); }
  /// Throws Error when the side has no designated arm.
  const ArmJoints& arm(Side s) const;
  void set_arm(Side s, const ArmJoints& joints);

  /// -1 when absent.
  int find(std::string_view name) const;

  friend bool operator==(const Skeleton&, const Skeleton&) = default;

 private:
  static std::size_t index(Side s) { return s == Side::Left ? 0 : 1; }

  std::vector<Joint> joints_;
  ArmJoints arm_[2];
};

/// Local joint rotations plus the root's world position.
struct Pose {
  Vec3 root;
  std::vector<Quat> rotations;

  friend bool operator==(const Pose&, const Pose&) = default;
};

Pose rest_pose(const Skeleton& skel, const Vec3& root = {});

/// Angle in [0, pi]. Throws DegenerateVector if either vector is shorter than kDegenerateEps.
double angle_between(const Vec3& u, const Vec3& v);

std::vector<Quat> world_rotations(const Skeleton& skel, const Pose& pose);

/// World position of every joint. The root sits at pose.root; each child is its parent's
/// position plus the parent's world rotation applied to the child's offset.
std::vector<Vec3> forward_kinematics(const Skeleton& skel, const Pose& pose);

/// Repeated forward difference (s[t+1]-s[t])/dt. Output length is n - order.
/// order must be 1, 2 or 3; throws SeriesTooShort when n <= order.
std::vector<double> finite_difference(std::span<const double> series, double dt, int order);

}  // namespace pointbench

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pointbench/geom.hpp"

namespace pointbench {

struct Target {
  std::string label;
  Vec3 position;

  friend bool operator==(const Target&, const Target&) = default;
};

/// Ground-truth landmarks of one pointing movement (frames, half-open [onset, offset]).
struct Annotation {
  Side hand = Side::Right;
  int onset = 0;
  int peak_velocity = 0;
  int hold_start = 0;
  int offset = 0;
  int target = -1;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Clip {
  std::string source;
  Skeleton skeleton;
  double fps = 0.0;
  std::vector<Pose> frames;
  std::vector<Target> targets;
  std::vector<Annotation> annotations;

  double frame_time() const { return 1.0 / fps; }
  int frame_count() const { return static_cast<int>(frames.size()); }
  std::vector<Vec3> positions(int frame) const;

  friend bool operator==(const Clip&, const Clip&) = default;
};

/// Checks fps > 0, at least two frames, and pose/skeleton agreement. Throws SchemaError.
void validate_clip(const Clip& clip);

/// Parses BVH text. Euler channels are composed in their declared order (degrees).
/// Lengths (offsets, root translation) are multiplied by `length_scale` to give meters.
Clip parse_bvh(std::string_view text, double length_scale = 1.0, std::string source = "");

/// Native annotated clip document (see README for the schema).
Clip parse_clip_json(std::string_view text);
std::string write_clip_json(const Clip& clip);

/// Dispatches on extension: `.bvh` or JSON. BVH lengths are scaled by `bvh_length_scale`.
Clip read_clip_file(const std::filesystem::path& path, double bvh_length_scale = 1.0);

// ---------------------------------------------------------------------------
// Analysis

struct SegmentParams {
  double min_peak_height = 0.25;  // m
  double min_prominence = 0.15;   // m
  double rest_threshold = 0.05;   // m
  double hold_speed_fraction = 0.10;
};

struct Segment {
  std::string clip;
  Side hand = Side::Right;
  int onset = 0;
  int peak_velocity = 0;
  int hold_start = 0;
  int offset = 0;
  int displacement_peak = 0;
  /// Index into clip.targets, -1 when the clip has none.
  int target = -1;
};

struct KinematicStats {
  double duration = 0.0;       // s
  double rise_time = 0.0;      // s
  double peak_velocity = 0.0;  // mm/s
  double mean_velocity = 0.0;  // mm/s
};

/// World positions of one joint over the whole clip.
std::vector<Vec3> joint_trajectory(const Clip& clip, int joint);

/// Hand speed in m/s from forward differences; length frame_count - 1.
std::vector<double> hand_speed(const Clip& clip, Side hand);

/// Distance of the hand from its frame-0 position, projected on the sagittal (Y-Z) plane.
std::vector<double> sagittal_displacement(const Clip& clip, Side hand);

/// Indices of local maxima (plateaus reported at their middle sample) with the given
/// minimum height and topographic prominence.
std::vector<int> find_peaks(std::span<const double> x, double min_height, double min_prominence);
double peak_prominence(std::span<const double> x, int peak);

/// Splits a clip into pointing movements, sorted by onset. Throws NoMovementFound.
std::vector<Segment> segment_pointing(const Clip& clip, const SegmentParams& params = {});

KinematicStats kinematic_stats(const Clip& clip, const Segment& seg);

/// Per-frame pointing precision over [onset, offset]; frames where the geometry
/// degenerates are empty.
std::vector<std::optional<double>> precision_profile(const Clip& clip, const Segment& seg);

struct Octant {
  bool front = true;
  bool left = false;
  bool top = false;

  /// 0..7 in table order: top row (FL, FR, BL, BR) then bottom row.
  int cell() const { return (top ? 0 : 4) + (front ? 0 : 2) + (left ? 0 : 1); }
  static Octant from_cell(int cell);
  std::string name() const;
  friend bool operator==(const Octant&, const Octant&) = default;
};

/// Body frame of the actor: origin at the root, root orientation, shoulder-center height
/// above the root in that frame.
struct BodyFrame {
  Vec3 origin;
  Quat orientation;
  double shoulder_height = 0.0;
};

BodyFrame body_frame(const Skeleton& skel, const Pose& pose);
Vec3 to_body(const BodyFrame& frame, const Vec3& world);
Vec3 from_body(const BodyFrame& frame, const Vec3& body);

/// Ties go to Right, Bottom and Front.
Octant classify_octant(const Vec3& target_world, const BodyFrame& frame);

using OctantTable = std::array<int, 8>;
OctantTable count_octants(std::span<const Octant> octants);

/// Octant of the segment's target using the clip's first frame as body frame.
std::optional<Octant> segment_octant(const Clip& clip, const Segment& seg);

struct Profile {
  std::vector<double> mean;
  std::vector<double> sd;
};

/// Linear-interpolation resampling of a series to `bins` samples.
std::vector<double> resample(std::span<const double> series, int bins);

/// Per-bin mean and sample standard deviation (0 for a single series).
Profile mean_profile(std::span<const std::vector<double>> series, int bins);

struct ClipSegment {
  const Clip* clip;
  Segment segment;
};

/// Hand speed (m/s) of each segment over [onset, offset), time-normalised to `bins`.
Profile velocity_profile(std::span<const ClipSegment> segments, int bins);

}  // namespace pointbench

#include <algorithm>
#include <limits>
#include <numeric>

#include "pointbench/error.hpp"
#include "pointbench/mocap.hpp"
#include "pointbench/reward.hpp"

namespace pointbench {

std::vector<Vec3> joint_trajectory(const Clip& clip, int joint) {
  std::vector<Vec3> out;
  out.reserve(clip.frames.size());
  for (const Pose& p : clip.frames) out.push_back(forward_kinematics(clip.skeleton, p).at(static_cast<std::size_t>(joint)));
  return out;
}

std::vector<double> hand_speed(const Clip& clip, Side hand) {
  const auto path = joint_trajectory(clip, clip.skeleton.arm(hand).hand);
  std::vector<double> speed(path.size() > 0 ? path.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) speed[i] = distance(path[i + 1], path[i]) * clip.fps;
  return speed;
}

std::vector<double> sagittal_displacement(const Clip& clip, Side hand) {
  const auto path = joint_trajectory(clip, clip.skeleton.arm(hand).hand);
  std::vector<double> d(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double dy = path[i].y - path[0].y;
    const double dz = path[i].z - path[0].z;
    d[i] = std::sqrt(dy * dy + dz * dz);
  }
  return d;
}

double peak_prominence(std::span<const double> x, int peak) {
  const auto n = static_cast<int>(x.size());
  const double h = x[static_cast<std::size_t>(peak)];
  double left_min = h;
  for (int i = peak; i >= 0 && x[static_cast<std::size_t>(i)] <= h; --i) left_min = std::min(left_min, x[static_cast<std::size_t>(i)]);
  double right_min = h;
  for (int i = peak; i < n && x[static_cast<std::size_t>(i)] <= h; ++i) right_min = std::min(right_min, x[static_cast<std::size_t>(i)]);
  return h - std::max(left_min, right_min);
}

std::vector<int> find_peaks(std::span<const double> x, double min_height, double min_prominence) {
  std::vector<int> peaks;
  const auto n = static_cast<int>(x.size());
  auto at = [&](int i) { return x[static_cast<std::size_t>(i)]; };
  int i = 1;
  while (i < n) {
    if (at(i - 1) < at(i)) {
      int ahead = i + 1;
      while (ahead < n && at(ahead) == at(i)) ++ahead;
      // A plateau running into the end of the series still counts: the hand may never return.
      if (ahead == n || at(ahead) < at(i)) {
        const int mid = (i + ahead - 1) / 2;
        if (at(mid) >= min_height && peak_prominence(x, mid) >= min_prominence) peaks.push_back(mid);
      }
      i = ahead;
    } else {
      ++i;
    }
  }
  return peaks;
}

namespace {

int nearest_target(const Clip& clip, Side hand, int frame) {
  if (clip.targets.empty()) return -1;
  const ArmJoints& arm = clip.skeleton.arm(hand);
  const auto pos = clip.positions(frame);
  const Vec3 h = pos[static_cast<std::size_t>(arm.hand)];
  const Vec3 forearm = h - pos[static_cast<std::size_t>(arm.elbow)];
  const double len = norm(forearm);
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < clip.targets.size(); ++t) {
    const Vec3 w = clip.targets[t].position - h;
    double d = norm(w);
    if (len > kDegenerateEps) {
      const Vec3 dir = forearm / len;
      const double along = dot(w, dir);
      if (along > 0.0) d = norm(w - dir * along);
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(t);
    }
  }
  return best;
}

std::vector<Segment> segment_hand(const Clip& clip, Side hand, const SegmentParams& params) {
  const std::vector<double> d = sagittal_displacement(clip, hand);
  const std::vector<double> speed = hand_speed(clip, hand);
  const auto n = static_cast<int>(d.size());
  auto D = [&](int i) { return d[static_cast<std::size_t>(i)]; };
  auto V = [&](int i) { return speed[static_cast<std::size_t>(i)]; };

  std::vector<Segment> out;
  for (int peak : find_peaks(d, params.min_peak_height, params.min_prominence)) {
    // Onset: last rest frame before the peak, then back down the rising flank to the rest level.
    int onset = peak;
    while (onset > 0 && D(onset) > params.rest_threshold) --onset;
    while (onset > 0 && D(onset - 1) < D(onset)) --onset;

    int offset = peak;
    while (offset < n - 1 && D(offset) > params.rest_threshold) ++offset;
    while (offset < n - 1 && D(offset + 1) < D(offset)) ++offset;

    if (!(onset < peak)) continue;
    int peak_v = onset;
    for (int k = onset; k < peak; ++k) {
      if (V(k) > V(peak_v)) peak_v = k;
    }
    if (!(V(peak_v) > 0.0)) continue;

    // Hold start: speed drops under the fraction of its peak, then settles into the local minimum.
    const double limit = params.hold_speed_fraction * V(peak_v);
    int hold = peak_v + 1;
    while (hold < offset && V(hold) >= limit) ++hold;
    while (hold + 1 < offset && V(hold + 1) < V(hold)) ++hold;
    if (!(onset < peak_v && peak_v <= hold && hold < offset)) continue;

    Segment seg;
    seg.clip = clip.source;
    seg.hand = hand;
    seg.onset = onset;
    seg.peak_velocity = peak_v;
    seg.hold_start = hold;
    seg.offset = offset;
    seg.displacement_peak = peak;
    seg.target = nearest_target(clip, hand, hold);

    // Two peaks inside one movement collapse into the more prominent one.
    if (!out.empty() && seg.onset < out.back().offset) {
      if (D(seg.displacement_peak) > D(out.back().displacement_peak)) {
        seg.onset = std::min(seg.onset, out.back().onset);
        out.back() = seg;
      }
      continue;
    }
    out.push_back(seg);
  }
  return out;
}

}  // namespace

std::vector<Segment> segment_pointing(const Clip& clip, const SegmentParams& params) {
  std::vector<Segment> all;
  for (Side hand : {Side::Left, Side::Right}) {
    if (!clip.skeleton.has_arm(hand)) continue;
    auto segs = segment_hand(clip, hand, params);
    all.insert(all.end(), segs.begin(), segs.end());
  }
  if (all.empty()) throw NoMovementFound("no pointing movement found in '" + clip.source + "'");
  std::stable_sort(all.begin(), all.end(), [](const Segment& a, const Segment& b) { return a.onset < b.onset; });
  return all;
}

KinematicStats kinematic_stats(const Clip& clip, const Segment& seg) {
  const std::vector<double> speed = hand_speed(clip, seg.hand);
  KinematicStats s;
  s.duration = (seg.offset - seg.onset) / clip.fps;
  s.rise_time = (seg.hold_start - seg.onset) / clip.fps;
  double peak = 0.0;
  for (int k = seg.onset; k < seg.offset; ++k) peak = std::max(peak, speed[static_cast<std::size_t>(k)]);
  double sum = 0.0;
  for (int k = seg.onset; k < seg.hold_start; ++k) sum += speed[static_cast<std::size_t>(k)];
  s.peak_velocity = peak * 1000.0;
  s.mean_velocity = seg.hold_start > seg.onset ? sum / (seg.hold_start - seg.onset) * 1000.0 : 0.0;
  return s;
}

std::vector<std::optional<double>> precision_profile(const Clip& clip, const Segment& seg) {
  if (seg.target < 0 || seg.target >= static_cast<int>(clip.targets.size())) {
    throw Error("segment has no valid target");
  }
  const ArmJoints& arm = clip.skeleton.arm(seg.hand);
  const Vec3 target = clip.targets[static_cast<std::size_t>(seg.target)].position;
  std::vector<std::optional<double>> out;
  for (int f = seg.onset; f <= seg.offset; ++f) {
    const auto pos = clip.positions(f);
    try {
      out.emplace_back(pointing_precision(
          ArmFrame{pos[static_cast<std::size_t>(arm.elbow)], pos[static_cast<std::size_t>(arm.hand)], target}));
    } catch (const DegenerateVector&) {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

Octant Octant::from_cell(int cell) {
  if (cell < 0 || cell > 7) throw Error("octant cell out of range");
  return Octant{(cell % 4) < 2, cell % 2 == 0, cell < 4};
}

std::string Octant::name() const {
  return std::string(front ? "Front" : "Back") + "-" + (top ? "Top" : "Bottom") + "-" + (left ? "Left" : "Right");
}

BodyFrame body_frame(const Skeleton& skel, const Pose& pose) {
  BodyFrame f;
  f.origin = pose.root;
  f.orientation = pose.rotations.at(0);
  // Shoulder height of the unposed torso above the root.
  const auto rest = forward_kinematics(skel, rest_pose(skel));
  std::vector<int> shoulders;
  for (Side s : {Side::Left, Side::Right}) {
    if (skel.has_arm(s)) shoulders.push_back(skel.arm(s).shoulder);
  }
  if (shoulders.empty()) throw Error("skeleton has no designated arms");
  double h = 0.0;
  for (int s : shoulders) h += rest[static_cast<std::size_t>(s)].y;
  f.shoulder_height = h / static_cast<double>(shoulders.size()) - rest[0].y;
  return f;
}

Vec3 to_body(const BodyFrame& frame, const Vec3& world) {
  return frame.orientation.conjugate().rotate(world - frame.origin);
}

Vec3 from_body(const BodyFrame& frame, const Vec3& body) {
  return frame.origin + frame.orientation.rotate(body);
}

Octant classify_octant(const Vec3& target_world, const BodyFrame& frame) {
  const Vec3 b = to_body(frame, target_world);
  return Octant{b.z >= 0.0, b.x > 0.0, b.y > frame.shoulder_height};
}

OctantTable count_octants(std::span<const Octant> octants) {
  OctantTable t{};
  for (const Octant& o : octants) ++t[static_cast<std::size_t>(o.cell())];
  return t;
}

std::optional<Octant> segment_octant(const Clip& clip, const Segment& seg) {
  if (seg.target < 0 || seg.target >= static_cast<int>(clip.targets.size())) return std::nullopt;
  return classify_octant(clip.targets[static_cast<std::size_t>(seg.target)].position,
                         body_frame(clip.skeleton, clip.frames.front()));
}

std::vector<double> resample(std::span<const double> series, int bins) {
  if (series.empty()) throw EmptyInput("resample: empty series");
  if (bins < 1) throw Error("resample: bins must be positive");
  std::vector<double> out(static_cast<std::size_t>(bins));
  const auto n = series.size();
  for (int k = 0; k < bins; ++k) {
    if (n == 1 || bins == 1) {
      out[static_cast<std::size_t>(k)] = series[0];
      continue;
    }
    const double x = static_cast<double>(k) * static_cast<double>(n - 1) / (bins - 1);
    const auto i = std::min(static_cast<std::size_t>(x), n - 2);
    const double t = x - static_cast<double>(i);
    out[static_cast<std::size_t>(k)] = series[i] * (1.0 - t) + series[i + 1] * t;
  }
  return out;
}

Profile mean_profile(std::span<const std::vector<double>> series, int bins) {
  if (series.empty()) throw EmptyInput("mean_profile: no series");
  std::vector<std::vector<double>> rs;
  rs.reserve(series.size());
  for (const auto& s : series) rs.push_back(resample(s, bins));
  Profile p;
  p.mean.assign(static_cast<std::size_t>(bins), 0.0);
  p.sd.assign(static_cast<std::size_t>(bins), 0.0);
  const double n = static_cast<double>(rs.size());
  for (std::size_t b = 0; b < p.mean.size(); ++b) {
    double sum = 0.0;
    for (const auto& r : rs) sum += r[b];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : rs) ss += (r[b] - mean) * (r[b] - mean);
    p.mean[b] = mean;
    p.sd[b] = rs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return p;
}

Profile velocity_profile(std::span<const ClipSegment> segments, int bins) {
  if (segments.empty()) throw EmptyInput("velocity_profile: no segments");
  std::vector<std::vector<double>> series;
  for (const ClipSegment& cs : segments) {
    const auto speed = hand_speed(*cs.clip, cs.segment.hand);
    series.emplace_back(speed.begin() + cs.segment.onset, speed.begin() + cs.segment.offset);
  }
  return mean_profile(series, bins);
}

}  // namespace pointbench

#include "pointbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "pointbench/error.hpp"

namespace pointbench {

double min_jerk(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double min_jerk_rate(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return 30.0 * s * s * (1.0 - s) * (1.0 - s);
}

void SynthParams::validate() const {
  if (!(rise_time > 0.0 && hold_time > 0.0 && retract_time > 0.0)) {
    throw ConfigError("synth: rise, hold and retract times must be positive");
  }
  if (!(lead_time >= 0.0 && tail_time >= 0.0)) throw ConfigError("synth: idle times must be non-negative");
  if (!(fps > 0.0)) throw ConfigError("synth: fps must be positive");
  if (!(alignment_error >= 0.0 && alignment_error < 180.0)) {
    throw ConfigError("synth: alignment_error must lie in [0, 180)");
  }
  if (!(noise_amplitude >= 0.0)) throw ConfigError("synth: noise_amplitude must be non-negative");
  if (!is_finite(target)) throw ConfigError("synth: target must be finite");
}

Clip generate_pointing_clip(const Skeleton& skel, const SynthParams& params) {
  params.validate();
  const ArmModel arm(skel, params.hand, rest_pose(skel, standard_root()));
  const ArmAngles hold = arm.pointing_hold(params.target, params.alignment_error * std::numbers::pi / 180.0);
  const Vec3 idle_hand = arm.points(ArmAngles{}).hand;
  const Vec3 hold_hand = arm.points(hold).hand;

  const int onset = static_cast<int>(std::lround(params.lead_time * params.fps));
  const double rise = params.rise_time * params.fps;
  const double held = params.hold_time * params.fps;
  const double back = params.retract_time * params.fps;
  const int moving = static_cast<int>(std::ceil(rise + held + back));
  const int n = onset + moving + static_cast<int>(std::lround(params.tail_time * params.fps)) + 1;

  std::vector<double> phase(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    const double u = f - onset;
    double s = 0.0;
    if (u <= 0.0) {
      s = 0.0;
    } else if (u < rise) {
      s = min_jerk(u / rise);
    } else if (u <= rise + held) {
      s = 1.0;
    } else if (u < rise + held + back) {
      s = 1.0 - min_jerk((u - rise - held) / back);
    }
    phase[static_cast<std::size_t>(f)] = s;
  }

  std::vector<Vec3> noise(static_cast<std::size_t>(n));
  if (params.noise_amplitude > 0.0) {
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> gauss(0.0, params.noise_amplitude);
    Vec3 prev{gauss(rng), gauss(rng), gauss(rng)};
    for (auto& v : noise) {
      const Vec3 cur{gauss(rng), gauss(rng), gauss(rng)};
      v = 0.5 * (cur + prev);
      prev = cur;
    }
  }

  Clip clip;
  clip.skeleton = skel;
  clip.fps = params.fps;
  clip.targets.push_back({"target", params.target});
  clip.frames.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    const double s = phase[static_cast<std::size_t>(f)];
    const Vec3 hand = idle_hand + s * (hold_hand - idle_hand) + noise[static_cast<std::size_t>(f)];
    if (s == 0.0 && params.noise_amplitude == 0.0) {
      clip.frames.push_back(arm.pose(ArmAngles{}));
    } else if (s == 1.0 && params.noise_amplitude == 0.0) {
      clip.frames.push_back(arm.pose(hold));
    } else {
      clip.frames.push_back(arm.pose(arm.solve(hand)));
    }
  }

  Annotation a;
  a.hand = params.hand;
  a.target = 0;
  a.onset = onset;
  int f = onset;
  while (f < n && phase[static_cast<std::size_t>(f)] < 1.0) ++f;
  a.hold_start = f;
  while (f + 1 < n && phase[static_cast<std::size_t>(f + 1)] == 1.0) ++f;
  while (f < n && phase[static_cast<std::size_t>(f)] > 0.0) ++f;
  a.offset = std::min(f, n - 1);

  // Velocity landmark from the noise-free path.
  int best = onset;
  double best_rate = -1.0;
  for (int k = onset; k < a.hold_start; ++k) {
    const double ds = phase[static_cast<std::size_t>(k + 1)] - phase[static_cast<std::size_t>(k)];
    if (ds > best_rate) {
      best_rate = ds;
      best = k;
    }
  }
  a.peak_velocity = best;
  clip.annotations.push_back(a);
  return clip;
}

std::array<int, 8> allocate_octants(int n, const OctantWeights& weights) {
  if (n < 0) throw ConfigError("allocate_octants: n must be non-negative");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("octant weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("octant weights must not all be zero");
  std::array<int, 8> counts{};
  std::array<double, 8> rem{};
  int assigned = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    const double exact = n * weights[i] / total;
    counts[i] = static_cast<int>(std::floor(exact));
    rem[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::array<std::size_t, 8> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 8]];
  return counts;
}

Vec3 sample_octant_target(const Skeleton& skel, Side hand, const Octant& octant, std::mt19937_64& rng,
                          double alignment_error) {
  const Pose base = rest_pose(skel, standard_root());
  const BodyFrame body = body_frame(skel, base);
  const ArmModel arm(skel, hand, base);
  const PointingShell shell = arm.shell();
  const Vec3 idle = arm.points(ArmAngles{}).hand;
  std::uniform_real_distribution<double> comp(0.15, 1.0);
  std::uniform_real_distribution<double> radius(0.8, 1.05);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vec3 dir{comp(rng) * (octant.left ? 1.0 : -1.0), comp(rng) * (octant.top ? 1.0 : -1.0),
             comp(rng) * (octant.front ? 1.0 : -1.0)};
    dir = normalized(dir);
    const Vec3 local = Vec3{0.0, body.shoulder_height, 0.0} + radius(rng) * dir;
    const Vec3 world = from_body(body, local);
    if (!shell.contains(distance(world, arm.shoulder()))) continue;
    const Vec3 travel = arm.points(arm.pointing_hold(world, alignment_error * std::numbers::pi / 180.0)).hand - idle;
    if (std::hypot(travel.y, travel.z) >= kMinSagittalTravel) return world;
  }
  throw Unreachable("no target in octant " + octant.name() + " is reachable by the " +
                    std::string(side_name(hand)) + " hand");
}

std::vector<Clip> generate_corpus(const Skeleton& skel, int n, const OctantWeights& weights, std::uint64_t seed,
                                  const CorpusOptions& options) {
  if (n < 1) throw ConfigError("corpus size must be at least 1");
  const auto counts = allocate_octants(n, weights);
  std::vector<int> cells;
  for (int c = 0; c < 8; ++c) cells.insert(cells.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(c)]), c);

  std::mt19937_64 rng(seed);
  std::shuffle(cells.begin(), cells.end(), rng);
  std::bernoulli_distribution left_hand(0.8);

  std::vector<Clip> out;
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Octant oct = Octant::from_cell(cells[i]);
    Side hand = Side::Right;
    if (options.hand) {
      hand = *options.hand;
    } else if (oct.left) {
      hand = left_hand(rng) ? Side::Left : Side::Right;
    }
    SynthParams p = options.base;
    p.hand = hand;
    p.target = sample_octant_target(skel, hand, oct, rng, p.alignment_error);
    p.seed = seed * 1000003ULL + i;
    Clip clip = generate_pointing_clip(skel, p);
    clip.source = fmt::format("synth_{:04d}", i);
    clip.targets[0].label = oct.name();
    out.push_back(std::move(clip));
  }
  return out;
}

}  // namespace pointbench

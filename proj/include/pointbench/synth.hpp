#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pointbench/arm.hpp"
#include "pointbench/mocap.hpp"

namespace pointbench {

/// 10 s^3 - 15 s^4 + 6 s^5 on [0, 1].
double min_jerk(double s);
/// d/ds of min_jerk; peaks at 1.875 for s = 0.5.
double min_jerk_rate(double s);

struct SynthParams {
  Vec3 target;
  Side hand = Side::Right;
  double rise_time = 0.71;     // s
  double hold_time = 1.0;      // s
  double retract_time = 0.9;   // s
  double alignment_error = 20.0;  // degrees
  double noise_amplitude = 0.0;   // m, standard deviation before smoothing
  std::uint64_t seed = 0;
  double fps = 120.0;
  double lead_time = 0.5;  // idle before the movement, s
  double tail_time = 0.5;  // idle after the movement, s

  /// Throws ConfigError on non-positive times, fps, or out-of-range error/noise.
  void validate() const;
};

/// One annotated pointing movement: idle, minimum-jerk rise to a straight-arm hold whose
/// forearm misses the target ray by `alignment_error`, hold, retraction along the same path.
/// Throws Unreachable when the target lies outside the arm's pointing shell.
Clip generate_pointing_clip(const Skeleton& skel, const SynthParams& params);

/// Table-order octant weights: top row (FL, FR, BL, BR) then bottom row.
using OctantWeights = std::array<double, 8>;
/// Single-target position counts of the recorded corpus, used as default weights.
inline constexpr OctantWeights kRecordedOctantCounts{11, 15, 8, 8, 14, 12, 7, 8};

/// Largest-remainder allocation of n clips over the octant weights.
std::array<int, 8> allocate_octants(int n, const OctantWeights& weights);

/// Hand travel in the sagittal plane below which a generated movement is rejected; keeps
/// clips detectable by segment_pointing with default thresholds.
inline constexpr double kMinSagittalTravel = 0.30;  // m

/// Uniform-ish sample inside `octant` around the shoulder centre, rejected until the target
/// lies in the pointing shell of `hand` and the hold pose (at `alignment_error` degrees)
/// moves the hand at least kMinSagittalTravel in the sagittal plane.
Vec3 sample_octant_target(const Skeleton& skel, Side hand, const Octant& octant, std::mt19937_64& rng,
                          double alignment_error = 20.0);

struct CorpusOptions {
  SynthParams base;
  /// Fixed hand, or nullopt to choose per clip: left-side targets go to the left hand with
  /// probability 0.8, right-side targets to the right hand (32 / 51 split on the recorded counts).
  std::optional<Side> hand;
};

/// n clips with octant counts allocated by weight, deterministic under `seed`.
std::vector<Clip> generate_corpus(const Skeleton& skel, int n, const OctantWeights& weights,
                                  std::uint64_t seed, const CorpusOptions& options = {});

}  // namespace pointbench

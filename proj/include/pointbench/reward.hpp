#pragma once

#include <vector>

#include "pointbench/geom.hpp"

namespace pointbench {

/// Elbow, hand and target in world coordinates.
struct ArmFrame {
  Vec3 elbow;
  Vec3 hand;
  Vec3 target;
};

/// 1 - angle(hand->target, elbow->hand) / pi, in [0, 1].
/// Throws DegenerateVector when the target sits on the hand or the forearm has zero length.
double pointing_precision(const ArmFrame& frame);

/// (exp(theta_hat) - 1) / e, in [0, (e - 1) / e].
double pointing_reward(double theta_hat);
double pointing_reward(const ArmFrame& frame);

/// Upper bound of pointing_reward.
double pointing_reward_max();

/// Weights and kernel scales of the combined and imitation rewards.
struct RewardConfig {
  double w_imitation = 0.7;
  double w_task = 0.3;

  double w_pose = 0.65;
  double w_velocity = 0.1;
  double w_end_effector = 0.15;
  double w_com = 0.1;

  double k_pose = 2.0;
  double k_velocity = 0.1;
  double k_end_effector = 40.0;
  double k_com = 10.0;

  /// Throws ConfigError unless weights are non-negative, each group sums to 1 and scales are positive.
  void validate() const;
};

struct ImitationTerms {
  double pose = 1.0;
  double velocity = 1.0;
  double end_effector = 1.0;
  double com = 1.0;
};

/// Pose plus generalised joint velocities for one time step.
struct ImitationState {
  Pose pose;
  std::vector<double> velocity;
};

struct ImitationResult {
  ImitationTerms terms;
  double total = 1.0;
};

/// Pose (geodesic), velocity, end-effector (hands) and centre-of-mass (unit joint masses)
/// kernels, combined with the imitation weights. Throws SkeletonMismatch on shape mismatch.
ImitationResult imitation_reward(const Skeleton& skel, const ImitationState& state,
                                 const ImitationState& reference, const RewardConfig& config);

double combined_reward(double r_imitation, double r_task, const RewardConfig& config);

/// Least-squares discriminator reward max(0, 1 - (d - 1)^2 / 4).
double amp_reward(double score);

}  // namespace pointbench

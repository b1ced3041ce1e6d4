#include "pointbench/reward.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "pointbench/error.hpp"

namespace pointbench {

double pointing_precision(const ArmFrame& f) {
  return 1.0 - angle_between(f.target - f.hand, f.hand - f.elbow) / std::numbers::pi;
}

double pointing_reward(double theta_hat) { return (std::exp(theta_hat) - 1.0) / std::numbers::e; }

double pointing_reward(const ArmFrame& frame) { return pointing_reward(pointing_precision(frame)); }

double pointing_reward_max() { return (std::numbers::e - 1.0) / std::numbers::e; }

void RewardConfig::validate() const {
  const double weights[] = {w_imitation, w_task, w_pose, w_velocity, w_end_effector, w_com};
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("reward weights must be non-negative");
  }
  if (std::abs(w_imitation + w_task - 1.0) > 1e-9) {
    throw ConfigError("reward: w_imitation + w_task must equal 1");
  }
  if (std::abs(w_pose + w_velocity + w_end_effector + w_com - 1.0) > 1e-9) {
    throw ConfigError("reward: imitation weights must sum to 1");
  }
  const double scales[] = {k_pose, k_velocity, k_end_effector, k_com};
  for (double k : scales) {
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("reward scales must be positive");
  }
}

ImitationResult imitation_reward(const Skeleton& skel, const ImitationState& state,
                                 const ImitationState& ref, const RewardConfig& cfg) {
  if (state.pose.rotations.size() != skel.size() || ref.pose.rotations.size() != skel.size()) {
    throw SkeletonMismatch("imitation_reward: pose does not match skeleton");
  }
  if (state.velocity.size() != ref.velocity.size()) {
    throw SkeletonMismatch("imitation_reward: velocity dimension " + std::to_string(state.velocity.size()) +
                           " vs " + std::to_string(ref.velocity.size()));
  }

  double pose_err = 0.0;
  for (std::size_t j = 0; j < skel.size(); ++j) {
    const double a = geodesic_angle(state.pose.rotations[j], ref.pose.rotations[j]);
    pose_err += a * a;
  }
  double vel_err = 0.0;
  for (std::size_t j = 0; j < state.velocity.size(); ++j) {
    const double d = state.velocity[j] - ref.velocity[j];
    vel_err += d * d;
  }

  const auto pos = forward_kinematics(skel, state.pose);
  const auto ref_pos = forward_kinematics(skel, ref.pose);
  double ee_err = 0.0;
  for (Side s : {Side::Left, Side::Right}) {
    if (!skel.has_arm(s)) continue;
    const auto h = static_cast<std::size_t>(skel.arm(s).hand);
    const Vec3 d = pos[h] - ref_pos[h];
    ee_err += dot(d, d);
  }
  Vec3 com, ref_com;
  for (std::size_t j = 0; j < pos.size(); ++j) {
    com += pos[j];
    ref_com += ref_pos[j];
  }
  const double inv = 1.0 / static_cast<double>(pos.size());
  const Vec3 dc = (com - ref_com) * inv;

  ImitationResult r;
  r.terms.pose = std::exp(-cfg.k_pose * pose_err);
  r.terms.velocity = std::exp(-cfg.k_velocity * vel_err);
  r.terms.end_effector = std::exp(-cfg.k_end_effector * ee_err);
  r.terms.com = std::exp(-cfg.k_com * dot(dc, dc));
  r.total = cfg.w_pose * r.terms.pose + cfg.w_velocity * r.terms.velocity +
            cfg.w_end_effector * r.terms.end_effector + cfg.w_com * r.terms.com;
  return r;
}

double combined_reward(double r_imitation, double r_task, const RewardConfig& cfg) {
  return cfg.w_imitation * r_imitation + cfg.w_task * r_task;
}

double amp_reward(double score) {
  const double d = score - 1.0;
  return std::max(0.0, 1.0 - 0.25 * d * d);
}

}  // namespace pointbench

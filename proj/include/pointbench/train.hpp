#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointbench/env.hpp"
#include "pointbench/ppo.hpp"

namespace pointbench {

enum class TrainMode { DM, DMWithReward, AMP, TaskOnly };

std::string_view mode_name(TrainMode m);
/// "dm", "dm-wr", "amp", "task-only". Throws ConfigError.
TrainMode parse_mode(std::string_view s);

/// Reward weights used by a mode: dm (1, 0), task-only (0, 1); dm-wr and amp keep the
/// configured weights, which must both be positive.
RewardConfig mode_rewards(TrainMode mode, const RewardConfig& base);

/// Frames [0, hold_start] of the clip's first annotation (the raising stage only).
Clip truncate_at_hold(const Clip& clip);

struct CurveRow {
  long long step = 0;
  double mean_reward = 0.0;
  double mean_r_I = 0.0;
  double mean_r_G = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

struct DiscriminatorRow {
  long long step = 0;
  double loss = 0.0;
  double real_score = 0.0;
  double fake_score = 0.0;
  friend bool operator==(const DiscriminatorRow&, const DiscriminatorRow&) = default;
};

struct Checkpoint {
  TrainMode mode = TrainMode::DM;
  Side hand = Side::Right;
  int observation_size = 0;
  int action_size = 0;
  long long step = 0;
  std::string config_hash;
  GaussianPolicy policy;
  Mlp value;
  std::optional<Mlp> discriminator;
  RunningNorm norm;
  PpoOptimizers optimizers;
  Adam discriminator_optimizer;
  std::string rng_state;
  std::vector<CurveRow> curve;
  std::vector<DiscriminatorRow> discriminator_curve;
};

nlohmann::json checkpoint_to_json(const Checkpoint& c);
/// Throws IncompatibleCheckpoint on missing fields or inconsistent shapes.
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Throws IncompatibleCheckpoint unless observation/action sizes and hand match the env.
void check_compatible(const Checkpoint& c, const PointingEnv& env);

/// Policy from a checkpoint: normalised observation, mean action (deterministic) or a sample.
class NetPolicy : public Policy {
 public:
  NetPolicy(const Checkpoint& c, bool deterministic);
  int observation_size() const override { return observation_size_; }
  int action_size() const override { return policy_.action_size(); }
  std::vector<double> act(std::span<const double> observation, std::mt19937_64& rng) override;

 private:
  GaussianPolicy policy_;
  RunningNorm norm_;
  int observation_size_;
  bool deterministic_;
};

/// Arm-pose features of a transition: q, hand and elbow (shoulder frame) before and after.
inline constexpr int kTransitionFeatures = 20;
Eigen::VectorXd transition_features(const ArmModel& arm, const ArmAngles& q0, const ArmAngles& q1);
/// Consecutive control-rate transitions of every reference motion of the env.
Eigen::MatrixXd reference_transitions(const PointingEnv& env);

struct TrainOptions {
  EnvConfig env;
  TrainConfig train;
  TrainMode mode = TrainMode::DM;
  std::string config_hash;
  /// Called after every successful update with the current state.
  std::function<void(const Checkpoint&)> on_update;
};

/// The env config the mode trains on (reward weights, truncated clips for amp, no clips for task-only).
EnvConfig mode_env(const TrainOptions& options);

/// Rollout / PPO loop until train.total_steps env steps. Deterministic under train.seed.
/// Resumes from `resume` when given. NonFiniteLoss propagates; parameters are those of the
/// last successful update passed to on_update.
Checkpoint train(const TrainOptions& options, const Checkpoint* resume = nullptr);

void write_curve_csv(std::ostream& out, std::span<const CurveRow> rows);
void write_discriminator_csv(std::ostream& out, std::span<const DiscriminatorRow> rows);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace pointbench

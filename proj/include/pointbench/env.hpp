#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "pointbench/arm.hpp"
#include "pointbench/mocap.hpp"
#include "pointbench/reward.hpp"
#include "pointbench/synth.hpp"

namespace pointbench {

/// Arm angles of a reference clip sampled at its own frame rate, twist unwrapped.
struct ReferenceMotion {
  double fps = 0.0;
  std::vector<ArmAngles> angles;
  std::vector<ArmAngles> velocities;
  Vec3 target;
  bool has_target = false;

  double duration() const { return (static_cast<double>(angles.size()) - 1.0) / fps; }
  /// Linear interpolation at phase in [0, 1].
  ArmAngles angles_at(double phase) const;
  ArmAngles velocity_at(double phase) const;
};

/// Projects the clip's annotated arm onto `arm`. Throws SkeletonMismatch when the clip
/// points with the other hand or its skeleton lacks the arm.
ReferenceMotion make_reference(const Clip& clip, const ArmModel& arm);

/// Cylinder approximations of upper arm (2 kg) and forearm plus hand (1.5 kg).
ArmAngles default_inertia(const ArmModel& arm);

struct EnvConfig {
  Skeleton skeleton = standard_skeleton();
  Side hand = Side::Right;
  double control_rate = 30.0;  // Hz
  int substeps = 4;
  /// Empty means kp = 60 I, kd = 2 sqrt(kp I).
  std::vector<double> kp;
  std::vector<double> kd;
  /// Empty means default_inertia.
  std::vector<double> inertia;
  ArmAngles lower{-2.8, -2.8, -1.8, 0.0};
  ArmAngles upper{2.8, 2.8, 1.8, 2.6};
  /// Empty means 400 I per joint.
  std::vector<double> torque_limit;

  std::vector<Clip> clips;
  /// Sampling weights over the octant cells; back cells are ignored unless allow_back.
  OctantWeights target_weights{1, 1, 1, 1, 1, 1, 1, 1};
  bool allow_back = false;
  /// Explicit target list; overrides octant sampling when non-empty.
  std::vector<Vec3> targets;
  /// Episodes with a reference clip point at the clip's own target.
  bool clip_targets = true;

  RewardConfig reward;
  int horizon = 300;
  /// Reference duration used when no clip is configured.
  double episode_duration = 2.4;  // s
  bool reference_state_init = false;

  /// Throws ConfigError on invalid rates, gains, limits, horizon or reward weights.
  void validate() const;
};

struct EnvState {
  ArmAngles q{};
  ArmAngles qdot{};
  double phase = 0.0;
  Vec3 target;
  int steps = 0;
};

struct StepInfo {
  double reward = 0.0;
  double r_imitation = 0.0;
  double r_task = 0.0;
  double theta_hat = 0.0;
  ImitationTerms terms;
};

struct StepResult {
  std::vector<double> observation;
  StepInfo info;
  bool done = false;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual int observation_size() const = 0;
  virtual int action_size() const = 0;
  virtual std::vector<double> act(std::span<const double> observation, std::mt19937_64& rng) = 0;
};

struct TrajectoryStep {
  std::vector<double> observation;
  std::vector<double> action;
  EnvState state;  // after the step
  StepInfo info;
  bool done = false;
};

struct Trajectory {
  Vec3 target;
  int clip = -1;
  std::vector<TrajectoryStep> steps;
};

class PointingEnv {
 public:
  static constexpr int kObservationSize = 18;

  explicit PointingEnv(EnvConfig config);

  const EnvConfig& config() const { return cfg_; }
  const ArmModel& arm() const { return arm_; }
  int observation_size() const { return kObservationSize; }
  int action_size() const { return kArmDofs; }
  const ArmAngles& kp() const { return kp_; }
  const ArmAngles& kd() const { return kd_; }
  const ArmAngles& inertia() const { return inertia_; }
  const std::vector<ReferenceMotion>& references() const { return refs_; }

  /// Control steps until the phase reaches 1 for `clip` (-1: no reference).
  int episode_steps(int clip) const;

  /// Target for a new episode: the clip's own target when configured, else the explicit
  /// list, else an octant sample for the configured hand.
  Vec3 sample_target(int clip, std::mt19937_64& rng) const;
  int sample_clip(std::mt19937_64& rng) const;

  /// Arm down, at rest, phase 0 (or a random reference phase with reference_state_init).
  /// Throws TargetOutOfRange outside the pointing shell.
  std::vector<double> reset(const Vec3& target, int clip, std::uint64_t seed);
  /// Throws SteppedAfterDone, DimensionMismatch.
  StepResult step(std::span<const double> action);

  const EnvState& state() const { return state_; }
  int clip() const { return clip_; }
  bool done() const { return done_; }
  std::vector<double> observe() const;

  /// Reward of an arbitrary state against `clip`'s reference and `target`.
  StepInfo evaluate(const EnvState& s, int clip) const;

  /// Episodes with targets and clips drawn from `seed`; policy noise draws from the same stream.
  std::vector<Trajectory> rollout(Policy& policy, int episodes, std::uint64_t seed);
  /// Same, on a fixed target list (clip -1 unless the env has exactly one reference).
  std::vector<Trajectory> rollout_targets(Policy& policy, std::span<const Vec3> targets, std::uint64_t seed);

 private:
  Trajectory run_episode(Policy& policy, const Vec3& target, int clip, std::mt19937_64& rng);

  EnvConfig cfg_;
  ArmModel arm_;
  Quat frame_inv_;
  ArmAngles inertia_{};
  ArmAngles kp_{};
  ArmAngles kd_{};
  ArmAngles torque_limit_{};
  std::vector<ReferenceMotion> refs_;
  EnvState state_;
  int clip_ = -1;
  int total_steps_ = 0;
  bool done_ = true;
};

/// Straight-arm pointing at the observed target, tracked through the PD controller.
class ScriptedExpert : public Policy {
 public:
  explicit ScriptedExpert(const PointingEnv& env, double alignment_error = 0.0);
  int observation_size() const override { return PointingEnv::kObservationSize; }
  int action_size() const override { return kArmDofs; }
  std::vector<double> act(std::span<const double> observation, std::mt19937_64& rng) override;

 private:
  ArmModel arm_;
  Quat frame_;
  double alignment_error_;
};

/// Uniform PD targets inside the joint limits, redrawn every control step.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(const PointingEnv& env);
  int observation_size() const override { return PointingEnv::kObservationSize; }
  int action_size() const override { return kArmDofs; }
  std::vector<double> act(std::span<const double> observation, std::mt19937_64& rng) override;

 private:
  ArmAngles lower_, upper_;
};

/// Replays a reference clip's own angles as PD targets (phase-indexed).
class ReplayPolicy : public Policy {
 public:
  ReplayPolicy(const PointingEnv& env, int clip);
  int observation_size() const override { return PointingEnv::kObservationSize; }
  int action_size() const override { return kArmDofs; }
  std::vector<double> act(std::span<const double> observation, std::mt19937_64& rng) override;

 private:
  const ReferenceMotion* ref_;
  double phase_step_;
};

/// One JSON object per step: episode, step, phase, q, qdot, action, reward terms.
void write_trajectories_jsonl(std::ostream& out, std::span<const Trajectory> trajectories);

}  // namespace pointbench

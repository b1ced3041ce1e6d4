#include "pointbench/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <nlohmann/json.hpp>

#include "pointbench/error.hpp"

namespace pointbench {

namespace {

ArmAngles lerp(const std::vector<ArmAngles>& v, double phase) {
  const double x = std::clamp(phase, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(x), v.size() - 1);
  const std::size_t j = std::min(i + 1, v.size() - 1);
  const double t = x - static_cast<double>(i);
  ArmAngles out{};
  for (int d = 0; d < kArmDofs; ++d) out[d] = (1.0 - t) * v[i][d] + t * v[j][d];
  return out;
}

ArmAngles from_vector(const std::vector<double>& v, const ArmAngles& fallback, const char* name) {
  if (v.empty()) return fallback;
  if (v.size() != static_cast<std::size_t>(kArmDofs)) {
    throw ConfigError(std::string("env: ") + name + " needs " + std::to_string(kArmDofs) + " entries");
  }
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

ArmAngles ReferenceMotion::angles_at(double phase) const { return lerp(angles, phase); }
ArmAngles ReferenceMotion::velocity_at(double phase) const { return lerp(velocities, phase); }

ReferenceMotion make_reference(const Clip& clip, const ArmModel& arm) {
  validate_clip(clip);
  if (clip.skeleton.size() != arm.skeleton().size() || !clip.skeleton.has_arm(arm.side())) {
    throw SkeletonMismatch("reference clip '" + clip.source + "' does not match the environment skeleton");
  }
  if (!clip.annotations.empty() && clip.annotations[0].hand != arm.side()) {
    throw SkeletonMismatch("reference clip '" + clip.source + "' points with the " +
                           std::string(side_name(clip.annotations[0].hand)) + " hand");
  }
  ReferenceMotion r;
  r.fps = clip.fps;
  r.angles.reserve(clip.frames.size());
  for (const Pose& p : clip.frames) {
    ArmAngles a = arm.angles(p);
    if (!r.angles.empty()) {
      const double prev = r.angles.back()[kTwist];
      a[kTwist] = prev + std::remainder(a[kTwist] - prev, 2.0 * std::numbers::pi);
    }
    r.angles.push_back(a);
  }
  r.velocities.resize(r.angles.size());
  for (std::size_t f = 0; f < r.angles.size(); ++f) {
    const std::size_t a = f == 0 ? 0 : f - 1;
    const std::size_t b = std::min(f + 1, r.angles.size() - 1);
    for (int d = 0; d < kArmDofs; ++d) {
      r.velocities[f][d] = (r.angles[b][d] - r.angles[a][d]) * clip.fps / static_cast<double>(b - a);
    }
  }
  if (!clip.targets.empty()) {
    const int t = clip.annotations.empty() ? 0 : std::max(0, clip.annotations[0].target);
    r.target = clip.targets[static_cast<std::size_t>(std::min<int>(t, static_cast<int>(clip.targets.size()) - 1))].position;
    r.has_target = true;
  }
  return r;
}

ArmAngles default_inertia(const ArmModel& arm) {
  const double m1 = 2.0, m2 = 1.5, r1 = 0.04, r2 = 0.035;
  const double l1 = arm.upper_length(), l2 = arm.forearm_length();
  const double swing = m1 * l1 * l1 / 3.0 + m2 * (l2 * l2 / 12.0 + (l1 + 0.5 * l2) * (l1 + 0.5 * l2));
  const double twist = 0.5 * m1 * r1 * r1 + 0.5 * m2 * r2 * r2 + m2 * l2 * l2 / 12.0;
  const double elbow = m2 * l2 * l2 / 3.0;
  return {swing, swing, twist, elbow};
}

void EnvConfig::validate() const {
  if (!(control_rate > 0.0)) throw ConfigError("env: control_rate must be positive");
  if (substeps < 1) throw ConfigError("env: substeps must be at least 1");
  if (horizon < 1) throw ConfigError("env: horizon must be at least 1");
  if (!(episode_duration > 0.0)) throw ConfigError("env: episode_duration must be positive");
  for (const auto* v : {&kp, &kd, &inertia}) {
    if (!v->empty() && v->size() != static_cast<std::size_t>(kArmDofs)) {
      throw ConfigError("env: gain and inertia vectors need 4 entries");
    }
    for (double x : *v) {
      if (!(x > 0.0)) throw ConfigError("env: gains and inertias must be positive");
    }
  }
  if (!torque_limit.empty() && torque_limit.size() != static_cast<std::size_t>(kArmDofs)) {
    throw ConfigError("env: torque_limit needs 4 entries");
  }
  for (double x : torque_limit) {
    if (!(x >= 0.0)) throw ConfigError("env: torque limits must be non-negative");
  }
  for (int d = 0; d < kArmDofs; ++d) {
    if (!(lower[d] <= upper[d])) throw ConfigError("env: joint lower limit above upper limit");
  }
  double front = 0.0, all = 0.0;
  for (int c = 0; c < 8; ++c) {
    if (!(target_weights[c] >= 0.0)) throw ConfigError("env: target weights must be non-negative");
    all += target_weights[c];
    if (Octant::from_cell(c).front) front += target_weights[c];
  }
  if (targets.empty() && !((allow_back ? all : front) > 0.0)) throw ConfigError("env: no target cell has weight");
  reward.validate();
  if (clips.empty() && reward.w_imitation > 0.0) {
    throw ConfigError("env: imitation weight needs at least one reference clip");
  }
}

PointingEnv::PointingEnv(EnvConfig config)
    : cfg_((config.validate(), std::move(config))),
      arm_(cfg_.skeleton, cfg_.hand, rest_pose(cfg_.skeleton, standard_root())) {
  const auto world = world_rotations(cfg_.skeleton, arm_.base());
  frame_inv_ = world[static_cast<std::size_t>(cfg_.skeleton.joint(arm_.joints().shoulder).parent)].conjugate();
  inertia_ = from_vector(cfg_.inertia, default_inertia(arm_), "inertia");
  ArmAngles kp{}, kd{}, tl{};
  for (int d = 0; d < kArmDofs; ++d) {
    kp[d] = 60.0 * inertia_[d];
    tl[d] = 400.0 * inertia_[d];
  }
  kp_ = from_vector(cfg_.kp, kp, "kp");
  for (int d = 0; d < kArmDofs; ++d) kd[d] = 2.0 * std::sqrt(kp_[d] * inertia_[d]);
  kd_ = from_vector(cfg_.kd, kd, "kd");
  torque_limit_ = from_vector(cfg_.torque_limit, tl, "torque_limit");
  for (const Clip& c : cfg_.clips) refs_.push_back(make_reference(c, arm_));
}

int PointingEnv::episode_steps(int clip) const {
  const double dur = clip >= 0 ? refs_.at(static_cast<std::size_t>(clip)).duration() : cfg_.episode_duration;
  const int n = static_cast<int>(std::ceil(dur * cfg_.control_rate - 1e-9));
  return std::clamp(n, 1, cfg_.horizon);
}

int PointingEnv::sample_clip(std::mt19937_64& rng) const {
  if (refs_.empty()) return -1;
  std::uniform_int_distribution<int> pick(0, static_cast<int>(refs_.size()) - 1);
  return pick(rng);
}

Vec3 PointingEnv::sample_target(int clip, std::mt19937_64& rng) const {
  if (clip >= 0 && cfg_.clip_targets && refs_.at(static_cast<std::size_t>(clip)).has_target) {
    return refs_[static_cast<std::size_t>(clip)].target;
  }
  if (!cfg_.targets.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, cfg_.targets.size() - 1);
    return cfg_.targets[pick(rng)];
  }
  std::vector<double> w(8);
  for (int c = 0; c < 8; ++c) {
    w[static_cast<std::size_t>(c)] = (cfg_.allow_back || Octant::from_cell(c).front) ? cfg_.target_weights[c] : 0.0;
  }
  std::discrete_distribution<int> cell(w.begin(), w.end());
  return sample_octant_target(cfg_.skeleton, cfg_.hand, Octant::from_cell(cell(rng)), rng);
}

std::vector<double> PointingEnv::observe() const {
  std::vector<double> o;
  o.reserve(kObservationSize);
  for (double v : state_.q) o.push_back(v);
  for (double v : state_.qdot) o.push_back(v);
  o.push_back(state_.phase);
  const auto pts = arm_.points(state_.q);
  for (const Vec3& p : {state_.target, pts.hand, pts.elbow}) {
    const Vec3 l = frame_inv_.rotate(p - arm_.shoulder());
    o.insert(o.end(), {l.x, l.y, l.z});
  }
  return o;
}

std::vector<double> PointingEnv::reset(const Vec3& target, int clip, std::uint64_t seed) {
  if (clip < -1 || clip >= static_cast<int>(refs_.size())) throw Error("env: clip index out of range");
  if (!is_finite(target) || !arm_.shell().contains(distance(target, arm_.shoulder()))) {
    throw TargetOutOfRange("target at distance " + std::to_string(distance(target, arm_.shoulder())) +
                           " m from the shoulder lies outside the pointing shell");
  }
  clip_ = clip;
  total_steps_ = episode_steps(clip);
  state_ = EnvState{};
  state_.target = target;
  if (cfg_.reference_state_init && clip >= 0) {
    std::mt19937_64 rng(seed);
    const int k = std::uniform_int_distribution<int>(0, total_steps_ - 1)(rng);
    const ReferenceMotion& ref = refs_[static_cast<std::size_t>(clip)];
    state_.steps = k;
    state_.phase = std::min(1.0, k / (ref.duration() * cfg_.control_rate));
    state_.q = ref.angles_at(state_.phase);
    state_.qdot = ref.velocity_at(state_.phase);
    for (int d = 0; d < kArmDofs; ++d) state_.q[d] = std::clamp(state_.q[d], cfg_.lower[d], cfg_.upper[d]);
  }
  done_ = false;
  return observe();
}

StepInfo PointingEnv::evaluate(const EnvState& s, int clip) const {
  StepInfo info;
  const auto pts = arm_.points(s.q);
  info.theta_hat = pointing_precision({pts.elbow, pts.hand, s.target});
  info.r_task = pointing_reward(info.theta_hat);
  if (clip >= 0) {
    const ReferenceMotion& ref = refs_.at(static_cast<std::size_t>(clip));
    const ImitationState sim{arm_.pose(s.q), {s.qdot.begin(), s.qdot.end()}};
    const ArmAngles rv = ref.velocity_at(s.phase);
    const ImitationState want{arm_.pose(ref.angles_at(s.phase)), {rv.begin(), rv.end()}};
    const ImitationResult r = imitation_reward(cfg_.skeleton, sim, want, cfg_.reward);
    info.terms = r.terms;
    info.r_imitation = r.total;
  } else {
    info.terms = {0.0, 0.0, 0.0, 0.0};
  }
  info.reward = combined_reward(info.r_imitation, info.r_task, cfg_.reward);
  return info;
}

StepResult PointingEnv::step(std::span<const double> action) {
  if (done_) throw SteppedAfterDone("step called on a finished episode; call reset first");
  if (action.size() != static_cast<std::size_t>(kArmDofs)) {
    throw DimensionMismatch("action has " + std::to_string(action.size()) + " entries, expected 4");
  }
  ArmAngles a{};
  for (int d = 0; d < kArmDofs; ++d) {
    if (!std::isfinite(action[static_cast<std::size_t>(d)])) throw Error("env: non-finite action");
    a[d] = std::clamp(action[static_cast<std::size_t>(d)], cfg_.lower[d], cfg_.upper[d]);
  }
  const double dt = 1.0 / (cfg_.control_rate * cfg_.substeps);
  for (int k = 0; k < cfg_.substeps; ++k) {
    for (int d = 0; d < kArmDofs; ++d) {
      double& q = state_.q[d];
      double& v = state_.qdot[d];
      const double tau = std::clamp(kp_[d] * (a[d] - q) - kd_[d] * v, -torque_limit_[d], torque_limit_[d]);
      v += tau / inertia_[d] * dt;
      q += v * dt;
      if (q < cfg_.lower[d] || q > cfg_.upper[d]) {
        q = std::clamp(q, cfg_.lower[d], cfg_.upper[d]);
        v = 0.0;
      }
    }
  }
  ++state_.steps;
  const double dur = clip_ >= 0 ? refs_[static_cast<std::size_t>(clip_)].duration() : cfg_.episode_duration;
  state_.phase = std::min(1.0, state_.steps / (dur * cfg_.control_rate));
  if (state_.steps >= total_steps_) state_.phase = 1.0;

  StepResult r;
  r.info = evaluate(state_, clip_);
  done_ = state_.phase >= 1.0 || state_.steps >= cfg_.horizon;
  r.done = done_;
  r.observation = observe();
  return r;
}

Trajectory PointingEnv::run_episode(Policy& policy, const Vec3& target, int clip, std::mt19937_64& rng) {
  if (policy.observation_size() != observation_size() || policy.action_size() != action_size()) {
    throw DimensionMismatch("policy dimensions do not match the environment");
  }
  Trajectory t;
  t.target = target;
  t.clip = clip;
  std::vector<double> obs = reset(target, clip, rng());
  while (!done_) {
    TrajectoryStep s;
    s.action = policy.act(obs, rng);
    StepResult r = step(s.action);
    s.observation = std::move(obs);
    s.state = state_;
    s.info = r.info;
    s.done = r.done;
    t.steps.push_back(std::move(s));
    obs = std::move(r.observation);
  }
  return t;
}

std::vector<Trajectory> PointingEnv::rollout(Policy& policy, int episodes, std::uint64_t seed) {
  if (episodes < 0) throw Error("rollout: negative episode count");
  std::mt19937_64 rng(seed);
  std::vector<Trajectory> out;
  for (int e = 0; e < episodes; ++e) {
    const int clip = sample_clip(rng);
    const Vec3 target = sample_target(clip, rng);
    out.push_back(run_episode(policy, target, clip, rng));
  }
  return out;
}

std::vector<Trajectory> PointingEnv::rollout_targets(Policy& policy, std::span<const Vec3> targets,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int clip = refs_.size() == 1 ? 0 : -1;
  std::vector<Trajectory> out;
  for (const Vec3& t : targets) out.push_back(run_episode(policy, t, clip, rng));
  return out;
}

ScriptedExpert::ScriptedExpert(const PointingEnv& env, double alignment_error)
    : arm_(env.arm()), alignment_error_(alignment_error) {
  const auto world = world_rotations(arm_.skeleton(), arm_.base());
  frame_ = world[static_cast<std::size_t>(arm_.skeleton().joint(arm_.joints().shoulder).parent)];
}

std::vector<double> ScriptedExpert::act(std::span<const double> obs, std::mt19937_64&) {
  const Vec3 target = arm_.shoulder() + frame_.rotate(Vec3{obs[9], obs[10], obs[11]});
  const ArmAngles q = arm_.pointing_hold(target, alignment_error_);
  return {q.begin(), q.end()};
}

RandomPolicy::RandomPolicy(const PointingEnv& env) : lower_(env.config().lower), upper_(env.config().upper) {}

std::vector<double> RandomPolicy::act(std::span<const double>, std::mt19937_64& rng) {
  std::vector<double> a(kArmDofs);
  for (int d = 0; d < kArmDofs; ++d) {
    a[static_cast<std::size_t>(d)] = std::uniform_real_distribution<double>(lower_[d], upper_[d])(rng);
  }
  return a;
}

ReplayPolicy::ReplayPolicy(const PointingEnv& env, int clip)
    : ref_(&env.references().at(static_cast<std::size_t>(clip))),
      phase_step_(1.0 / (env.references()[static_cast<std::size_t>(clip)].duration() * env.config().control_rate)) {}

std::vector<double> ReplayPolicy::act(std::span<const double> obs, std::mt19937_64&) {
  const ArmAngles q = ref_->angles_at(obs[8] + phase_step_);
  return {q.begin(), q.end()};
}

void write_trajectories_jsonl(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (std::size_t e = 0; e < trajectories.size(); ++e) {
    const Trajectory& t = trajectories[e];
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      const TrajectoryStep& s = t.steps[k];
      nlohmann::json j;
      j["episode"] = e;
      j["step"] = k;
      j["clip"] = t.clip;
      j["target"] = {t.target.x, t.target.y, t.target.z};
      j["phase"] = s.state.phase;
      j["q"] = s.state.q;
      j["qdot"] = s.state.qdot;
      j["action"] = s.action;
      j["reward"] = s.info.reward;
      j["r_I"] = s.info.r_imitation;
      j["r_G"] = s.info.r_task;
      j["theta_hat"] = s.info.theta_hat;
      j["terms"] = {{"pose", s.info.terms.pose},
                    {"velocity", s.info.terms.velocity},
                    {"end_effector", s.info.terms.end_effector},
                    {"com", s.info.terms.com}};
      j["done"] = s.done;
      out << j.dump() << '\n';
    }
  }
}

}  // namespace pointbench

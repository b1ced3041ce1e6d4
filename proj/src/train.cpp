#include "pointbench/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pointbench/error.hpp"

namespace pointbench {

using nlohmann::json;

std::string_view mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::DM: return "dm";
    case TrainMode::DMWithReward: return "dm-wr";
    case TrainMode::AMP: return "amp";
    case TrainMode::TaskOnly: return "task-only";
  }
  return "dm";
}

TrainMode parse_mode(std::string_view s) {
  for (TrainMode m : {TrainMode::DM, TrainMode::DMWithReward, TrainMode::AMP, TrainMode::TaskOnly}) {
    if (mode_name(m) == s) return m;
  }
  throw ConfigError("unknown training mode '" + std::string(s) + "' (expected dm, dm-wr, amp or task-only)");
}

RewardConfig mode_rewards(TrainMode mode, const RewardConfig& base) {
  RewardConfig r = base;
  switch (mode) {
    case TrainMode::DM:
      r.w_imitation = 1.0;
      r.w_task = 0.0;
      break;
    case TrainMode::TaskOnly:
      r.w_imitation = 0.0;
      r.w_task = 1.0;
      break;
    case TrainMode::DMWithReward:
    case TrainMode::AMP:
      if (!(r.w_imitation > 0.0 && r.w_task > 0.0)) {
        throw ConfigError(std::string(mode_name(mode)) + " needs positive imitation and task weights");
      }
      break;
  }
  r.validate();
  return r;
}

Clip truncate_at_hold(const Clip& clip) {
  if (clip.annotations.empty()) throw Error("clip '" + clip.source + "' has no annotation to truncate at");
  Clip c = clip;
  Annotation& a = c.annotations[0];
  const int end = std::clamp(a.hold_start, 1, clip.frame_count() - 1);
  c.frames.resize(static_cast<std::size_t>(end + 1));
  a.hold_start = end;
  a.offset = end;
  a.peak_velocity = std::min(a.peak_velocity, end);
  c.annotations.resize(1);
  return c;
}

EnvConfig mode_env(const TrainOptions& o) {
  EnvConfig e = o.env;
  e.reward = mode_rewards(o.mode, o.env.reward);
  if (o.mode == TrainMode::TaskOnly) {
    e.clips.clear();
  } else {
    if (e.clips.empty()) throw ConfigError(std::string(mode_name(o.mode)) + " training needs reference clips");
    if (o.mode == TrainMode::AMP) {
      for (Clip& c : e.clips) c = truncate_at_hold(c);
    }
  }
  return e;
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mlp_json(const Mlp& m) { return {{"sizes", m.sizes()}, {"parameters", vec_json(m.parameters())}}; }

Mlp json_mlp(const json& j) {
  Mlp m(j.at("sizes").get<std::vector<int>>());
  m.set_parameters(json_vec(j.at("parameters")));
  return m;
}

json adam_json(const Adam& a) {
  return {{"lr", a.lr}, {"t", a.t}, {"m", vec_json(a.m)}, {"v", vec_json(a.v)}};
}

Adam json_adam(const json& j) {
  Adam a;
  a.lr = j.at("lr").get<double>();
  a.t = j.at("t").get<long long>();
  a.m = json_vec(j.at("m"));
  a.v = json_vec(j.at("v"));
  return a;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& cols, int rows) {
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    m.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(cols[c].data(), rows);
  }
  return m;
}

}  // namespace

json checkpoint_to_json(const Checkpoint& c) {
  json j;
  j["format"] = "pointbench-checkpoint";
  j["version"] = 1;
  j["mode"] = mode_name(c.mode);
  j["hand"] = side_name(c.hand);
  j["observation_size"] = c.observation_size;
  j["action_size"] = c.action_size;
  j["step"] = c.step;
  j["config_hash"] = c.config_hash;
  j["policy"] = mlp_json(c.policy.mean);
  j["policy"]["log_std"] = vec_json(c.policy.log_std);
  j["value"] = mlp_json(c.value);
  j["discriminator"] = c.discriminator ? mlp_json(*c.discriminator) : json(nullptr);
  j["norm"] = {{"count", c.norm.count()}, {"mean", vec_json(c.norm.mean())}, {"var", vec_json(c.norm.var())}};
  j["optimizers"] = {{"policy", adam_json(c.optimizers.policy)},
                     {"value", adam_json(c.optimizers.value)},
                     {"discriminator", adam_json(c.discriminator_optimizer)}};
  j["rng_state"] = c.rng_state;
  json curve = json::array();
  for (const CurveRow& r : c.curve) {
    curve.push_back({r.step, r.mean_reward, r.mean_r_I, r.mean_r_G, r.kl, r.clip_fraction});
  }
  j["curve"] = curve;
  json disc = json::array();
  for (const DiscriminatorRow& r : c.discriminator_curve) disc.push_back({r.step, r.loss, r.real_score, r.fake_score});
  j["discriminator_curve"] = disc;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "pointbench-checkpoint") throw IncompatibleCheckpoint("not a checkpoint");
    Checkpoint c;
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.hand = parse_side(j.at("hand").get<std::string>());
    c.observation_size = j.at("observation_size").get<int>();
    c.action_size = j.at("action_size").get<int>();
    c.step = j.at("step").get<long long>();
    c.config_hash = j.at("config_hash").get<std::string>();
    c.policy.mean = json_mlp(j.at("policy"));
    c.policy.log_std = json_vec(j.at("policy").at("log_std"));
    c.value = json_mlp(j.at("value"));
    if (!j.at("discriminator").is_null()) c.discriminator = json_mlp(j.at("discriminator"));
    const json& n = j.at("norm");
    c.norm.set(n.at("count").get<double>(), json_vec(n.at("mean")), json_vec(n.at("var")));
    c.optimizers.policy = json_adam(j.at("optimizers").at("policy"));
    c.optimizers.value = json_adam(j.at("optimizers").at("value"));
    c.discriminator_optimizer = json_adam(j.at("optimizers").at("discriminator"));
    c.rng_state = j.at("rng_state").get<std::string>();
    for (const json& r : j.at("curve")) {
      c.curve.push_back({r.at(0).get<long long>(), r.at(1).get<double>(), r.at(2).get<double>(),
                         r.at(3).get<double>(), r.at(4).get<double>(), r.at(5).get<double>()});
    }
    for (const json& r : j.at("discriminator_curve")) {
      c.discriminator_curve.push_back(
          {r.at(0).get<long long>(), r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>()});
    }
    if (c.policy.mean.input_size() != c.observation_size || c.policy.mean.output_size() != c.action_size ||
        c.policy.action_size() != c.action_size || c.value.input_size() != c.observation_size ||
        c.value.output_size() != 1 || c.norm.size() != c.observation_size) {
      throw IncompatibleCheckpoint("checkpoint network shapes are inconsistent");
    }
    return c;
  } catch (const IncompatibleCheckpoint&) {
    throw;
  } catch (const std::exception& e) {
    throw IncompatibleCheckpoint(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out << checkpoint_to_json(c).dump() << '\n';
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IncompatibleCheckpoint("cannot read checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IncompatibleCheckpoint(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

void check_compatible(const Checkpoint& c, const PointingEnv& env) {
  if (c.observation_size != env.observation_size() || c.action_size != env.action_size()) {
    throw IncompatibleCheckpoint(fmt::format("checkpoint expects {} observations / {} actions, env has {} / {}",
                                             c.observation_size, c.action_size, env.observation_size(),
                                             env.action_size()));
  }
  if (c.hand != env.config().hand) {
    throw IncompatibleCheckpoint("checkpoint was trained on the " + std::string(side_name(c.hand)) + " arm");
  }
}

NetPolicy::NetPolicy(const Checkpoint& c, bool deterministic)
    : policy_(c.policy), norm_(c.norm), observation_size_(c.observation_size), deterministic_(deterministic) {}

std::vector<double> NetPolicy::act(std::span<const double> obs, std::mt19937_64& rng) {
  if (obs.size() != static_cast<std::size_t>(observation_size_)) throw DimensionMismatch("observation size");
  const Eigen::VectorXd x =
      norm_.normalize(Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()))).col(0);
  const Eigen::VectorXd a = deterministic_ ? policy_.mean.predict(x) : policy_.sample(x, rng);
  return {a.data(), a.data() + a.size()};
}

Eigen::VectorXd transition_features(const ArmModel& arm, const ArmAngles& q0, const ArmAngles& q1) {
  Eigen::VectorXd f(kTransitionFeatures);
  Eigen::Index i = 0;
  for (const ArmAngles* q : {&q0, &q1}) {
    for (double v : *q) f[i++] = v;
    const auto pts = arm.points(*q);
    for (const Vec3& p : {pts.hand, pts.elbow}) {
      const Vec3 l = p - arm.shoulder();
      f[i++] = l.x;
      f[i++] = l.y;
      f[i++] = l.z;
    }
  }
  return f;
}

Eigen::MatrixXd reference_transitions(const PointingEnv& env) {
  std::vector<Eigen::VectorXd> cols;
  for (std::size_t r = 0; r < env.references().size(); ++r) {
    const ReferenceMotion& ref = env.references()[r];
    const double span = ref.duration() * env.config().control_rate;
    const int steps = env.episode_steps(static_cast<int>(r));
    for (int k = 0; k < steps; ++k) {
      const double p0 = std::min(1.0, k / span), p1 = std::min(1.0, (k + 1) / span);
      cols.push_back(transition_features(env.arm(), ref.angles_at(p0), ref.angles_at(p1)));
    }
  }
  Eigen::MatrixXd m(kTransitionFeatures, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = cols[c];
  return m;
}

Checkpoint train(const TrainOptions& o, const Checkpoint* resume) {
  const TrainConfig& tc = o.train;
  tc.validate();
  PointingEnv env(mode_env(o));
  const int obs_n = env.observation_size(), act_n = env.action_size();
  const bool amp = o.mode == TrainMode::AMP;

  Checkpoint ck;
  std::mt19937_64 rng(tc.seed);
  if (resume) {
    ck = *resume;
    check_compatible(ck, env);
    if (ck.mode != o.mode) throw IncompatibleCheckpoint("checkpoint was trained in mode " + std::string(mode_name(ck.mode)));
    if (amp != ck.discriminator.has_value()) throw IncompatibleCheckpoint("discriminator presence does not match mode");
    std::istringstream in(ck.rng_state);
    in >> rng;
    if (!in) throw IncompatibleCheckpoint("checkpoint rng state is unreadable");
  } else {
    ck.mode = o.mode;
    ck.hand = env.config().hand;
    ck.observation_size = obs_n;
    ck.action_size = act_n;
    std::vector<int> ps{obs_n};
    ps.insert(ps.end(), tc.policy_hidden.begin(), tc.policy_hidden.end());
    ps.push_back(act_n);
    ck.policy.mean = Mlp(ps, rng, 0.01);
    ck.policy.log_std = Eigen::VectorXd::Constant(act_n, tc.init_log_std);
    std::vector<int> vs{obs_n};
    vs.insert(vs.end(), tc.value_hidden.begin(), tc.value_hidden.end());
    vs.push_back(1);
    ck.value = Mlp(vs, rng);
    if (amp) {
      std::vector<int> ds{kTransitionFeatures};
      ds.insert(ds.end(), tc.discriminator_hidden.begin(), tc.discriminator_hidden.end());
      ds.push_back(1);
      ck.discriminator = Mlp(ds, rng);
    }
    ck.norm = RunningNorm(obs_n);
  }
  ck.config_hash = o.config_hash;
  ck.discriminator_optimizer.lr = tc.lr_discriminator;
  const Eigen::MatrixXd real = amp ? reference_transitions(env) : Eigen::MatrixXd();
  const RewardConfig& weights = env.config().reward;

  while (ck.step < tc.total_steps) {
    std::vector<std::vector<double>> obs_raw;
    std::vector<Eigen::VectorXd> actions;
    std::vector<double> r_task, r_imit, rewards;
    std::vector<char> dones;
    std::vector<Eigen::VectorXd> feats;
    while (static_cast<int>(obs_raw.size()) < tc.batch_size) {
      const int clip = env.sample_clip(rng);
      const Vec3 target = env.sample_target(clip, rng);
      std::vector<double> obs = env.reset(target, clip, rng());
      while (!env.done()) {
        const Eigen::VectorXd x =
            ck.norm.normalize(Eigen::Map<const Eigen::VectorXd>(obs.data(), obs_n)).col(0);
        const Eigen::VectorXd a = ck.policy.sample(x, rng);
        const ArmAngles q0 = env.state().q;
        StepResult r = env.step(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
        if (amp) feats.push_back(transition_features(env.arm(), q0, env.state().q));
        obs_raw.push_back(std::move(obs));
        actions.push_back(a);
        r_task.push_back(r.info.r_task);
        r_imit.push_back(r.info.r_imitation);
        rewards.push_back(r.info.reward);
        dones.push_back(r.done ? 1 : 0);
        obs = std::move(r.observation);
      }
    }
    const auto n = static_cast<Eigen::Index>(obs_raw.size());
    const Eigen::MatrixXd raw = to_matrix(obs_raw, obs_n);
    Eigen::MatrixXd fake;
    if (amp) {
      fake.resize(kTransitionFeatures, n);
      for (Eigen::Index i = 0; i < n; ++i) fake.col(i) = feats[static_cast<std::size_t>(i)];
      const Eigen::MatrixXd scores = ck.discriminator->forward(fake);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        r_imit[k] = amp_reward(scores(0, i));
        rewards[k] = combined_reward(r_imit[k], r_task[k], weights);
      }
    }

    PpoBatch batch;
    batch.obs = ck.norm.normalize(raw);
    batch.actions.resize(act_n, n);
    for (Eigen::Index i = 0; i < n; ++i) batch.actions.col(i) = actions[static_cast<std::size_t>(i)];
    batch.old_log_prob = ck.policy.log_prob(batch.obs, batch.actions);
    const Eigen::RowVectorXd values = ck.value.forward(batch.obs).row(0);
    const std::vector<double> vals(values.data(), values.data() + n);
    const GaeResult g = gae(rewards, vals, dones, tc.gamma, tc.lambda, 0.0);
    batch.advantages = Eigen::Map<const Eigen::VectorXd>(g.advantages.data(), n);
    batch.returns = Eigen::Map<const Eigen::VectorXd>(g.returns.data(), n);

    const PpoDiagnostics d = ppo_update(ck.policy, ck.value, ck.optimizers, batch, tc, rng);
    if (amp) {
      const DiscriminatorStats s = train_discriminator(*ck.discriminator, ck.discriminator_optimizer, real, fake,
                                                       tc.discriminator_steps, tc.minibatch_size, rng);
      ck.discriminator_curve.push_back({ck.step + n, s.loss, s.real_score, s.fake_score});
    }
    ck.norm.update(raw);
    ck.step += n;

    CurveRow row;
    row.step = ck.step;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      row.mean_reward += rewards[k];
      row.mean_r_I += r_imit[k];
      row.mean_r_G += r_task[k];
    }
    row.mean_reward /= static_cast<double>(n);
    row.mean_r_I /= static_cast<double>(n);
    row.mean_r_G /= static_cast<double>(n);
    row.kl = d.approx_kl;
    row.clip_fraction = d.clip_fraction;
    ck.curve.push_back(row);

    std::ostringstream state;
    state << rng;
    ck.rng_state = state.str();
    if (o.on_update) o.on_update(ck);
  }
  return ck;
}

void write_curve_csv(std::ostream& out, std::span<const CurveRow> rows) {
  out << "step,mean_reward,mean_r_I,mean_r_G,kl,clip_fraction\n";
  for (const CurveRow& r : rows) {
    out << fmt::format("{},{},{},{},{},{}\n", r.step, r.mean_reward, r.mean_r_I, r.mean_r_G, r.kl, r.clip_fraction);
  }
}

void write_discriminator_csv(std::ostream& out, std::span<const DiscriminatorRow> rows) {
  out << "step,loss,real_score,fake_score\n";
  for (const DiscriminatorRow& r : rows) {
    out << fmt::format("{},{},{},{}\n", r.step, r.loss, r.real_score, r.fake_score);
  }
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace pointbench

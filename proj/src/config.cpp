#include "pointbench/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "pointbench/error.hpp"

namespace pointbench {

namespace {

using nlohmann::json;

/// Reads an object field by field and rejects whatever it did not consume.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    read(*it, field(key), out);
  }

  bool has(const char* key) const { return j_.contains(key); }

  Reader child(const char* key) {
    seen_.insert(key);
    return Reader(j_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw SchemaError(field(k), "unknown field");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  static void read(const json& v, const std::string& f, double& out) {
    if (!v.is_number()) throw SchemaError(f, "expected a number");
    out = v.get<double>();
  }
  static void read(const json& v, const std::string& f, int& out) {
    if (!v.is_number_integer()) throw SchemaError(f, "expected an integer");
    out = v.get<int>();
  }
  static void read(const json& v, const std::string& f, long long& out) {
    if (!v.is_number_integer()) throw SchemaError(f, "expected an integer");
    out = v.get<long long>();
  }
  static void read(const json& v, const std::string& f, std::uint64_t& out) {
    if (!v.is_number_unsigned()) throw SchemaError(f, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void read(const json& v, const std::string& f, bool& out) {
    if (!v.is_boolean()) throw SchemaError(f, "expected true or false");
    out = v.get<bool>();
  }
  static void read(const json& v, const std::string& f, std::string& out) {
    if (!v.is_string()) throw SchemaError(f, "expected a string");
    out = v.get<std::string>();
  }
  static void read(const json& v, const std::string& f, std::filesystem::path& out) {
    std::string s;
    read(v, f, s);
    out = s;
  }
  static void read(const json& v, const std::string& f, Side& out) {
    std::string s;
    read(v, f, s);
    if (s != "left" && s != "right") throw SchemaError(f, "expected \"left\" or \"right\"");
    out = s == "left" ? Side::Left : Side::Right;
  }
  static void read(const json& v, const std::string& f, std::optional<Side>& out) {
    if (v.is_null()) {
      out.reset();
      return;
    }
    Side s{};
    read(v, f, s);
    out = s;
  }
  static void read(const json& v, const std::string& f, TrainMode& out) {
    std::string s;
    read(v, f, s);
    try {
      out = parse_mode(s);
    } catch (const Error& e) {
      throw SchemaError(f, e.what());
    }
  }
  static void read(const json& v, const std::string& f, Vec3& out) {
    if (!v.is_array() || v.size() != 3) throw SchemaError(f, "expected [x, y, z]");
    double c[3];
    for (std::size_t i = 0; i < 3; ++i) read(v[i], f, c[i]);
    out = {c[0], c[1], c[2]};
  }
  template <class T, std::size_t N>
  static void read(const json& v, const std::string& f, std::array<T, N>& out) {
    if (!v.is_array() || v.size() != N) throw SchemaError(f, "expected " + std::to_string(N) + " entries");
    for (std::size_t i = 0; i < N; ++i) read(v[i], f + "[" + std::to_string(i) + "]", out[i]);
  }
  template <class T>
  static void read(const json& v, const std::string& f, std::vector<T>& out) {
    if (!v.is_array()) throw SchemaError(f, "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      T x{};
      read(v[i], f + "[" + std::to_string(i) + "]", x);
      out.push_back(std::move(x));
    }
  }
  static void read(const json& v, const std::string& f, ModelSource& out) {
    Reader r(v, f);
    r.get("name", out.name);
    r.get("checkpoint", out.checkpoint);
    r.finish();
    if (out.name.empty()) throw SchemaError(f + ".name", "required");
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_env(Reader r, EnvConfig& e) {
  r.get("hand", e.hand);
  r.get("control_rate", e.control_rate);
  r.get("substeps", e.substeps);
  r.get("kp", e.kp);
  r.get("kd", e.kd);
  r.get("inertia", e.inertia);
  r.get("lower", e.lower);
  r.get("upper", e.upper);
  r.get("torque_limit", e.torque_limit);
  r.get("target_weights", e.target_weights);
  r.get("allow_back", e.allow_back);
  r.get("targets", e.targets);
  r.get("clip_targets", e.clip_targets);
  r.get("horizon", e.horizon);
  r.get("episode_duration", e.episode_duration);
  r.get("reference_state_init", e.reference_state_init);
  r.finish();
}

void read_reward(Reader r, RewardConfig& w) {
  r.get("w_imitation", w.w_imitation);
  r.get("w_task", w.w_task);
  r.get("w_pose", w.w_pose);
  r.get("w_velocity", w.w_velocity);
  r.get("w_end_effector", w.w_end_effector);
  r.get("w_com", w.w_com);
  r.get("k_pose", w.k_pose);
  r.get("k_velocity", w.k_velocity);
  r.get("k_end_effector", w.k_end_effector);
  r.get("k_com", w.k_com);
  r.finish();
}

void read_train(Reader r, TrainConfig& t) {
  r.get("lr_policy", t.lr_policy);
  r.get("lr_value", t.lr_value);
  r.get("lr_discriminator", t.lr_discriminator);
  r.get("clip", t.clip);
  r.get("gamma", t.gamma);
  r.get("lambda", t.lambda);
  r.get("batch_size", t.batch_size);
  r.get("minibatch_size", t.minibatch_size);
  r.get("epochs", t.epochs);
  r.get("total_steps", t.total_steps);
  r.get("policy_hidden", t.policy_hidden);
  r.get("value_hidden", t.value_hidden);
  r.get("discriminator_hidden", t.discriminator_hidden);
  r.get("init_log_std", t.init_log_std);
  r.get("max_grad_norm", t.max_grad_norm);
  r.get("discriminator_steps", t.discriminator_steps);
  r.finish();
}

void read_segment(Reader r, SegmentParams& s) {
  r.get("min_peak_height", s.min_peak_height);
  r.get("min_prominence", s.min_prominence);
  r.get("rest_threshold", s.rest_threshold);
  r.get("hold_speed_fraction", s.hold_speed_fraction);
  r.finish();
}

void read_synth(Reader r, CorpusConfig& c) {
  r.get("count", c.count);
  r.get("weights", c.weights);
  r.get("hand", c.hand);
  r.get("targets", c.targets);
  r.get("rise_time", c.base.rise_time);
  r.get("hold_time", c.base.hold_time);
  r.get("retract_time", c.base.retract_time);
  r.get("alignment_error", c.base.alignment_error);
  r.get("noise_amplitude", c.base.noise_amplitude);
  r.get("fps", c.base.fps);
  r.get("lead_time", c.base.lead_time);
  r.get("tail_time", c.base.tail_time);
  r.finish();
}

void read_eval(Reader r, EvalParams& e) {
  r.get("heldout_targets", e.heldout_targets);
  r.get("target_seed", e.target_seed);
  r.get("targets", e.targets);
  r.get("seeds", e.seeds);
  r.get("profile_bins", e.profile_bins);
  r.get("models", e.models);
  r.finish();
}

json vec3(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json vec3s(const std::vector<Vec3>& vs) {
  json a = json::array();
  for (const Vec3& v : vs) a.push_back(vec3(v));
  return a;
}

}  // namespace

void ExperimentConfig::validate() const {
  EnvConfig probe = env;
  probe.reward = mode_rewards(TrainMode::TaskOnly, env.reward);
  probe.validate();
  env.reward.validate();
  mode_rewards(mode, env.reward);
  train.validate();
  synth.base.validate();
  if (synth.count < 1 && synth.targets.empty()) throw ConfigError("synth.count must be at least 1");
  double w = 0.0;
  for (double x : synth.weights) {
    if (!(x >= 0.0)) throw ConfigError("synth.weights must be non-negative");
    w += x;
  }
  if (!(w > 0.0)) throw ConfigError("synth.weights must not all be zero");
  if (eval.heldout_targets < 1 && eval.targets.empty()) throw ConfigError("eval needs at least one target");
  if (eval.profile_bins < 2) throw ConfigError("eval.profile_bins must be at least 2");
  if (!(segment.min_peak_height >= 0.0) || !(segment.min_prominence >= 0.0) || !(segment.rest_threshold >= 0.0) ||
      !(segment.hold_speed_fraction > 0.0 && segment.hold_speed_fraction < 1.0)) {
    throw ConfigError("segment thresholds out of range");
  }
  if (clip_count < 0) throw ConfigError("clip_count must be non-negative");
  if (!(bvh_length_scale > 0.0)) throw ConfigError("bvh_length_scale must be positive");
  if (out.empty()) throw ConfigError("out directory must be set");
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Reader r(j, "");
  if (r.has("env")) read_env(r.child("env"), c.env);
  if (r.has("reward")) read_reward(r.child("reward"), c.env.reward);
  if (r.has("train")) read_train(r.child("train"), c.train);
  if (r.has("segment")) read_segment(r.child("segment"), c.segment);
  if (r.has("synth")) read_synth(r.child("synth"), c.synth);
  if (r.has("eval")) read_eval(r.child("eval"), c.eval);
  r.get("mode", c.mode);
  r.get("clips", c.clips);
  r.get("clip_count", c.clip_count);
  r.get("bvh_length_scale", c.bvh_length_scale);
  r.get("out", c.out);
  r.get("seed", c.seed);
  r.finish();
  if (!base_dir.empty()) {
    for (auto& p : c.clips) {
      if (p.is_relative()) p = std::filesystem::absolute(base_dir / p).lexically_normal();
    }
    for (auto& m : c.eval.models) {
      if (!m.checkpoint.empty() && m.checkpoint.is_relative()) {
        m.checkpoint = std::filesystem::absolute(base_dir / m.checkpoint).lexically_normal();
      }
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string(), "cannot open config file");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_experiment_config(s.str(), std::filesystem::absolute(path).parent_path());
}

json to_json(const ExperimentConfig& c) {
  const EnvConfig& e = c.env;
  const RewardConfig& w = e.reward;
  const TrainConfig& t = c.train;
  json j;
  j["env"] = {{"hand", side_name(e.hand)},
              {"control_rate", e.control_rate},
              {"substeps", e.substeps},
              {"kp", e.kp},
              {"kd", e.kd},
              {"inertia", e.inertia},
              {"lower", e.lower},
              {"upper", e.upper},
              {"torque_limit", e.torque_limit},
              {"target_weights", e.target_weights},
              {"allow_back", e.allow_back},
              {"targets", vec3s(e.targets)},
              {"clip_targets", e.clip_targets},
              {"horizon", e.horizon},
              {"episode_duration", e.episode_duration},
              {"reference_state_init", e.reference_state_init}};
  j["reward"] = {{"w_imitation", w.w_imitation}, {"w_task", w.w_task},
                 {"w_pose", w.w_pose},           {"w_velocity", w.w_velocity},
                 {"w_end_effector", w.w_end_effector}, {"w_com", w.w_com},
                 {"k_pose", w.k_pose},           {"k_velocity", w.k_velocity},
                 {"k_end_effector", w.k_end_effector}, {"k_com", w.k_com}};
  j["train"] = {{"lr_policy", t.lr_policy},
                {"lr_value", t.lr_value},
                {"lr_discriminator", t.lr_discriminator},
                {"clip", t.clip},
                {"gamma", t.gamma},
                {"lambda", t.lambda},
                {"batch_size", t.batch_size},
                {"minibatch_size", t.minibatch_size},
                {"epochs", t.epochs},
                {"total_steps", t.total_steps},
                {"policy_hidden", t.policy_hidden},
                {"value_hidden", t.value_hidden},
                {"discriminator_hidden", t.discriminator_hidden},
                {"init_log_std", t.init_log_std},
                {"max_grad_norm", t.max_grad_norm},
                {"discriminator_steps", t.discriminator_steps}};
  j["segment"] = {{"min_peak_height", c.segment.min_peak_height},
                  {"min_prominence", c.segment.min_prominence},
                  {"rest_threshold", c.segment.rest_threshold},
                  {"hold_speed_fraction", c.segment.hold_speed_fraction}};
  const SynthParams& b = c.synth.base;
  j["synth"] = {{"count", c.synth.count},
                {"weights", c.synth.weights},
                {"hand", c.synth.hand ? json(side_name(*c.synth.hand)) : json(nullptr)},
                {"targets", vec3s(c.synth.targets)},
                {"rise_time", b.rise_time},
                {"hold_time", b.hold_time},
                {"retract_time", b.retract_time},
                {"alignment_error", b.alignment_error},
                {"noise_amplitude", b.noise_amplitude},
                {"fps", b.fps},
                {"lead_time", b.lead_time},
                {"tail_time", b.tail_time}};
  json models = json::array();
  for (const ModelSource& m : c.eval.models) models.push_back({{"name", m.name}, {"checkpoint", m.checkpoint.string()}});
  j["eval"] = {{"heldout_targets", c.eval.heldout_targets},
               {"target_seed", c.eval.target_seed},
               {"targets", vec3s(c.eval.targets)},
               {"seeds", c.eval.seeds},
               {"profile_bins", c.eval.profile_bins},
               {"models", models}};
  j["mode"] = mode_name(c.mode);
  json clips = json::array();
  for (const auto& p : c.clips) clips.push_back(p.string());
  j["clips"] = clips;
  j["clip_count"] = c.clip_count;
  j["bvh_length_scale"] = c.bvh_length_scale;
  j["out"] = c.out.string();
  j["seed"] = c.seed;
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  // where the results go does not change them
  j.erase("out");
  return fnv1a_hex(j.dump());
}

double bvh_units_scale(std::string_view units) {
  if (units == "m") return 1.0;
  if (units == "cm") return 0.01;
  if (units == "mm") return 0.001;
  if (units == "in") return 0.0254;
  throw ConfigError("unknown BVH length unit '" + std::string(units) + "' (expected m, cm, mm or in)");
}

std::vector<Clip> load_clips(const ExperimentConfig& c) {
  std::vector<std::filesystem::path> files;
  for (const auto& p : c.clips) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> inside;
      for (const auto& e : std::filesystem::directory_iterator(p)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".json" || ext == ".bvh") && e.path().filename() != "manifest.json") {
          inside.push_back(e.path());
        }
      }
      std::sort(inside.begin(), inside.end());
      files.insert(files.end(), inside.begin(), inside.end());
    } else {
      files.push_back(p);
    }
  }
  if (c.clip_count > 0 && files.size() > static_cast<std::size_t>(c.clip_count)) {
    files.resize(static_cast<std::size_t>(c.clip_count));
  }
  std::vector<Clip> clips;
  clips.reserve(files.size());
  for (const auto& f : files) clips.push_back(read_clip_file(f, c.bvh_length_scale));
  return clips;
}

}  // namespace pointbench

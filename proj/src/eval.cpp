#include "pointbench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "pointbench/error.hpp"
#include "pointbench/reward.hpp"
#include "pointbench/train.hpp"

namespace pointbench {

RewardStats reward_stats(std::span<const double> series) {
  if (series.empty()) throw EmptyInput("reward_stats: empty reward series");
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  RewardStats s;
  s.r_min = *lo;
  s.r_max = *hi;
  s.r_mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
  // summation rounding can push a constant series' mean just outside its extrema
  s.r_mean = std::clamp(s.r_mean, s.r_min, s.r_max);
  return s;
}

Smoothness smoothness(std::span<const double> series, double dt) {
  if (series.size() < 4) {
    throw SeriesTooShort("smoothness needs at least 4 samples, got " + std::to_string(series.size()));
  }
  if (!(dt > 0.0)) throw ConfigError("smoothness: dt must be positive");
  std::vector<double> d(series.begin(), series.end());
  double scale = 0.0;
  for (double v : d) scale = std::max(scale, std::abs(v));
  double out[3];
  for (int order = 0; order < 3; ++order) {
    for (std::size_t i = 0; i + 1 < d.size(); ++i) d[i] = d[i + 1] - d[i];
    d.pop_back();
    // rounding residue of the k-th difference is at most ~2^k eps |x|
    const double floor = std::ldexp(8.0, order) * std::numeric_limits<double>::epsilon() * scale;
    double sum = 0.0;
    for (double v : d) sum += std::abs(v) > floor ? std::abs(v) : 0.0;
    out[order] = sum / static_cast<double>(d.size()) / std::pow(dt, order + 1);
  }
  return {out[0], out[1], out[2]};
}

MeanSd mean_sd(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("mean_sd: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

ModelReport evaluate_policy(PointingEnv& env, Policy& policy, std::string name, std::span<const Vec3> targets,
                            std::span<const std::uint64_t> seeds) {
  if (targets.empty()) throw EmptyInput("evaluation needs at least one target");
  if (seeds.empty()) throw EmptyInput("evaluation needs at least one seed");
  ModelReport m;
  m.name = std::move(name);
  const double rate = env.config().control_rate;
  int index = 0;
  for (std::uint64_t seed : seeds) {
    const std::vector<Trajectory> ts = env.rollout_targets(policy, targets, seed);
    for (const Trajectory& t : ts) {
      EvalRow row;
      row.index = index++;
      row.seed = seed;
      row.target = t.target;
      Vec3 prev = env.arm().points(ArmAngles{}).hand;
      for (const TrajectoryStep& s : t.steps) {
        row.rewards.push_back(s.info.r_task);
        row.theta.push_back(s.info.theta_hat);
        const Vec3 hand = env.arm().points(s.state.q).hand;
        row.hand_speed.push_back(distance(hand, prev) * rate);
        prev = hand;
      }
      row.stats = reward_stats(row.rewards);
      row.smooth = smoothness(row.rewards, 1.0 / rate);
      row.final_theta = row.theta.back();
      m.rows.push_back(std::move(row));
    }
  }
  m.aggregate = aggregate(m.rows);
  return m;
}

EvalAggregate aggregate(std::span<const EvalRow> rows) {
  if (rows.empty()) throw EmptyInput("aggregate: no rows");
  auto column = [&](auto get) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const EvalRow& r : rows) v.push_back(get(r));
    return mean_sd(v);
  };
  EvalAggregate a;
  a.r_max = column([](const EvalRow& r) { return r.stats.r_max; });
  a.r_min = column([](const EvalRow& r) { return r.stats.r_min; });
  a.r_mean = column([](const EvalRow& r) { return r.stats.r_mean; });
  a.vel = column([](const EvalRow& r) { return r.smooth.vel; });
  a.acc = column([](const EvalRow& r) { return r.smooth.acc; });
  a.jerk = column([](const EvalRow& r) { return r.smooth.jerk; });
  a.final_theta = column([](const EvalRow& r) { return r.final_theta; });
  return a;
}

EvalReport compare_models(const EnvConfig& env_config, std::span<const ModelSource> models,
                          std::span<const Vec3> targets, std::span<const std::uint64_t> seeds,
                          const std::string& config_hash) {
  if (targets.empty()) throw EmptyInput("evaluation needs at least one target");
  if (seeds.empty()) throw EmptyInput("evaluation needs at least one seed");
  EnvConfig cfg = env_config;
  cfg.reference_state_init = false;
  PointingEnv env(cfg);

  EvalReport report;
  report.config_hash = config_hash;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.targets.assign(targets.begin(), targets.end());
  report.dt = 1.0 / cfg.control_rate;
  for (const ModelSource& src : models) {
    std::unique_ptr<Policy> policy;
    std::string hash;
    try {
      if (src.checkpoint.empty()) {
        if (src.name == "expert") {
          policy = std::make_unique<ScriptedExpert>(env);
        } else if (src.name == "random") {
          policy = std::make_unique<RandomPolicy>(env);
        } else {
          throw ConfigError("unknown built-in model '" + src.name + "' (expected expert or random)");
        }
      } else {
        const Checkpoint c = load_checkpoint(src.checkpoint);
        check_compatible(c, env);
        hash = c.config_hash;
        policy = std::make_unique<NetPolicy>(c, true);
      }
    } catch (const Error& e) {
      ModelReport m;
      m.name = src.name;
      m.error = e.what();
      report.models.push_back(std::move(m));
      continue;
    }
    ModelReport m = evaluate_policy(env, *policy, src.name, targets, seeds);
    m.config_hash = hash;
    report.models.push_back(std::move(m));
  }
  return report;
}

std::vector<Vec3> heldout_targets(const PointingEnv& env, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("held-out target count must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(env.sample_target(-1, rng));
  return out;
}

Profile export_profile(std::span<const std::vector<double>> series, int bins) {
  if (series.empty()) throw EmptyInput("profile export needs at least one series");
  for (const auto& s : series) {
    if (s.empty()) throw EmptyInput("profile export: empty series");
  }
  return mean_profile(series, bins);
}

std::vector<double> precision_series(const Clip& clip, const Segment& seg) {
  std::vector<double> out;
  for (const auto& v : precision_profile(clip, seg)) {
    if (v) out.push_back(*v);
  }
  return out;
}

std::vector<double> clip_reward_series(const Clip& clip, const Segment& seg, double rate) {
  if (!(rate > 0.0)) throw ConfigError("sample rate must be positive");
  const auto profile = precision_profile(clip, seg);
  const double stride = clip.fps / rate;
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const auto i = static_cast<std::size_t>(std::lround(k * stride));
    if (i >= profile.size()) break;
    if (profile[i]) out.push_back(pointing_reward(*profile[i]));
  }
  return out;
}

namespace {

std::string num(double v) { return fmt::format("{}", v); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_reward_table(std::ostream& out, const EvalReport& report) {
  out << "model,clip,seed,target_x,target_y,target_z,r_max,r_min,r_mean,r_max_sd,r_min_sd,r_mean_sd\n";
  for (const ModelReport& m : report.models) {
    if (m.error) continue;
    for (const EvalRow& r : m.rows) {
      out << fmt::format("{},{},{},{},{},{},{},{},{},,,\n", m.name, r.index, r.seed, num(r.target.x), num(r.target.y),
                         num(r.target.z), num(r.stats.r_max), num(r.stats.r_min), num(r.stats.r_mean));
    }
    const EvalAggregate& a = m.aggregate;
    out << fmt::format("{},aggregate,,,,,{},{},{},{},{},{}\n", m.name, num(a.r_max.mean), num(a.r_min.mean),
                       num(a.r_mean.mean), num(a.r_max.sd), num(a.r_min.sd), num(a.r_mean.sd));
  }
}

void write_smoothness_table(std::ostream& out, const EvalReport& report) {
  out << "model,clip,seed,dt,vel_r,acc_r,jerk_r,vel_r_sd,acc_r_sd,jerk_r_sd\n";
  for (const ModelReport& m : report.models) {
    if (m.error) continue;
    for (const EvalRow& r : m.rows) {
      out << fmt::format("{},{},{},{},{},{},{},,,\n", m.name, r.index, r.seed, num(report.dt), num(r.smooth.vel),
                         num(r.smooth.acc), num(r.smooth.jerk));
    }
    const EvalAggregate& a = m.aggregate;
    out << fmt::format("{},aggregate,,{},{},{},{},{},{},{}\n", m.name, num(report.dt), num(a.vel.mean),
                       num(a.acc.mean), num(a.jerk.mean), num(a.vel.sd), num(a.acc.sd), num(a.jerk.sd));
  }
}

void write_profile_csv(std::ostream& out, const Profile& profile) {
  out << "bin,mean,sd\n";
  for (std::size_t i = 0; i < profile.mean.size(); ++i) {
    out << fmt::format("{},{},{}\n", i, num(profile.mean[i]), num(profile.sd[i]));
  }
}

nlohmann::json report_to_json(const EvalReport& report) {
  using nlohmann::json;
  auto ms = [](const MeanSd& v) { return json{{"mean", v.mean}, {"sd", v.sd}}; };
  json j;
  j["config_hash"] = report.config_hash;
  j["seeds"] = report.seeds;
  j["dt"] = report.dt;
  j["sd_convention"] = "sample";
  j["targets"] = json::array();
  for (const Vec3& t : report.targets) j["targets"].push_back({t.x, t.y, t.z});
  j["models"] = json::array();
  for (const ModelReport& m : report.models) {
    json jm;
    jm["name"] = m.name;
    jm["config_hash"] = m.config_hash;
    if (m.error) {
      jm["error"] = *m.error;
      j["models"].push_back(std::move(jm));
      continue;
    }
    jm["rows"] = json::array();
    for (const EvalRow& r : m.rows) {
      jm["rows"].push_back({{"clip", r.index},
                            {"seed", r.seed},
                            {"target", {r.target.x, r.target.y, r.target.z}},
                            {"r_max", r.stats.r_max},
                            {"r_min", r.stats.r_min},
                            {"r_mean", r.stats.r_mean},
                            {"vel_r", r.smooth.vel},
                            {"acc_r", r.smooth.acc},
                            {"jerk_r", r.smooth.jerk},
                            {"final_theta", r.final_theta}});
    }
    const EvalAggregate& a = m.aggregate;
    jm["aggregate"] = {{"r_max", ms(a.r_max)}, {"r_min", ms(a.r_min)}, {"r_mean", ms(a.r_mean)},
                       {"vel_r", ms(a.vel)},   {"acc_r", ms(a.acc)},   {"jerk_r", ms(a.jerk)},
                       {"final_theta", ms(a.final_theta)}};
    j["models"].push_back(std::move(jm));
  }
  return j;
}

std::string line_plot_svg(std::span<const SvgSeries> series, const std::string& title, const std::string& y_label) {
  constexpr double W = 640, H = 360, L = 60, R = 140, T = 30, B = 40;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::size_t frames = 0;
  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const SvgSeries& s : series) {
    frames = std::max(frames, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      if (first) lo = hi = v, first = false;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double x_span = frames > 1 ? static_cast<double>(frames - 1) : 1.0;
  auto px = [&](std::size_t i) { return L + (W - L - R) * static_cast<double>(i) / x_span; };
  auto py = [&](double v) { return H - B - (H - T - B) * (v - lo) / (hi - lo); };

  std::ostringstream o;
  o << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
                   "font-size=\"11\">\n",
                   W, H);
  o << fmt::format("<text x=\"{}\" y=\"18\" font-size=\"13\">{}</text>\n", L, xml_escape(title));
  o << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", L, H - B, W - R);
  o << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", L, T, H - B);
  o << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3f}</text>\n", L - 4, H - B, lo);
  o << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3f}</text>\n", L - 4, T + 8, hi);
  o << fmt::format("<text x=\"{}\" y=\"{}\">0</text>\n", L, H - B + 14);
  o << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", W - R, H - B + 14,
                   frames > 0 ? frames - 1 : 0);
  o << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">frame</text>\n", (L + W - R) / 2, H - 8);
  o << fmt::format("<text x=\"14\" y=\"{0}\" transform=\"rotate(-90 14 {0})\" text-anchor=\"middle\">{1}</text>\n",
                   (T + H - B) / 2, xml_escape(y_label));
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % std::size(kColors)];
    o << fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", color);
    for (std::size_t i = 0; i < series[k].values.size(); ++i) {
      if (i) o << ' ';
      o << fmt::format("{:.2f},{:.2f}", px(i), py(series[k].values[i]));
    }
    o << "\"/>\n";
    const double ly = T + 14.0 * static_cast<double>(k + 1);
    o << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                     W - R + 10, ly - 4, W - R + 28, color);
    o << fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - R + 32, ly, xml_escape(series[k].label));
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace pointbench

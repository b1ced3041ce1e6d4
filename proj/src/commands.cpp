#include "pointbench/commands.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pointbench/error.hpp"

namespace pointbench {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

void write_snapshot(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out);
  write_json(cfg.out / "config.json", to_json(cfg));
}

json mean_sd_json(std::span<const double> v) {
  if (v.empty()) return nullptr;
  const MeanSd m = mean_sd(v);
  return {{"mean", m.mean}, {"sd", m.sd}};
}

std::string num(double v) { return fmt::format("{}", v); }

std::string profile_csv(const Profile& p) {
  std::ostringstream s;
  write_profile_csv(s, p);
  return s.str();
}

/// Maps library errors onto exit codes; anything else propagates.
template <class F>
int guarded(std::ostream& log, const char* what, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    log << what << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const NonFiniteLoss& e) {
    log << what << ": numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NoMovementFound& e) {
    log << what << ": " << e.what() << "\n";
    return kExitEmpty;
  } catch (const EmptyInput& e) {
    log << what << ": " << e.what() << "\n";
    return kExitEmpty;
  } catch (const Error& e) {
    log << what << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    log << what << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    log << what << ": " << e.what() << "\n";
    return kExitInput;
  }
}

EnvConfig eval_env(const ExperimentConfig& cfg) {
  TrainOptions o;
  o.env = cfg.env;
  o.mode = cfg.mode;
  if (cfg.mode != TrainMode::TaskOnly) o.env.clips = load_clips(cfg);
  return mode_env(o);
}

}  // namespace

int cmd_segment(const ExperimentConfig& cfg, std::span<const fs::path> inputs, std::ostream& log) {
  return guarded(log, "segment", [&] {
    if (inputs.empty()) throw ConfigError("no input clips given");
    std::vector<Clip> clips;
    clips.reserve(inputs.size());
    for (const fs::path& p : inputs) {
      try {
        clips.push_back(read_clip_file(p, cfg.bvh_length_scale));
      } catch (const ParseError& e) {
        log << fmt::format("{}:{}: {}\n", p.string(), e.line(), e.what());
        return static_cast<int>(kExitInput);
      } catch (const Error& e) {
        log << fmt::format("{}: {}\n", p.string(), e.what());
        return static_cast<int>(kExitInput);
      }
    }
    write_snapshot(cfg);

    json jclips = json::array();
    std::vector<ClipSegment> all;
    std::vector<Octant> octants;
    std::vector<std::vector<double>> precision;
    std::vector<double> durations, rises, peaks, means;
    int left = 0, right = 0;
    std::ostringstream kin;
    kin << "clip,segment,hand,onset,peak_frame,hold_start,offset,octant,duration,rise_time,peak_velocity,"
           "mean_velocity\n";
    for (std::size_t c = 0; c < clips.size(); ++c) {
      const Clip& clip = clips[c];
      const std::string name = inputs[c].filename().string();
      std::vector<Segment> segs;
      try {
        segs = segment_pointing(clip, cfg.segment);
      } catch (const NoMovementFound& e) {
        log << fmt::format("{}: {}\n", name, e.what());
      }
      json jsegs = json::array();
      for (std::size_t k = 0; k < segs.size(); ++k) {
        const Segment& s = segs[k];
        const KinematicStats st = kinematic_stats(clip, s);
        const std::optional<Octant> oct = segment_octant(clip, s);
        if (oct) octants.push_back(*oct);
        (s.hand == Side::Left ? left : right) += 1;
        durations.push_back(st.duration);
        rises.push_back(st.rise_time);
        peaks.push_back(st.peak_velocity);
        means.push_back(st.mean_velocity);
        all.push_back({&clip, s});
        const std::vector<double> ps = precision_series(clip, s);
        if (!ps.empty()) precision.push_back(ps);
        const std::string oname = oct ? oct->name() : "";
        kin << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", name, k, side_name(s.hand), s.onset,
                           s.peak_velocity, s.hold_start, s.offset, oname, num(st.duration), num(st.rise_time),
                           num(st.peak_velocity), num(st.mean_velocity));
        jsegs.push_back({{"hand", side_name(s.hand)},
                         {"onset", s.onset},
                         {"peak_velocity_frame", s.peak_velocity},
                         {"hold_start", s.hold_start},
                         {"offset", s.offset},
                         {"target", s.target},
                         {"octant", oct ? json(oname) : json(nullptr)},
                         {"duration", st.duration},
                         {"rise_time", st.rise_time},
                         {"peak_velocity", st.peak_velocity},
                         {"mean_velocity", st.mean_velocity}});
      }
      jclips.push_back({{"file", name}, {"fps", clip.fps}, {"frames", clip.frame_count()}, {"segments", jsegs}});
    }

    const OctantTable table = count_octants(octants);
    std::ostringstream oct;
    oct << "row,front_left,front_right,back_left,back_right\n";
    oct << fmt::format("top,{},{},{},{}\n", table[0], table[1], table[2], table[3]);
    oct << fmt::format("bottom,{},{},{},{}\n", table[4], table[5], table[6], table[7]);

    json summary;
    summary["config_hash"] = config_hash(cfg);
    summary["clips"] = jclips;
    summary["segments"] = all.size();
    summary["handedness"] = {{"left", left}, {"right", right}};
    summary["octants"] = table;
    summary["kinematics"] = {{"duration", mean_sd_json(durations)},
                             {"rise_time", mean_sd_json(rises)},
                             {"peak_velocity", mean_sd_json(peaks)},
                             {"mean_velocity", mean_sd_json(means)}};
    write_json(cfg.out / "segments.json", summary);
    write_file(cfg.out / "kinematics.csv", kin.str());
    write_file(cfg.out / "octants.csv", oct.str());
    if (all.empty()) {
      log << "segment: no pointing movement found\n";
      return static_cast<int>(kExitEmpty);
    }
    write_file(cfg.out / "velocity_profile.csv", profile_csv(velocity_profile(all, cfg.eval.profile_bins)));
    if (!precision.empty()) {
      write_file(cfg.out / "precision_profile.csv", profile_csv(export_profile(precision, cfg.eval.profile_bins)));
    }
    log << fmt::format("segment: {} segments from {} clips\n", all.size(), clips.size());
    return static_cast<int>(kExitOk);
  });
}

int cmd_synth(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, "synth", [&] {
    cfg.validate();
    const Skeleton skel = standard_skeleton();
    std::vector<std::optional<Clip>> clips;
    std::vector<std::string> errors;
    if (!cfg.synth.targets.empty()) {
      for (std::size_t i = 0; i < cfg.synth.targets.size(); ++i) {
        SynthParams p = cfg.synth.base;
        p.target = cfg.synth.targets[i];
        p.hand = cfg.synth.hand.value_or(p.target.x > 0.0 ? Side::Left : Side::Right);
        p.seed = cfg.seed + i;
        try {
          clips.emplace_back(generate_pointing_clip(skel, p));
          errors.emplace_back();
        } catch (const Unreachable& e) {
          log << fmt::format("synth: clip {}: {}\n", i, e.what());
          clips.emplace_back();
          errors.emplace_back(e.what());
        }
      }
    } else {
      for (Clip& c : generate_corpus(skel, cfg.synth.count, cfg.synth.weights, cfg.seed,
                                     CorpusOptions{cfg.synth.base, cfg.synth.hand})) {
        clips.emplace_back(std::move(c));
        errors.emplace_back();
      }
    }
    write_snapshot(cfg);

    json entries = json::array();
    std::vector<Octant> octants;
    int written = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      const std::string id = fmt::format("clip_{:03}", i);
      if (!clips[i]) {
        entries.push_back({{"id", id}, {"error", errors[i]}});
        continue;
      }
      const Clip& c = *clips[i];
      const std::string file = "clips/" + id + ".json";
      write_file(cfg.out / file, write_clip_json(c));
      ++written;
      const Annotation& a = c.annotations.at(0);
      const Vec3 t = c.targets.at(static_cast<std::size_t>(a.target)).position;
      const Octant o = classify_octant(t, body_frame(c.skeleton, c.frames.front()));
      octants.push_back(o);
      entries.push_back({{"id", id},
                         {"file", file},
                         {"hand", side_name(a.hand)},
                         {"target", {t.x, t.y, t.z}},
                         {"octant", o.name()},
                         {"frames", c.frame_count()},
                         {"fps", c.fps},
                         {"onset", a.onset},
                         {"peak_velocity", a.peak_velocity},
                         {"hold_start", a.hold_start},
                         {"offset", a.offset}});
    }
    json manifest;
    manifest["config_hash"] = config_hash(cfg);
    manifest["seed"] = cfg.seed;
    manifest["clips"] = entries;
    manifest["octants"] = count_octants(octants);
    write_json(cfg.out / "manifest.json", manifest);
    log << fmt::format("synth: wrote {} of {} clips\n", written, clips.size());
    return static_cast<int>(written > 0 ? kExitOk : kExitEmpty);
  });
}

int cmd_train(const ExperimentConfig& cfg, const std::optional<fs::path>& resume, std::ostream& log) {
  return guarded(log, "train", [&] {
    cfg.validate();
    TrainOptions o;
    o.env = cfg.env;
    if (cfg.mode != TrainMode::TaskOnly) {
      o.env.clips = load_clips(cfg);
      if (o.env.clips.empty()) throw ConfigError(std::string(mode_name(cfg.mode)) + " training needs clips");
    }
    o.train = cfg.train;
    o.train.seed = cfg.seed;
    o.mode = cfg.mode;
    o.config_hash = config_hash(cfg);
    std::optional<Checkpoint> start;
    if (resume) start = load_checkpoint(*resume);
    write_snapshot(cfg);

    const fs::path ckpt = cfg.out / "checkpoint.json";
    o.on_update = [&](const Checkpoint& c) { save_checkpoint(ckpt, c); };
    const Checkpoint c = train(o, start ? &*start : nullptr);
    save_checkpoint(ckpt, c);

    std::ostringstream curve;
    write_curve_csv(curve, c.curve);
    write_file(cfg.out / "curve.csv", curve.str());
    if (c.discriminator) {
      std::ostringstream d;
      write_discriminator_csv(d, c.discriminator_curve);
      write_file(cfg.out / "discriminator.csv", d.str());
    }
    if (!c.curve.empty()) {
      const CurveRow& r = c.curve.back();
      log << fmt::format("train: {} steps, mean reward {:.4f}, r_I {:.4f}, r_G {:.4f}\n", c.step, r.mean_reward,
                         r.mean_r_I, r.mean_r_G);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_eval(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, "eval", [&] {
    cfg.validate();
    if (cfg.eval.models.empty()) throw ConfigError("no models to evaluate");
    const EnvConfig env_cfg = eval_env(cfg);
    std::vector<Vec3> targets = cfg.eval.targets;
    if (targets.empty()) targets = heldout_targets(PointingEnv(env_cfg), cfg.eval.heldout_targets, cfg.eval.target_seed);
    std::vector<std::uint64_t> seeds = cfg.eval.seeds;
    if (seeds.empty()) seeds.push_back(cfg.seed);
    const EvalReport report = compare_models(env_cfg, cfg.eval.models, targets, seeds, config_hash(cfg));
    write_snapshot(cfg);

    std::ostringstream t3, t4;
    write_reward_table(t3, report);
    write_smoothness_table(t4, report);
    write_file(cfg.out / "reward_table.csv", t3.str());
    write_file(cfg.out / "smoothness_table.csv", t4.str());
    write_json(cfg.out / "report.json", report_to_json(report));

    int ok = 0;
    for (const ModelReport& m : report.models) {
      if (m.error) {
        log << fmt::format("eval: model {}: {}\n", m.name, *m.error);
        continue;
      }
      ++ok;
      std::vector<std::vector<double>> theta, speed;
      for (const EvalRow& r : m.rows) {
        theta.push_back(r.theta);
        speed.push_back(r.hand_speed);
      }
      write_file(cfg.out / "profiles" / (m.name + "_theta.csv"), profile_csv(export_profile(theta, cfg.eval.profile_bins)));
      write_file(cfg.out / "profiles" / (m.name + "_velocity.csv"),
                 profile_csv(export_profile(speed, cfg.eval.profile_bins)));
      log << fmt::format("eval: {} r_max {:.4f} +- {:.4f}, r_mean {:.4f} +- {:.4f}, final theta {:.4f}\n", m.name,
                         m.aggregate.r_max.mean, m.aggregate.r_max.sd, m.aggregate.r_mean.mean, m.aggregate.r_mean.sd,
                         m.aggregate.final_theta.mean);
    }
    const std::size_t rows = targets.size() * seeds.size();
    for (std::size_t i = 0; i < rows; ++i) {
      std::vector<SvgSeries> series;
      for (const ModelReport& m : report.models) {
        if (!m.error) series.push_back({m.name, m.rows[i].rewards});
      }
      if (series.empty()) break;
      write_file(cfg.out / "plots" / fmt::format("clip_{:03}.svg", i),
                 line_plot_svg(series, fmt::format("pointing reward, clip {}", i), "r^Pt"));
    }
    return static_cast<int>(ok > 0 ? kExitOk : kExitInput);
  });
}

}  // namespace pointbench

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointbench/env.hpp"
#include "pointbench/mocap.hpp"

namespace pointbench {

struct RewardStats {
  double r_max = 0.0;
  double r_min = 0.0;
  double r_mean = 0.0;
};

/// Extrema and mean of one episode's reward series. Throws EmptyInput.
RewardStats reward_stats(std::span<const double> series);

struct Smoothness {
  double vel = 0.0;
  double acc = 0.0;
  double jerk = 0.0;
};

/// Mean absolute finite difference of order 1..3, divided by dt^k. Differences within
/// rounding of the series magnitude count as zero, so constant series give exact zeros at
/// every order and linear series at orders 2 and 3. Throws SeriesTooShort below 4 samples.
Smoothness smoothness(std::span<const double> series, double dt);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1); 0 for a single value
};

/// Throws EmptyInput.
MeanSd mean_sd(std::span<const double> values);

struct EvalRow {
  int index = 0;
  std::uint64_t seed = 0;
  Vec3 target;
  RewardStats stats;
  Smoothness smooth;
  double final_theta = 0.0;
  std::vector<double> rewards;     // r^Pt per control step
  std::vector<double> theta;       // precision per control step
  std::vector<double> hand_speed;  // m/s per control step
};

struct EvalAggregate {
  MeanSd r_max, r_min, r_mean;
  MeanSd vel, acc, jerk;
  MeanSd final_theta;
};

struct ModelReport {
  std::string name;
  std::string config_hash;
  /// Set when the model could not be evaluated; rows are then empty.
  std::optional<std::string> error;
  std::vector<EvalRow> rows;
  EvalAggregate aggregate;
};

struct EvalReport {
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<Vec3> targets;
  double dt = 0.0;
  std::vector<ModelReport> models;
};

/// Deterministic rollouts of `policy` on every (seed, target) pair, identical resets for
/// every model. Throws EmptyInput on an empty target or seed list.
ModelReport evaluate_policy(PointingEnv& env, Policy& policy, std::string name, std::span<const Vec3> targets,
                            std::span<const std::uint64_t> seeds);

EvalAggregate aggregate(std::span<const EvalRow> rows);

/// A model row: a checkpoint file, or the built-in `expert` / `random` policies.
struct ModelSource {
  std::string name;
  std::filesystem::path checkpoint;  // empty for built-ins
};

/// Evaluates every model on the same targets and seeds. An unreadable or incompatible
/// checkpoint gives a row with `error` set; the others still run.
EvalReport compare_models(const EnvConfig& env_config, std::span<const ModelSource> models,
                          std::span<const Vec3> targets, std::span<const std::uint64_t> seeds,
                          const std::string& config_hash);

/// `n` front targets drawn from the env's target sampler with a seed disjoint from training.
std::vector<Vec3> heldout_targets(const PointingEnv& env, int n, std::uint64_t seed);

/// Per-series resampling to `bins` then per-bin mean and sample sd. Throws EmptyInput.
Profile export_profile(std::span<const std::vector<double>> series, int bins = 100);

/// Precision profile of a segment with undefined frames dropped.
std::vector<double> precision_series(const Clip& clip, const Segment& seg);

/// r^Pt of a segment sampled at `rate` Hz (nearest frame).
std::vector<double> clip_reward_series(const Clip& clip, const Segment& seg, double rate);

// Writers. All output is deterministic for a given report.
void write_reward_table(std::ostream& out, const EvalReport& report);
void write_smoothness_table(std::ostream& out, const EvalReport& report);
void write_profile_csv(std::ostream& out, const Profile& profile);
nlohmann::json report_to_json(const EvalReport& report);

struct SvgSeries {
  std::string label;
  std::vector<double> values;
};

/// Polylines over a shared frame axis with simple axes and a legend.
std::string line_plot_svg(std::span<const SvgSeries> series, const std::string& title, const std::string& y_label);

}  // namespace pointbench

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointbench/env.hpp"
#include "pointbench/eval.hpp"
#include "pointbench/mocap.hpp"
#include "pointbench/ppo.hpp"
#include "pointbench/synth.hpp"
#include "pointbench/train.hpp"

namespace pointbench {

struct CorpusConfig {
  int count = 83;
  OctantWeights weights = kRecordedOctantCounts;
  /// Fixed hand; nullopt picks per clip from the target side.
  std::optional<Side> hand;
  /// Explicit targets; when non-empty they replace octant sampling (one clip each).
  std::vector<Vec3> targets;
  SynthParams base;
};

struct EvalParams {
  int heldout_targets = 12;
  std::uint64_t target_seed = 4242;
  /// Explicit targets; when non-empty they replace the held-out draw.
  std::vector<Vec3> targets;
  /// Empty means the experiment seed alone.
  std::vector<std::uint64_t> seeds;
  int profile_bins = 100;
  std::vector<ModelSource> models;
};

/// One experiment: every sub-config plus its output directory and master seed.
struct ExperimentConfig {
  EnvConfig env;  // clips are loaded from `clips`, the reward lives under "reward"
  TrainMode mode = TrainMode::TaskOnly;
  TrainConfig train;
  SegmentParams segment;
  CorpusConfig synth;
  EvalParams eval;
  /// Clip files or directories (all .json / .bvh inside, sorted) used as references.
  std::vector<std::filesystem::path> clips;
  /// Use only the first n clips; 0 keeps all.
  int clip_count = 0;
  double bvh_length_scale = 1.0;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types raise SchemaError naming the field path;
/// then validate() runs. Relative clip paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);
/// FNV-1a of the canonical JSON dump.
std::string config_hash(const ExperimentConfig& c);

double bvh_units_scale(std::string_view units);

/// Expands files and directories in `ExperimentConfig::clips`, honouring clip_count.
std::vector<Clip> load_clips(const ExperimentConfig& c);

}  // namespace pointbench

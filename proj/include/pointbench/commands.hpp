#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>

#include "pointbench/config.hpp"

namespace pointbench {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitEmpty = 2, kExitNumeric = 3 };

/// Each command writes `config.json` (a snapshot sufficient to rerun it) into `cfg.out`
/// and reports progress and errors on `log`. Outputs are byte-identical for a fixed config.

/// segments.json, kinematics.csv, octants.csv and velocity / precision profiles over normalized time.
int cmd_segment(const ExperimentConfig& cfg, std::span<const std::filesystem::path> inputs, std::ostream& log);

/// clips/clip_NNN.json plus manifest.json with ground truth.
int cmd_synth(const ExperimentConfig& cfg, std::ostream& log);

/// checkpoint.json (rewritten after every update), curve.csv, and discriminator.csv in amp mode.
int cmd_train(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& resume, std::ostream& log);

/// reward_table.csv, smoothness_table.csv, report.json, profiles/ and plots/.
int cmd_eval(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace pointbench

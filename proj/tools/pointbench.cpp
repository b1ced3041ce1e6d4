#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pointbench/commands.hpp"
#include "pointbench/error.hpp"

using namespace pointbench;

namespace {

ModelSource parse_model(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {arg, {}};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pointing-gesture workbench: segment clips, synthesize corpora, train and evaluate arm policies"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--out", out, "output directory, overrides the config");

  auto* seg = app.add_subcommand("segment", "split clips into pointing movements and tabulate their kinematics");
  seg->alias("analyze");
  std::vector<std::string> inputs;
  std::optional<double> min_height, min_prom, rest, hold_fraction;
  std::string units;
  seg->add_option("inputs", inputs, "BVH or clip JSON files")->required();
  seg->add_option("--min-peak-height", min_height, "sagittal displacement peak height, m");
  seg->add_option("--min-prominence", min_prom, "peak prominence, m");
  seg->add_option("--rest-threshold", rest, "onset/offset displacement, m");
  seg->add_option("--hold-fraction", hold_fraction, "hold start as a fraction of peak speed");
  seg->add_option("--bvh-units", units, "BVH length unit: m, cm, mm or in");

  auto* syn = app.add_subcommand("synth", "generate an annotated synthetic corpus");
  std::optional<int> count;
  syn->add_option("--count", count, "number of clips");

  auto* trn = app.add_subcommand("train", "train a policy");
  std::string mode, resume;
  std::vector<std::string> clips;
  std::optional<long long> steps;
  trn->add_option("--mode", mode, "dm, dm-wr, amp or task-only");
  trn->add_option("--clips", clips, "reference clip files or directories");
  trn->add_option("--steps", steps, "total environment steps");
  trn->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);

  auto* evl = app.add_subcommand("eval", "compare models on held-out targets");
  std::vector<std::string> models;
  std::optional<int> n_targets;
  evl->add_option("--model", models, "name=checkpoint.json, or expert / random");
  evl->add_option("--targets", n_targets, "number of held-out targets");
  evl->add_option("--mode", mode, "env mode the models were trained in");
  evl->add_option("--clips", clips, "reference clips for the env");

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_experiment_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    if (min_height) cfg.segment.min_peak_height = *min_height;
    if (min_prom) cfg.segment.min_prominence = *min_prom;
    if (rest) cfg.segment.rest_threshold = *rest;
    if (hold_fraction) cfg.segment.hold_speed_fraction = *hold_fraction;
    if (!units.empty()) cfg.bvh_length_scale = bvh_units_scale(units);
    if (count) {
      cfg.synth.count = *count;
      cfg.synth.targets.clear();
    }
    if (!mode.empty()) cfg.mode = parse_mode(mode);
    if (!clips.empty()) cfg.clips.assign(clips.begin(), clips.end());
    if (steps) cfg.train.total_steps = *steps;
    if (n_targets) {
      cfg.eval.heldout_targets = *n_targets;
      cfg.eval.targets.clear();
    }
    for (const std::string& m : models) cfg.eval.models.push_back(parse_model(m));
    cfg.validate();
  } catch (const Error& e) {
    std::cerr << "config: " << e.what() << "\n";
    return kExitInput;
  }

  if (*seg) {
    const std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
    return cmd_segment(cfg, paths, std::cerr);
  }
  if (*syn) return cmd_synth(cfg, std::cerr);
  if (*trn) return cmd_train(cfg, resume.empty() ? std::nullopt : std::optional<std::filesystem::path>(resume), std::cerr);
  return cmd_eval(cfg, std::cerr);
}

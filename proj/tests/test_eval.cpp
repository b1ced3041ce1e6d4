#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pointbench/error.hpp"
#include "pointbench/eval.hpp"
#include "pointbench/synth.hpp"
#include "pointbench/train.hpp"

using namespace pointbench;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pointbench_eval_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Checkpoint tiny_checkpoint(Side hand, std::uint64_t seed) {
  TrainOptions o;
  o.mode = TrainMode::TaskOnly;
  o.env.hand = hand;
  o.train.batch_size = 256;
  o.train.minibatch_size = 64;
  o.train.epochs = 1;
  o.train.total_steps = 256;
  o.train.policy_hidden = {8};
  o.train.value_hidden = {8};
  o.train.seed = seed;
  return train(o);
}

std::vector<std::uint64_t> one_seed{0};

}  // namespace

TEST_CASE("reward stats") {
  const std::vector<double> flat(10, 0.5);
  const RewardStats s = reward_stats(flat);
  CHECK(s.r_max == 0.5);
  CHECK(s.r_min == 0.5);
  CHECK(s.r_mean == 0.5);
  CHECK(mean_sd(std::vector<double>{0.5}).sd == 0.0);
  CHECK_THROWS_AS(reward_stats(std::vector<double>{}), EmptyInput);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.7);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> v(1 + k % 17);
    for (double& x : v) x = u(rng);
    const RewardStats r = reward_stats(v);
    CHECK(r.r_min <= r.r_mean);
    CHECK(r.r_mean <= r.r_max);
  }
}

TEST_CASE("aggregate uses the sample sd") {
  const MeanSd a = mean_sd(std::vector<double>{0.4, 0.6});
  CHECK(a.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.sd == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
  CHECK_THROWS_AS(mean_sd(std::vector<double>{}), EmptyInput);
}

TEST_CASE("smoothness metrics") {
  const double dt = 1.0 / 30.0;
  const Smoothness c = smoothness(std::vector<double>(12, 0.3), dt);
  CHECK(c.vel == 0.0);
  CHECK(c.acc == 0.0);
  CHECK(c.jerk == 0.0);

  std::vector<double> ramp;
  for (int i = 0; i < 20; ++i) ramp.push_back(-0.8 * i * dt);
  const Smoothness r = smoothness(ramp, dt);
  CHECK(r.vel == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(r.acc == 0.0);
  CHECK(r.jerk == 0.0);

  std::vector<double> quad;
  for (int i = 0; i < 20; ++i) quad.push_back(0.5 * 3.0 * (i * dt) * (i * dt));
  CHECK(smoothness(quad, dt).acc == doctest::Approx(3.0).epsilon(1e-6));

  CHECK_THROWS_AS(smoothness(std::vector<double>{1, 2, 3}, dt), SeriesTooShort);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(40);
  for (double& v : x) v = n(rng);
  const Smoothness base = smoothness(x, dt);
  std::vector<double> shifted = x, scaled = x;
  for (double& v : shifted) v += 7.0;
  for (double& v : scaled) v *= -2.5;
  const Smoothness s = smoothness(shifted, dt), k = smoothness(scaled, dt);
  CHECK(s.vel == doctest::Approx(base.vel).epsilon(1e-9));
  CHECK(s.jerk == doctest::Approx(base.jerk).epsilon(1e-9));
  CHECK(k.vel == doctest::Approx(2.5 * base.vel).epsilon(1e-9));
  CHECK(k.acc == doctest::Approx(2.5 * base.acc).epsilon(1e-9));
  CHECK(k.jerk == doctest::Approx(2.5 * base.jerk).epsilon(1e-9));
}

TEST_CASE("noisy hand path raises reward jerk") {
  const Skeleton skel = standard_skeleton();
  SynthParams p;
  p.target = {-0.4, 1.7, 0.7};
  p.seed = 11;
  const Clip clean = generate_pointing_clip(skel, p);
  p.noise_amplitude = 0.02;
  const Clip noisy = generate_pointing_clip(skel, p);
  const Segment seg = segment_pointing(clean).at(0);
  const Smoothness a = smoothness(clip_reward_series(clean, seg, 30.0), 1.0 / 30.0);
  const Smoothness b = smoothness(clip_reward_series(noisy, seg, 30.0), 1.0 / 30.0);
  CHECK(b.jerk >= 5.0 * a.jerk);
}

TEST_CASE("profiles") {
  const std::vector<std::vector<double>> one{{0.0, 1.0, 4.0, 2.0}};
  const Profile p1 = export_profile(one);
  CHECK(p1.mean.size() == 100);
  for (double s : p1.sd) CHECK(s == 0.0);

  std::vector<double> ramp(100);
  for (int i = 0; i < 100; ++i) ramp[static_cast<std::size_t>(i)] = std::sin(0.1 * i);
  const std::vector<std::vector<double>> two{ramp, ramp};
  const Profile p2 = export_profile(two);
  for (int i = 0; i < 100; ++i) {
    CHECK(p2.mean[static_cast<std::size_t>(i)] == doctest::Approx(ramp[static_cast<std::size_t>(i)]).epsilon(1e-12));
    CHECK(p2.sd[static_cast<std::size_t>(i)] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(export_profile(std::vector<std::vector<double>>{}), EmptyInput);
}

TEST_CASE("precision profile plateau matches the alignment error") {
  const Skeleton skel = standard_skeleton();
  for (double alpha : {10.0, 20.0, 35.0}) {
    SynthParams base;
    base.alignment_error = alpha;
    const auto corpus = generate_corpus(skel, 8, kRecordedOctantCounts, 4, CorpusOptions{base, std::nullopt});
    std::vector<std::vector<double>> series;
    for (const Clip& c : corpus) series.push_back(precision_series(c, segment_pointing(c).at(0)));
    const Profile prof = export_profile(series);
    // hold occupies the middle of every segment
    const double plateau = 1.0 - alpha / 180.0;
    int flat = 0;
    for (int b = 30; b < 60; ++b) flat += std::abs(prof.mean[static_cast<std::size_t>(b)] - plateau) <= 1e-3;
    CHECK(flat >= 20);
  }
}

TEST_CASE("compare models") {
  EnvConfig cfg;
  cfg.reward = mode_rewards(TrainMode::TaskOnly, cfg.reward);
  PointingEnv env(cfg);
  const auto targets = heldout_targets(env, 12, 4242);
  CHECK(targets.size() == 12);

  const auto dir = scratch("compare");
  save_checkpoint(dir / "a.json", tiny_checkpoint(Side::Right, 1));
  save_checkpoint(dir / "left.json", tiny_checkpoint(Side::Left, 1));

  SUBCASE("expert above random on every target") {
    const std::vector<ModelSource> models{{"expert", {}}, {"random", {}}};
    const EvalReport r = compare_models(cfg, models, targets, one_seed, "h");
    REQUIRE(r.models.size() == 2);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      CHECK(r.models[0].rows[i].stats.r_max > r.models[1].rows[i].stats.r_max);
    }
    CHECK(r.models[0].aggregate.r_max.mean >= 0.6);
    CHECK(r.models[0].aggregate.r_max.mean <= pointing_reward_max() + 1e-12);
  }

  SUBCASE("determinism and row counts") {
    const std::vector<ModelSource> models{{"a", dir / "a.json"}, {"b", dir / "a.json"}};
    const EvalReport r = compare_models(cfg, models, targets, one_seed, "h");
    REQUIRE(r.models.size() == 2);
    CHECK(report_to_json(r)["models"][0]["rows"] == report_to_json(r)["models"][1]["rows"]);
    std::ostringstream t3, t4;
    write_reward_table(t3, r);
    write_smoothness_table(t4, r);
    int lines = 0, agg = 0;
    std::istringstream in(t3.str());
    for (std::string line; std::getline(in, line);) {
      ++lines;
      agg += line.find(",aggregate,") != std::string::npos;
    }
    CHECK(lines == 1 + 24 + 2);
    CHECK(agg == 2);

    const EvalReport again = compare_models(cfg, models, targets, one_seed, "h");
    std::ostringstream t3b;
    write_reward_table(t3b, again);
    CHECK(t3.str() == t3b.str());
    CHECK(report_to_json(r) == report_to_json(again));
  }

  SUBCASE("row order does not depend on listing order") {
    const std::vector<ModelSource> ab{{"expert", {}}, {"a", dir / "a.json"}};
    const std::vector<ModelSource> ba{{"a", dir / "a.json"}, {"expert", {}}};
    const auto x = report_to_json(compare_models(cfg, ab, targets, one_seed, "h"));
    const auto y = report_to_json(compare_models(cfg, ba, targets, one_seed, "h"));
    CHECK(x["models"][0] == y["models"][1]);
    CHECK(x["models"][1] == y["models"][0]);
  }

  SUBCASE("an incompatible checkpoint does not stop the others") {
    const std::vector<ModelSource> models{{"left", dir / "left.json"}, {"missing", dir / "nope.json"},
                                          {"expert", {}}};
    const EvalReport r = compare_models(cfg, models, targets, one_seed, "h");
    REQUIRE(r.models.size() == 3);
    CHECK(r.models[0].error.has_value());
    CHECK(r.models[0].error->find("left") != std::string::npos);
    CHECK(r.models[1].error.has_value());
    CHECK_FALSE(r.models[2].error.has_value());
    CHECK(r.models[2].rows.size() == 12);
  }

  SUBCASE("empty target list") {
    const std::vector<ModelSource> models{{"expert", {}}};
    CHECK_THROWS_AS(compare_models(cfg, models, std::vector<Vec3>{}, one_seed, "h"), EmptyInput);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("svg line plot") {
  const std::vector<SvgSeries> s{{"a<b", {0.0, 0.5, 0.2}}, {"c", {0.1, 0.1, 0.4, 0.6}}};
  const std::string svg = line_plot_svg(s, "reward", "r");
  CHECK(svg.rfind("<svg", 0) == 0);
  std::size_t n = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++n;
  CHECK(n == 2);
  CHECK(svg.find("a&lt;b") != std::string::npos);
}

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gradcheck.hpp"
#include "pointbench/error.hpp"
#include "pointbench/train.hpp"

using namespace pointbench;

namespace {

TrainOptions tiny_options(TrainMode mode) {
  TrainOptions o;
  o.mode = mode;
  o.train.batch_size = 256;
  o.train.minibatch_size = 64;
  o.train.epochs = 2;
  o.train.total_steps = 512;
  o.train.policy_hidden = {8};
  o.train.value_hidden = {8};
  o.train.discriminator_hidden = {8};
  o.train.seed = 7;
  if (mode != TrainMode::TaskOnly) {
    SynthParams p;
    p.target = {-0.4, 1.7, 0.7};
    o.env.clips.push_back(generate_pointing_clip(standard_skeleton(), p));
  }
  return o;
}

}  // namespace

TEST_CASE("mlp forward") {
  std::mt19937_64 rng(1);
  const Mlp zero({3, 5, 2});
  CHECK(zero.predict(Eigen::Vector3d(1, -2, 3)).isZero());

  Mlp id({3, 3});
  Eigen::VectorXd p = Eigen::VectorXd::Zero(id.parameter_count());
  for (int i = 0; i < 3; ++i) p[i * 3 + i] = 1.0;
  id.set_parameters(p);
  const Eigen::Vector3d x(0.5, -1.5, 2.0);
  CHECK(id.predict(x).isApprox(x));

  const Mlp net({3, 4, 2}, rng);
  CHECK(net.parameter_count() == 4 * 4 + 2 * 5);
  CHECK_THROWS_AS(net.predict(Eigen::Vector2d(1, 2)), DimensionMismatch);
  CHECK_THROWS_AS(id.set_parameters(Eigen::VectorXd::Zero(3)), DimensionMismatch);
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = gradcheck::check_instance(seed);
    CAPTURE(seed);
    CHECK(r.mlp <= 1e-4);
    CHECK(r.policy <= 1e-4);
    CHECK(r.value <= 1e-4);
    CHECK(r.discriminator <= 1e-4);
  }
}

TEST_CASE("generalised advantage estimation") {
  const std::vector<double> r{1, 1, 1}, v{0.5, 0.5, 0.5};
  const std::vector<char> done{0, 0, 1};
  const auto g = gae(r, v, done, 0.9, 0.95);
  // delta = (0.95, 0.95, 0.5); A2 = 0.5, A1 = 0.95 + 0.855 * 0.5, A0 = 0.95 + 0.855 * A1.
  CHECK(g.advantages[2] == doctest::Approx(0.5));
  CHECK(g.advantages[1] == doctest::Approx(1.3775));
  CHECK(g.advantages[0] == doctest::Approx(2.1277625));
  for (int i = 0; i < 3; ++i) CHECK(g.returns[static_cast<std::size_t>(i)] == doctest::Approx(g.advantages[static_cast<std::size_t>(i)] + 0.5));

  SUBCASE("lambda zero gives one-step residuals") {
    const std::vector<double> rr{0.3, -1.0, 2.0, 0.5}, vv{0.1, 0.7, -0.2, 0.4};
    const std::vector<char> dd{0, 1, 0, 0};
    const auto z = gae(rr, vv, dd, 0.8, 0.0, 0.9);
    CHECK(z.advantages[0] == doctest::Approx(0.3 + 0.8 * 0.7 - 0.1));
    CHECK(z.advantages[1] == doctest::Approx(-1.0 - 0.7));
    CHECK(z.advantages[2] == doctest::Approx(2.0 + 0.8 * 0.4 + 0.2));
    CHECK(z.advantages[3] == doctest::Approx(0.5 + 0.8 * 0.9 - 0.4));
  }
  SUBCASE("undiscounted suffix sums") {
    const std::vector<double> rr{1, 2, 3, 4}, zero(4, 0.0);
    const std::vector<char> dd{0, 0, 0, 1};
    const auto s = gae(rr, zero, dd, 1.0, 1.0);
    CHECK(s.advantages == std::vector<double>{10, 9, 7, 4});
  }
  CHECK_THROWS_AS(gae(r, std::vector<double>{0.5}, done, 0.9, 0.95), LengthMismatch);
}

TEST_CASE("advantage normalisation") {
  std::mt19937_64 rng(4);
  const Eigen::VectorXd a = gradcheck::random_matrix(1000, 1, rng, 3.0).col(0).array() + 2.0;
  const Eigen::VectorXd n = normalize_advantages(a);
  CHECK(std::abs(n.mean()) <= 1e-9);
  CHECK(std::abs(std::sqrt(n.squaredNorm() / 1000.0) - 1.0) <= 1e-6);
}

TEST_CASE("ppo update") {
  std::mt19937_64 rng(3);
  GaussianPolicy pol;
  pol.mean = Mlp({3, 8, 2}, rng, 0.1);
  pol.log_std = Eigen::VectorXd::Constant(2, -0.5);
  Mlp value({3, 8, 1}, rng);
  PpoBatch b;
  b.obs = gradcheck::random_matrix(3, 64, rng);
  b.actions = pol.mean.forward(b.obs) + gradcheck::random_matrix(2, 64, rng, 0.6);
  b.old_log_prob = pol.log_prob(b.obs, b.actions);
  b.returns = gradcheck::random_matrix(64, 1, rng).col(0);
  TrainConfig cfg;
  cfg.minibatch_size = 16;

  SUBCASE("zero advantages leave the policy unchanged") {
    b.advantages = Eigen::VectorXd::Zero(64);
    PpoOptimizers opt;
    const Eigen::VectorXd before = pol.flat();
    const auto d = ppo_update(pol, value, opt, b, cfg, rng);
    CHECK(pol.flat() == before);
    CHECK(d.initial_ratio_deviation <= 1e-12);
  }
  SUBCASE("first-epoch ratio is one and the surrogate improves") {
    b.advantages = gradcheck::random_matrix(64, 1, rng).col(0);
    PpoOptimizers opt;
    const double before = -ppo_policy_loss(pol, b.obs, b.actions, b.old_log_prob, normalize_advantages(b.advantages), 0.2).loss;
    const auto d = ppo_update(pol, value, opt, b, cfg, rng);
    CHECK(d.initial_ratio_deviation <= 1e-12);
    CHECK(d.surrogate > before);
    CHECK(d.approx_kl >= 0.0);
  }
  SUBCASE("non-finite loss restores parameters") {
    b.advantages = Eigen::VectorXd::Ones(64);
    b.advantages[5] = std::nan("");
    PpoOptimizers opt;
    const Eigen::VectorXd before = pol.flat(), vbefore = value.parameters();
    CHECK_THROWS_AS(ppo_update(pol, value, opt, b, cfg, rng), NonFiniteLoss);
    CHECK(pol.flat() == before);
    CHECK(value.parameters() == vbefore);
  }
  SUBCASE("clip ratio validation") {
    cfg.clip = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.clip = 0.2;
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("single-state bandit") {
  // One observation, one action dimension; actions above zero are rewarded.
  std::mt19937_64 rng(12);
  GaussianPolicy pol;
  pol.mean = Mlp({1, 1}, rng, 0.01);
  pol.log_std = Eigen::VectorXd::Constant(1, 0.0);
  Mlp value({1, 1});
  PpoOptimizers opt;
  TrainConfig cfg;
  cfg.lr_policy = 0.01;
  cfg.minibatch_size = 1024;
  cfg.epochs = 1;
  const Eigen::MatrixXd obs = Eigen::MatrixXd::Ones(1, 1024);
  auto p_good = [&] {
    const double mu = pol.mean.predict(Eigen::VectorXd::Ones(1))[0];
    return 0.5 * std::erfc(-mu / std::exp(pol.log_std[0]) / std::sqrt(2.0));
  };
  double prev = p_good();
  CHECK(prev == doctest::Approx(0.5).epsilon(0.05));
  for (int u = 0; u < 100; ++u) {
    PpoBatch b;
    b.obs = obs;
    b.actions.resize(1, 1024);
    b.advantages.resize(1024);
    for (int i = 0; i < 1024; ++i) {
      b.actions(0, i) = pol.sample(Eigen::VectorXd::Ones(1), rng)[0];
      b.advantages[i] = b.actions(0, i) > 0.0 ? 1.0 : 0.0;
    }
    b.old_log_prob = pol.log_prob(b.obs, b.actions);
    b.returns = b.advantages;
    ppo_update(pol, value, opt, b, cfg, rng);
    const double p = p_good();
    CHECK(p >= prev);
    prev = p;
  }
  CHECK(prev > 0.95);
}

TEST_CASE("least-squares discriminator") {
  std::mt19937_64 rng(8);
  Mlp disc({2, 16, 1}, rng);
  Adam opt;
  opt.lr = 1e-2;
  Eigen::MatrixXd real = gradcheck::random_matrix(2, 200, rng, 0.3);
  Eigen::MatrixXd fake = gradcheck::random_matrix(2, 200, rng, 0.3);
  real.row(0).array() += 1.5;
  fake.row(0).array() -= 1.5;

  SUBCASE("separable sets") {
    const auto s = train_discriminator(disc, opt, real, fake, 300, 64, rng);
    CHECK(s.real_score > s.fake_score);
    CHECK(s.real_score > 0.5);
    CHECK(s.fake_score < -0.5);
  }
  SUBCASE("identical sets score zero") {
    const auto s = train_discriminator(disc, opt, real, real, 500, 200, rng);
    CHECK(std::abs(s.real_score) < 0.05);
    CHECK(amp_reward(s.fake_score) == doctest::Approx(0.75).epsilon(0.02));
  }
  SUBCASE("empty fake set") {
    CHECK_THROWS_AS(train_discriminator(disc, opt, real, Eigen::MatrixXd(2, 0), 1, 8, rng), DimensionMismatch);
    CHECK_THROWS_AS(train_discriminator(disc, opt, real, Eigen::MatrixXd(3, 5), 1, 8, rng), DimensionMismatch);
  }
}

TEST_CASE("running normaliser merges batches") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = gradcheck::random_matrix(3, 100, rng, 2.0);
  RunningNorm a(3), b(3);
  a.update(x);
  b.update(x.leftCols(37));
  b.update(x.rightCols(63));
  CHECK(a.mean().isApprox(b.mean()));
  CHECK(a.var().isApprox(b.var()));
  const Eigen::MatrixXd n = a.normalize(x);
  CHECK(n.rowwise().mean().norm() < 1e-9);
}

TEST_CASE("training modes, determinism and checkpoints") {
  CHECK(parse_mode("dm-wr") == TrainMode::DMWithReward);
  CHECK_THROWS_AS(parse_mode("ppo"), ConfigError);
  CHECK(mode_rewards(TrainMode::DM, RewardConfig{}).w_task == 0.0);
  CHECK(mode_rewards(TrainMode::TaskOnly, RewardConfig{}).w_imitation == 0.0);
  RewardConfig one_sided;
  one_sided.w_imitation = 1.0;
  one_sided.w_task = 0.0;
  CHECK_THROWS_AS(mode_rewards(TrainMode::DMWithReward, one_sided), ConfigError);

  SUBCASE("same seed, same curves") {
    const auto o = tiny_options(TrainMode::TaskOnly);
    const Checkpoint a = train(o), b = train(o);
    CHECK(a.curve == b.curve);
    CHECK(a.policy.flat() == b.policy.flat());
    CHECK(a.curve.size() == 2);
    CHECK(a.curve.back().step >= 512);
  }
  SUBCASE("resuming continues the run") {
    auto o = tiny_options(TrainMode::DM);
    const Checkpoint half = train(o);
    const Checkpoint reloaded = checkpoint_from_json(nlohmann::json::parse(checkpoint_to_json(half).dump()));
    CHECK(checkpoint_to_json(reloaded) == checkpoint_to_json(half));
    o.train.total_steps = 1024;
    const Checkpoint resumed = train(o, &reloaded);
    const Checkpoint straight = train(o);
    CHECK(resumed.curve == straight.curve);
    CHECK(resumed.policy.flat() == straight.policy.flat());
  }
  SUBCASE("amp trains a discriminator on truncated clips") {
    const auto o = tiny_options(TrainMode::AMP);
    const Checkpoint c = train(o);
    CHECK(c.discriminator.has_value());
    CHECK(c.discriminator_curve.size() == c.curve.size());
    const EnvConfig e = mode_env(o);
    CHECK(e.clips[0].frame_count() == o.env.clips[0].annotations[0].hold_start + 1);
    std::ostringstream csv;
    write_discriminator_csv(csv, c.discriminator_curve);
    CHECK(csv.str().rfind("step,loss,real_score,fake_score\n", 0) == 0);
  }
  SUBCASE("incompatible checkpoints") {
    const Checkpoint c = train(tiny_options(TrainMode::TaskOnly));
    EnvConfig e;
    e.hand = Side::Left;
    e.reward.w_imitation = 0.0;
    e.reward.w_task = 1.0;
    CHECK_THROWS_AS(check_compatible(c, PointingEnv(e)), IncompatibleCheckpoint);
    auto j = checkpoint_to_json(c);
    j["policy"]["sizes"] = {5, 8, 4};
    CHECK_THROWS_AS(checkpoint_from_json(j), IncompatibleCheckpoint);
    CHECK_THROWS_AS(checkpoint_from_json(nlohmann::json::object()), IncompatibleCheckpoint);
  }
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

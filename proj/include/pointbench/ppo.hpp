#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pointbench/mlp.hpp"

namespace pointbench {

struct TrainConfig {
  double lr_policy = 3e-4;
  double lr_value = 1e-3;
  double lr_discriminator = 1e-3;
  double clip = 0.2;
  double gamma = 0.95;
  double lambda = 0.95;
  int batch_size = 4096;
  int minibatch_size = 512;
  int epochs = 5;
  long long total_steps = 200000;
  std::uint64_t seed = 0;
  std::vector<int> policy_hidden{64, 64};
  std::vector<int> value_hidden{64, 64};
  std::vector<int> discriminator_hidden{64};
  double init_log_std = -1.0;
  double max_grad_norm = 0.5;
  int discriminator_steps = 10;

  /// Throws ConfigError: clip in (0, 1), gamma and lambda in (0, 1], positive sizes and rates.
  void validate() const;
};

/// Diagonal Gaussian over actions: mean from an Mlp, state-independent log-std.
struct GaussianPolicy {
  Mlp mean;
  Eigen::VectorXd log_std;

  int action_size() const { return static_cast<int>(log_std.size()); }
  /// Mlp parameters followed by log_std.
  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& p);
  /// Per-sample log density; columns are samples.
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma v_{t+1} (1 - done_t) - v_t, A_t = delta_t + gamma lambda (1 - done_t) A_{t+1},
/// with v_n = last_value bootstrapping a non-terminal tail. Throws LengthMismatch.
GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const char> dones,
              double gamma, double lambda, double last_value = 0.0);

/// Zero mean, unit (population) standard deviation. Constant input maps to zeros.
Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& a);

struct SurrogateResult {
  double loss = 0.0;  // negated clipped surrogate
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  Eigen::VectorXd grad;  // d loss / d flat()
};

/// Clipped surrogate over a batch (columns are samples) and its exact gradient.
SurrogateResult ppo_policy_loss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                                const Eigen::MatrixXd& actions, const Eigen::VectorXd& old_log_prob,
                                const Eigen::VectorXd& advantages, double clip);

/// 0.5 mean squared error of a scalar net against `targets`; gradient written to `grad` if given.
double value_loss(const Mlp& value, const Eigen::MatrixXd& obs, const Eigen::VectorXd& targets,
                  Eigen::VectorXd* grad = nullptr);

struct PpoBatch {
  Eigen::MatrixXd obs;  // normalised, columns are samples
  Eigen::MatrixXd actions;
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd advantages;  // raw; normalised inside the update
  Eigen::VectorXd returns;
};

struct PpoDiagnostics {
  double surrogate = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
  /// max |ratio - 1| over the batch before the first gradient step.
  double initial_ratio_deviation = 0.0;
};

struct PpoOptimizers {
  Adam policy;
  Adam value;
};

/// Epochs of shuffled minibatch Adam steps on the clipped surrogate and the value loss.
/// On a non-finite loss or gradient, restores every parameter and optimiser state and throws NonFiniteLoss.
PpoDiagnostics ppo_update(GaussianPolicy& policy, Mlp& value, PpoOptimizers& opt, const PpoBatch& batch,
                          const TrainConfig& config, std::mt19937_64& rng);

struct DiscriminatorStats {
  double loss = 0.0;
  double real_score = 0.0;
  double fake_score = 0.0;
};

/// 0.5 mean (D(real) - 1)^2 + 0.5 mean (D(fake) + 1)^2, with gradient if requested.
double discriminator_loss(const Mlp& disc, const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake,
                          Eigen::VectorXd* grad = nullptr);

/// `steps` Adam steps on minibatches drawn from both sets. Throws DimensionMismatch on empty
/// sets or feature size mismatch.
DiscriminatorStats train_discriminator(Mlp& disc, Adam& opt, const Eigen::MatrixXd& real,
                                       const Eigen::MatrixXd& fake, int steps, int minibatch,
                                       std::mt19937_64& rng);

}  // namespace pointbench

#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace pointbench {

/// Fully connected net, tanh hidden layers, linear output. Parameters live in one flat
/// vector, layer by layer: weights (column-major, out x in) then biases.
class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform weights, zero biases; the last layer's weights are multiplied by `output_scale`.
  Mlp(std::vector<int> sizes, std::mt19937_64& rng, double output_scale = 1.0);
  /// Zero parameters.
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  Eigen::Index parameter_count() const { return params_.size(); }
  const Eigen::VectorXd& parameters() const { return params_; }
  /// Throws DimensionMismatch on wrong length.
  void set_parameters(const Eigen::VectorXd& p);

  /// Post-activation outputs of every layer (index 0 is the input).
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;
  };

  /// Columns are samples. Throws DimensionMismatch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  /// Single sample.
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;

  /// Parameter gradient of sum(upstream .* output) for the cached batch; optionally the
  /// input gradient.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& upstream,
                           Eigen::MatrixXd* input_grad = nullptr) const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

/// Adam on a flat parameter vector with a fixed learning rate; minimises.
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long t = 0;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
};

/// Running mean / variance of observations (parallel Welford merge).
class RunningNorm {
 public:
  RunningNorm() = default;
  explicit RunningNorm(int size);

  int size() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& var() const { return var_; }
  void set(double count, Eigen::VectorXd mean, Eigen::VectorXd var);

  /// Columns are samples.
  void update(const Eigen::MatrixXd& batch);
  /// (x - mean) / sqrt(var + 1e-8), clipped to [-clip, clip].
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x, double clip = 10.0) const;

 private:
  double count_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd var_;
};

}  // namespace pointbench

#include "pointbench/mlp.hpp"

#include <cmath>
#include <string>

#include "pointbench/error.hpp"

namespace pointbench {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw DimensionMismatch("mlp needs at least an input and an output layer");
  for (int s : sizes) {
    if (s < 1) throw DimensionMismatch("mlp layer sizes must be positive");
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  check_sizes(sizes_);
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(n);
    n += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(n);
}

Mlp::Mlp(std::vector<int> sizes, std::mt19937_64& rng, double output_scale) : Mlp(std::move(sizes)) {
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out)) * (l + 1 == layers ? output_scale : 1.0);
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(in) * out; ++i) params_[offsets_[l] + i] = u(rng);
  }
}

void Mlp::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) {
    throw DimensionMismatch("mlp expects " + std::to_string(params_.size()) + " parameters, got " +
                            std::to_string(p.size()));
  }
  params_ = p;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != input_size()) {
    throw DimensionMismatch("mlp input has " + std::to_string(x.rows()) + " rows, expected " +
                            std::to_string(input_size()));
  }
  const std::size_t layers = sizes_.size() - 1;
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offsets_[l], out, in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + offsets_[l] + static_cast<Eigen::Index>(out) * in, out);
    Eigen::MatrixXd z = w * a;
    z.colwise() += b;
    if (l + 1 < layers) z = z.array().tanh().matrix();
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

Eigen::VectorXd Mlp::predict(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x), nullptr).col(0);
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& upstream, Eigen::MatrixXd* input_grad) const {
  const std::size_t layers = sizes_.size() - 1;
  if (cache.activations.size() != layers + 1 || upstream.rows() != output_size() ||
      upstream.cols() != cache.activations.back().cols()) {
    throw DimensionMismatch("mlp backward: upstream does not match the cached batch");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd g = upstream;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const Eigen::MatrixXd& a = cache.activations[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + static_cast<Eigen::Index>(out) * in, out);
    gw.noalias() = g * a.transpose();
    gb = g.rowwise().sum();
    if (l > 0 || input_grad) {
      Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offsets_[l], out, in);
      Eigen::MatrixXd down = w.transpose() * g;
      if (l > 0) down = (down.array() * (1.0 - a.array().square())).matrix();
      g = std::move(down);
    }
  }
  if (input_grad) *input_grad = std::move(g);
  return grad;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (grad.size() != params.size()) throw DimensionMismatch("adam: gradient size mismatch");
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    t = 0;
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

RunningNorm::RunningNorm(int size)
    : mean_(Eigen::VectorXd::Zero(size)), var_(Eigen::VectorXd::Ones(size)) {}

void RunningNorm::set(double count, Eigen::VectorXd mean, Eigen::VectorXd var) {
  if (mean.size() != var.size()) throw DimensionMismatch("running norm: mean/var size mismatch");
  count_ = count;
  mean_ = std::move(mean);
  var_ = std::move(var);
}

void RunningNorm::update(const Eigen::MatrixXd& batch) {
  if (batch.rows() != mean_.size()) throw DimensionMismatch("running norm: wrong observation size");
  const double n = static_cast<double>(batch.cols());
  if (n == 0.0) return;
  const Eigen::VectorXd bm = batch.rowwise().mean();
  const Eigen::VectorXd bv = (batch.colwise() - bm).array().square().rowwise().sum() / n;
  if (count_ == 0.0) {
    mean_ = bm;
    var_ = bv;
    count_ = n;
    return;
  }
  const double total = count_ + n;
  const Eigen::VectorXd delta = bm - mean_;
  mean_ += delta * (n / total);
  var_ = (var_ * count_ + bv * n + delta.cwiseProduct(delta) * (count_ * n / total)) / total;
  count_ = total;
}

Eigen::MatrixXd RunningNorm::normalize(const Eigen::MatrixXd& x, double clip) const {
  if (x.rows() != mean_.size()) throw DimensionMismatch("running norm: wrong observation size");
  const Eigen::ArrayXd inv = (var_.array() + 1e-8).rsqrt();
  Eigen::MatrixXd out = ((x.colwise() - mean_).array().colwise() * inv).matrix();
  return out.cwiseMax(-clip).cwiseMin(clip);
}

}  // namespace pointbench

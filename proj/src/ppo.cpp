#include "pointbench/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pointbench/error.hpp"

namespace pointbench {

namespace {

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, std::span<const Eigen::Index> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

Eigen::VectorXd entries(const Eigen::VectorXd& v, std::span<const Eigen::Index> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  return out;
}

void clip_norm(Eigen::VectorXd& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

void TrainConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("train: clip must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train: gamma must lie in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("train: lambda must lie in (0, 1]");
  if (batch_size < 1 || minibatch_size < 1 || epochs < 1 || total_steps < 1) {
    throw ConfigError("train: batch, minibatch, epochs and total_steps must be at least 1");
  }
  if (!(lr_policy > 0.0 && lr_value > 0.0 && lr_discriminator > 0.0)) {
    throw ConfigError("train: learning rates must be positive");
  }
  if (discriminator_steps < 0) throw ConfigError("train: discriminator_steps must be non-negative");
  for (const auto* h : {&policy_hidden, &value_hidden, &discriminator_hidden}) {
    for (int s : *h) {
      if (s < 1) throw ConfigError("train: hidden layer sizes must be positive");
    }
  }
  if (!std::isfinite(init_log_std)) throw ConfigError("train: init_log_std must be finite");
}

Eigen::VectorXd GaussianPolicy::flat() const {
  Eigen::VectorXd p(mean.parameter_count() + log_std.size());
  p << mean.parameters(), log_std;
  return p;
}

void GaussianPolicy::set_flat(const Eigen::VectorXd& p) {
  if (p.size() != mean.parameter_count() + log_std.size()) throw DimensionMismatch("policy parameter size mismatch");
  mean.set_parameters(p.head(mean.parameter_count()));
  log_std = p.tail(log_std.size());
}

Eigen::VectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const {
  const Eigen::MatrixXd mu = mean.forward(obs);
  if (actions.rows() != mu.rows() || actions.cols() != mu.cols()) throw DimensionMismatch("action batch shape");
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
  const double constant = -log_std.sum() - 0.5 * static_cast<double>(log_std.size()) * std::log(2.0 * std::numbers::pi);
  const Eigen::ArrayXXd z2 = (actions - mu).array().square().colwise() * inv_var;
  return (-0.5 * z2.colwise().sum().transpose() + constant).matrix();
}

Eigen::VectorXd GaussianPolicy::sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const {
  Eigen::VectorXd a = mean.predict(obs);
  std::normal_distribution<double> n;
  for (Eigen::Index d = 0; d < a.size(); ++d) a[d] += std::exp(log_std[d]) * n(rng);
  return a;
}

GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const char> dones,
              double gamma, double lambda, double last_value) {
  if (rewards.size() != values.size() || rewards.size() != dones.size()) {
    throw LengthMismatch("gae: rewards, values and dones must have equal length");
  }
  const std::size_t n = rewards.size();
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = last_value;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_adv = delta + gamma * lambda * live * next_adv;
    r.advantages[t] = next_adv;
    r.returns[t] = next_adv + values[t];
    next_value = values[t];
  }
  return r;
}

Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& a) {
  if (a.size() == 0) return a;
  const double m = a.mean();
  const Eigen::VectorXd c = a.array() - m;
  const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(a.size()));
  if (sd < 1e-12) return Eigen::VectorXd::Zero(a.size());
  return c / sd;
}

SurrogateResult ppo_policy_loss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                                const Eigen::MatrixXd& actions, const Eigen::VectorXd& old_log_prob,
                                const Eigen::VectorXd& adv, double clip) {
  const Eigen::Index n = obs.cols();
  if (actions.cols() != n || old_log_prob.size() != n || adv.size() != n || n == 0) {
    throw DimensionMismatch("ppo batch columns disagree");
  }
  Mlp::Cache cache;
  const Eigen::MatrixXd mu = policy.mean.forward(obs, &cache);
  if (actions.rows() != mu.rows()) throw DimensionMismatch("action size mismatch");
  const Eigen::ArrayXd inv_var = (-2.0 * policy.log_std.array()).exp();
  const Eigen::MatrixXd diff = actions - mu;
  const Eigen::ArrayXXd z2 = diff.array().square().colwise() * inv_var;
  const double constant =
      -policy.log_std.sum() - 0.5 * static_cast<double>(policy.log_std.size()) * std::log(2.0 * std::numbers::pi);
  const Eigen::VectorXd logp = (-0.5 * z2.colwise().sum().transpose() + constant).matrix();

  SurrogateResult r;
  Eigen::VectorXd dlogp(n);
  double obj = 0.0, kl = 0.0;
  int clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double log_ratio = logp[i] - old_log_prob[i];
    const double ratio = std::exp(log_ratio);
    const double unclipped = ratio * adv[i];
    const double bounded = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv[i];
    if (unclipped <= bounded) {
      obj += unclipped;
      dlogp[i] = -unclipped / static_cast<double>(n);
    } else {
      obj += bounded;
      dlogp[i] = 0.0;
    }
    kl += (ratio - 1.0) - log_ratio;
    clipped += std::abs(ratio - 1.0) > clip;
  }
  r.loss = -obj / static_cast<double>(n);
  r.approx_kl = kl / static_cast<double>(n);
  r.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);

  // d logp / d mu = (a - mu) / sigma^2 ; d logp / d log_std = z^2 - 1.
  const Eigen::MatrixXd up = ((diff.array().colwise() * inv_var).rowwise() * dlogp.transpose().array()).matrix();
  const Eigen::VectorXd g_mean = policy.mean.backward(cache, up);
  const Eigen::VectorXd g_std = ((z2 - 1.0).rowwise() * dlogp.transpose().array()).rowwise().sum().matrix();
  r.grad.resize(g_mean.size() + g_std.size());
  r.grad << g_mean, g_std;
  return r;
}

double value_loss(const Mlp& value, const Eigen::MatrixXd& obs, const Eigen::VectorXd& targets, Eigen::VectorXd* grad) {
  if (value.output_size() != 1 || targets.size() != obs.cols() || obs.cols() == 0) {
    throw DimensionMismatch("value batch shape");
  }
  Mlp::Cache cache;
  const Eigen::MatrixXd v = value.forward(obs, grad ? &cache : nullptr);
  const Eigen::RowVectorXd err = v.row(0) - targets.transpose();
  const double n = static_cast<double>(targets.size());
  if (grad) *grad = value.backward(cache, err / n);
  return 0.5 * err.squaredNorm() / n;
}

PpoDiagnostics ppo_update(GaussianPolicy& policy, Mlp& value, PpoOptimizers& opt, const PpoBatch& batch,
                          const TrainConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const Eigen::Index n = batch.obs.cols();
  if (n == 0) throw DimensionMismatch("ppo_update: empty batch");
  if (batch.actions.cols() != n || batch.old_log_prob.size() != n || batch.advantages.size() != n ||
      batch.returns.size() != n) {
    throw DimensionMismatch("ppo_update: batch columns disagree");
  }
  const GaussianPolicy saved_policy = policy;
  const Mlp saved_value = value;
  const PpoOptimizers saved_opt = opt;
  auto fail = [&](const char* what) {
    policy = saved_policy;
    value = saved_value;
    opt = saved_opt;
    throw NonFiniteLoss(std::string("ppo_update: non-finite ") + what + "; parameters restored");
  };

  opt.policy.lr = cfg.lr_policy;
  opt.value.lr = cfg.lr_value;
  const Eigen::VectorXd adv = normalize_advantages(batch.advantages);

  PpoDiagnostics d;
  {
    const Eigen::VectorXd ratio = (policy.log_prob(batch.obs, batch.actions) - batch.old_log_prob).array().exp();
    d.initial_ratio_deviation = (ratio.array() - 1.0).abs().maxCoeff();
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto mb = static_cast<std::size_t>(std::min<Eigen::Index>(cfg.minibatch_size, n));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::span<const Eigen::Index> idx(order.data() + start, std::min(mb, order.size() - start));
      const Eigen::MatrixXd obs = columns(batch.obs, idx);
      SurrogateResult s = ppo_policy_loss(policy, obs, columns(batch.actions, idx), entries(batch.old_log_prob, idx),
                                          entries(adv, idx), cfg.clip);
      if (!std::isfinite(s.loss) || !finite(s.grad)) fail("policy loss");
      clip_norm(s.grad, cfg.max_grad_norm);
      Eigen::VectorXd p = policy.flat();
      opt.policy.step(p, s.grad);
      if (!finite(p)) fail("policy parameters");
      policy.set_flat(p);

      Eigen::VectorXd g;
      const double vl = value_loss(value, obs, entries(batch.returns, idx), &g);
      if (!std::isfinite(vl) || !finite(g)) fail("value loss");
      clip_norm(g, cfg.max_grad_norm);
      Eigen::VectorXd vp = value.parameters();
      opt.value.step(vp, g);
      if (!finite(vp)) fail("value parameters");
      value.set_parameters(vp);
    }
  }

  const SurrogateResult after = ppo_policy_loss(policy, batch.obs, batch.actions, batch.old_log_prob, adv, cfg.clip);
  d.surrogate = -after.loss;
  d.approx_kl = after.approx_kl;
  d.clip_fraction = after.clip_fraction;
  d.value_loss = value_loss(value, batch.obs, batch.returns);
  if (!std::isfinite(d.surrogate) || !std::isfinite(d.value_loss)) fail("diagnostics");
  return d;
}

double discriminator_loss(const Mlp& disc, const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake,
                          Eigen::VectorXd* grad) {
  if (real.cols() == 0 || fake.cols() == 0) throw DimensionMismatch("discriminator needs real and fake samples");
  if (real.rows() != disc.input_size() || fake.rows() != disc.input_size() || disc.output_size() != 1) {
    throw DimensionMismatch("discriminator feature size mismatch");
  }
  Mlp::Cache cr, cf;
  const Eigen::MatrixXd dr = disc.forward(real, grad ? &cr : nullptr);
  const Eigen::MatrixXd df = disc.forward(fake, grad ? &cf : nullptr);
  const Eigen::ArrayXXd er = dr.array() - 1.0;
  const Eigen::ArrayXXd ef = df.array() + 1.0;
  const double nr = static_cast<double>(real.cols()), nf = static_cast<double>(fake.cols());
  if (grad) *grad = disc.backward(cr, (er / nr).matrix()) + disc.backward(cf, (ef / nf).matrix());
  return 0.5 * er.square().sum() / nr + 0.5 * ef.square().sum() / nf;
}

DiscriminatorStats train_discriminator(Mlp& disc, Adam& opt, const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake,
                                       int steps, int minibatch, std::mt19937_64& rng) {
  if (real.cols() == 0 || fake.cols() == 0) throw DimensionMismatch("discriminator needs real and fake samples");
  if (real.rows() != disc.input_size() || fake.rows() != disc.input_size()) {
    throw DimensionMismatch("discriminator feature size mismatch");
  }
  if (minibatch < 1) throw ConfigError("discriminator minibatch must be at least 1");
  std::uniform_int_distribution<Eigen::Index> pick_r(0, real.cols() - 1), pick_f(0, fake.cols() - 1);
  std::vector<Eigen::Index> ir(static_cast<std::size_t>(std::min<Eigen::Index>(minibatch, real.cols())));
  std::vector<Eigen::Index> jf(static_cast<std::size_t>(std::min<Eigen::Index>(minibatch, fake.cols())));
  for (int s = 0; s < steps; ++s) {
    for (auto& i : ir) i = pick_r(rng);
    for (auto& j : jf) j = pick_f(rng);
    Eigen::VectorXd g;
    const double loss = discriminator_loss(disc, columns(real, ir), columns(fake, jf), &g);
    if (!std::isfinite(loss) || !finite(g)) throw NonFiniteLoss("discriminator loss is not finite");
    Eigen::VectorXd p = disc.parameters();
    opt.step(p, g);
    disc.set_parameters(p);
  }
  DiscriminatorStats st;
  st.loss = discriminator_loss(disc, real, fake);
  st.real_score = disc.forward(real).mean();
  st.fake_score = disc.forward(fake).mean();
  return st;
}

}  // namespace pointbench

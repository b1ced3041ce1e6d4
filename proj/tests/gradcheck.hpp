#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "pointbench/ppo.hpp"

namespace gradcheck {

// Largest per-parameter relative error between an analytic gradient and a central
// difference with step h. Entries where both are below `floor` are compared absolutely.
inline double max_relative_error(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& analytic, double h = 1e-5, double floor = 1e-6) {
  double worst = 0.0;
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double down = f(p);
    p[i] = x[i];
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
  }
  return worst;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Worst relative error of the Mlp, policy, value and discriminator gradients on one random instance.
struct Report {
  double mlp = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double discriminator = 0.0;
  double worst() const { return std::max({mlp, policy, value, discriminator}); }
};

inline Report check_instance(std::uint64_t seed) {
  using namespace pointbench;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> width(2, 6);
  const int in = width(rng), out = width(rng), n = 5;
  Report r;

  {
    Mlp net({in, width(rng), width(rng), out}, rng);
    const Eigen::MatrixXd x = random_matrix(in, n, rng);
    const Eigen::MatrixXd up = random_matrix(out, n, rng);
    Mlp::Cache cache;
    net.forward(x, &cache);
    const Eigen::VectorXd g = net.backward(cache, up);
    r.mlp = max_relative_error(
        [&](const Eigen::VectorXd& p) {
          Mlp m = net;
          m.set_parameters(p);
          return (m.forward(x).array() * up.array()).sum();
        },
        net.parameters(), g);
  }
  {
    GaussianPolicy pol;
    pol.mean = Mlp({in, width(rng), out}, rng);
    pol.log_std = random_matrix(out, 1, rng, 0.3).col(0);
    const Eigen::MatrixXd obs = random_matrix(in, n, rng);
    const Eigen::MatrixXd act = pol.mean.forward(obs) + random_matrix(out, n, rng, 0.5);
    // Old log-probs offset so that some samples sit in the clipped region.
    const Eigen::VectorXd old = pol.log_prob(obs, act) + random_matrix(n, 1, rng, 0.3).col(0);
    const Eigen::VectorXd adv = random_matrix(n, 1, rng).col(0);
    const SurrogateResult s = ppo_policy_loss(pol, obs, act, old, adv, 0.2);
    r.policy = max_relative_error(
        [&](const Eigen::VectorXd& p) {
          GaussianPolicy q = pol;
          q.set_flat(p);
          return ppo_policy_loss(q, obs, act, old, adv, 0.2).loss;
        },
        pol.flat(), s.grad);
  }
  {
    Mlp v({in, width(rng), 1}, rng);
    const Eigen::MatrixXd obs = random_matrix(in, n, rng);
    const Eigen::VectorXd ret = random_matrix(n, 1, rng).col(0);
    Eigen::VectorXd g;
    value_loss(v, obs, ret, &g);
    r.value = max_relative_error(
        [&](const Eigen::VectorXd& p) {
          Mlp m = v;
          m.set_parameters(p);
          return value_loss(m, obs, ret);
        },
        v.parameters(), g);
  }
  {
    Mlp d({in, width(rng), 1}, rng);
    const Eigen::MatrixXd real = random_matrix(in, n, rng);
    const Eigen::MatrixXd fake = random_matrix(in, n + 2, rng);
    Eigen::VectorXd g;
    discriminator_loss(d, real, fake, &g);
    r.discriminator = max_relative_error(
        [&](const Eigen::VectorXd& p) {
          Mlp m = d;
          m.set_parameters(p);
          return discriminator_loss(m, real, fake);
        },
        d.parameters(), g);
  }
  return r;
}

}  // namespace gradcheck

#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "sdglmc/random.hpp"

namespace sdglmc {

/// Per-cell Gaussian random-walk Metropolis for the latent log-means
///   p(theta_it | .) ~ exp{ loglik_it(theta) - (theta - center_it)^2 / (2 tau2) }.
/// The proposal s.d. of a cell is multiplier_it / sqrt(curvature_it + 1/tau2)
/// with a data-only curvature, so the proposal stays symmetric. Multipliers
/// adapt in batches toward a target acceptance rate and are frozen by the
/// caller after burn-in.
class LatentKernel {
 public:
  LatentKernel() = default;
  LatentKernel(Index n, Index T, double target_acceptance = 0.44, int batch = 50);

  template <class LogLik>
  Index step(MatrixXd& theta, const MatrixXd& center, const MatrixXd& curvature, double tau2,
             LogLik&& loglik, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double inv_tau = 1.0 / tau2;
    Index accepted = 0;
    for (Index t = 0; t < theta.cols(); ++t) {
      for (Index i = 0; i < theta.rows(); ++i) {
        const double cur = theta(i, t);
        const double sd = multiplier_(i, t) / std::sqrt(curvature(i, t) + inv_tau);
        const double prop = cur + sd * z(rng);
        const double dc = cur - center(i, t), dp = prop - center(i, t);
        const double log_ratio =
            loglik(i, t, prop) - loglik(i, t, cur) - 0.5 * inv_tau * (dp * dp - dc * dc);
        if (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio) {
          theta(i, t) = prop;
          ++accepted;
          batch_accept_(i, t) += 1.0;
          total_accept_(i, t) += 1.0;
        }
      }
    }
    ++batch_steps_;
    ++total_steps_;
    return accepted;
  }

  /// End-of-batch adaptation; call once per iteration while adapting.
  void adapt();

  /// Restart acceptance bookkeeping (e.g. at the end of burn-in).
  void reset_counts();

  const MatrixXd& multiplier() const { return multiplier_; }
  MatrixXd& multiplier() { return multiplier_; }
  MatrixXd acceptance_rates() const;
  double mean_acceptance() const;

 private:
  MatrixXd multiplier_, batch_accept_, total_accept_;
  double target_ = 0.44;
  int batch_ = 50;
  int batches_done_ = 0;
  long batch_steps_ = 0, total_steps_ = 0;
};

/// Poisson log-likelihood in the log-mean, without the constant term.
struct PoissonLogLik {
  const MatrixXd& Y;
  double operator()(Index i, Index t, double theta) const {
    return Y(i, t) * theta - std::exp(theta);
  }
};

/// Adds 1{Yrep > Y} + 0.5 1{Yrep = Y} per cell for one replicate Yrep ~ Poisson(mu).
void accumulate_pvalues(MatrixXd& acc, const MatrixXd& Y, const MatrixXd& mu, Rng& rng);

/// -2 sum log Poisson(Y | mu), including the log-factorial term.
double poisson_deviance(const MatrixXd& Y, const MatrixXd& mu);

}  // namespace sdglmc

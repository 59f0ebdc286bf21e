#include "sdglmc/latent.hpp"

#include <algorithm>

namespace sdglmc {

LatentKernel::LatentKernel(Index n, Index T, double target_acceptance, int batch)
    : multiplier_(MatrixXd::Constant(n, T, 2.4)),
      batch_accept_(MatrixXd::Zero(n, T)),
      total_accept_(MatrixXd::Zero(n, T)),
      target_(target_acceptance),
      batch_(batch) {}

void LatentKernel::adapt() {
  if (batch_steps_ < batch_) return;
  ++batches_done_;
  const double delta = std::min(0.5, 2.0 / std::sqrt(static_cast<double>(batches_done_)));
  const double steps = static_cast<double>(batch_steps_);
  for (Index k = 0; k < multiplier_.size(); ++k) {
    const double rate = batch_accept_.data()[k] / steps;
    double& m = multiplier_.data()[k];
    m *= std::exp(rate > target_ ? delta : -delta);
    m = std::clamp(m, 1e-3, 50.0);
  }
  batch_accept_.setZero();
  batch_steps_ = 0;
}

void LatentKernel::reset_counts() {
  batch_accept_.setZero();
  total_accept_.setZero();
  batch_steps_ = 0;
  total_steps_ = 0;
}

MatrixXd LatentKernel::acceptance_rates() const {
  if (total_steps_ == 0) return MatrixXd::Zero(total_accept_.rows(), total_accept_.cols());
  return total_accept_ / static_cast<double>(total_steps_);
}

double LatentKernel::mean_acceptance() const {
  if (total_steps_ == 0 || total_accept_.size() == 0) return 0.0;
  return total_accept_.mean() / static_cast<double>(total_steps_);
}

void accumulate_pvalues(MatrixXd& acc, const MatrixXd& Y, const MatrixXd& mu, Rng& rng) {
  for (Index k = 0; k < mu.size(); ++k) {
    const double yrep = draw_poisson(mu.data()[k], rng), y = Y.data()[k];
    acc.data()[k] += yrep > y ? 1.0 : (yrep == y ? 0.5 : 0.0);
  }
}

double poisson_deviance(const MatrixXd& Y, const MatrixXd& mu) {
  double ll = 0.0;
  for (Index k = 0; k < Y.size(); ++k) {
    const double y = Y.data()[k], m = mu.data()[k];
    ll += (y > 0 ? y * std::log(m) : 0.0) - m - std::lgamma(y + 1.0);
  }
  return -2.0 * ll;
}

}  // namespace sdglmc

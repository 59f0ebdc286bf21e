#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "sdglmc/model_core.hpp"

namespace sdglmc {

using Rng = std::mt19937_64;

/// Independent stream for chain/replicate `stream` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

inline double std_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }
VectorXd std_normal_vector(Index n, Rng& rng);

/// Draw from IG(shape, rate): rate / Gamma(shape, 1).
double draw_inverse_gamma(const IgParams& p, Rng& rng);

/// Pr(S <= x) for S ~ IG(shape, rate).
double inverse_gamma_cdf(double x, const IgParams& p);

/// x ~ N(P^{-1} b, P^{-1}) for a dense SPD precision. Throws CholeskyFailure.
VectorXd sample_gaussian_precision(const MatrixXd& P, const VectorXd& b, Rng& rng);

/// Draw from IW(df, scale) with density proportional to
/// |S|^{-(df + p + 1)/2} exp(-tr(scale S^{-1}) / 2), via a Bartlett draw of
/// the Wishart(df, scale^{-1}) precision.
MatrixXd draw_inverse_wishart(double df, const MatrixXd& scale, Rng& rng);

/// Poisson draw that tolerates large means.
double draw_poisson(double mean, Rng& rng);

}  // namespace sdglmc

#include "sdglmc/random.hpp"

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "sdglmc/error.hpp"

namespace sdglmc {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5d9c1au};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

VectorXd std_normal_vector(Index n, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = z(rng);
  return v;
}

double draw_inverse_gamma(const IgParams& p, Rng& rng) {
  std::gamma_distribution<double> g(p.shape, 1.0);
  double x = g(rng);
  // shapes below one can underflow to exactly zero
  while (x <= 0.0) x = g(rng);
  return p.rate / x;
}

double inverse_gamma_cdf(double x, const IgParams& p) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_q(p.shape, p.rate / x);
}

VectorXd sample_gaussian_precision(const MatrixXd& P, const VectorXd& b, Rng& rng) {
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::CholeskyFailure, "full-conditional precision is not positive definite");
  VectorXd mean = llt.solve(b);
  VectorXd z = std_normal_vector(P.rows(), rng);
  return mean + llt.matrixU().solve(z);
}

MatrixXd draw_inverse_wishart(double df, const MatrixXd& scale, Rng& rng) {
  const Index p = scale.rows();
  require(df > static_cast<double>(p) - 1.0, ErrorCode::InvalidConfig,
          "inverse-Wishart degrees of freedom must exceed p - 1");
  // Wishart(df, V) with V = scale^{-1}: W = L A A' L', V = L L'
  Eigen::LLT<MatrixXd> scale_llt(scale);
  if (scale_llt.info() != Eigen::Success)
    fail(ErrorCode::CholeskyFailure, "inverse-Wishart scale is not positive definite");
  MatrixXd V = scale_llt.solve(MatrixXd::Identity(p, p));
  V = 0.5 * (V + V.transpose());
  Eigen::LLT<MatrixXd> vllt(V);
  MatrixXd L = vllt.matrixL();
  MatrixXd A = MatrixXd::Zero(p, p);
  std::normal_distribution<double> z(0.0, 1.0);
  for (Index i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi(df - static_cast<double>(i));
    A(i, i) = std::sqrt(chi(rng));
    for (Index j = 0; j < i; ++j) A(i, j) = z(rng);
  }
  MatrixXd LA = L * A;
  MatrixXd W = LA * LA.transpose();
  Eigen::LLT<MatrixXd> wllt(W);
  if (wllt.info() != Eigen::Success)
    fail(ErrorCode::CholeskyFailure, "Wishart draw is singular");
  MatrixXd S = wllt.solve(MatrixXd::Identity(p, p));
  return 0.5 * (S + S.transpose());
}

double draw_poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0.0;
  return static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
}

}  // namespace sdglmc

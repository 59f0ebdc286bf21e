#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sdglmc/error.hpp"
#include "sdglmc/spatial_graph.hpp"
#include "sdglmc/trend_basis.hpp"

using namespace sdglmc;

namespace {

VectorXd grid(Index n, double lo, double hi) { return VectorXd::LinSpaced(n, lo, hi); }

Index qr_rank(const MatrixXd& m) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  return qr.rank();
}

MatrixXd random_matrix(Index r, Index c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  MatrixXd m(r, c);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = z(rng);
  return m;
}

}  // namespace

TEST_CASE("df=1 natural spline is a single monotone column") {
  const VectorXd x = grid(50, 0.0, 1.0);
  const MatrixXd B = natural_cubic_basis(x, 1);
  REQUIRE(B.cols() == 1);
  const VectorXd d = B.col(0).tail(49) - B.col(0).head(49);
  CHECK(((d.array() > 0).all() || (d.array() < 0).all()));
}

TEST_CASE("df=4 on 100 points has rank 4") {
  const MatrixXd B = natural_cubic_basis(grid(100, 0.0, 10.0), 4);
  CHECK(B.cols() == 4);
  CHECK(qr_rank(B) == 4);
}

TEST_CASE("second derivative vanishes at boundary knots") {
  const VectorXd x = grid(200, -3.0, 7.0);
  const auto spline = NaturalCubicSpline::from_data(x, 6);
  CHECK(spline.second_derivative(-3.0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(spline.second_derivative(7.0).cwiseAbs().maxCoeff() < 1e-10);
  // finite-difference check, independent of the analytic derivative
  const double h = 1e-3;
  for (double b : {-3.0, 7.0}) {
    const double s = b < 0 ? 1.0 : -1.0;  // step inward
    const Eigen::RowVectorXd fd =
        (spline.eval(b) - 2.0 * spline.eval(b + s * h) + spline.eval(b + 2 * s * h)) / (h * h);
    CHECK(fd.cwiseAbs().maxCoeff() < 1e-2 * std::max(1.0, spline.second_derivative(0.0).cwiseAbs().maxCoeff()));
  }
  // linear beyond the boundary
  const Eigen::RowVectorXd e1 = spline.eval(8.0), e2 = spline.eval(9.0), e3 = spline.eval(10.0);
  CHECK((e1 - 2 * e2 + e3).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("too few distinct values") {
  VectorXd x(6);
  x << 1, 1, 2, 2, 3, 3;
  try {
    natural_cubic_basis(x, 3);
    FAIL("expected InsufficientDistinctValues");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientDistinctValues);
  }
  CHECK(natural_cubic_basis(x, 2).cols() == 2);
}

TEST_CASE("seasonal harmonics") {
  VectorXd t(3);
  t << 0, 365.0 / 4.0, 365;
  const MatrixXd H = seasonal_harmonics(t, 365.0);
  CHECK(H(0, 0) == doctest::Approx(1.0));
  CHECK(H(0, 1) == doctest::Approx(0.0));
  CHECK(std::abs(H(1, 0)) < 1e-12);
  CHECK(H(1, 1) == doctest::Approx(1.0));
  CHECK(H(2, 0) == doctest::Approx(1.0));
  CHECK(std::abs(H(2, 1)) < 1e-12);
}

TEST_CASE("constant exposure is fitted exactly") {
  const MatrixXd coords = lattice_coordinates(4, 4);
  const MatrixXd X = MatrixXd::Constant(16, 30, 12.5);
  const TrendFit f = fit_space_time_trend(X, coords, 5, 20);
  CHECK(f.residual.cwiseAbs().maxCoeff() < 1e-10);
  CHECK((f.fitted + f.residual - X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("exposure built from the basis leaves no residual") {
  const MatrixXd coords = lattice_coordinates(4, 5);
  const MatrixXd S = spatial_polynomial_basis(coords, 3);
  const MatrixXd B = temporal_trend_basis(60, 8);
  const MatrixXd X = S * random_matrix(3, 8, 3) * B.transpose();
  const TrendFit f = fit_space_time_trend(X, coords, 3, 8);
  CHECK(f.residual.norm() < 1e-9 * X.norm());
}

TEST_CASE("pure temporal sine within the spline space") {
  const Index T = 120;
  const MatrixXd B = temporal_trend_basis(static_cast<int>(T), 10);
  const TrendFit f = fit_tensor_trend(MatrixXd::Ones(6, 1) * B.col(3).transpose(),
                                      spatial_polynomial_basis(lattice_coordinates(2, 3), 1), B);
  CHECK(f.residual.norm() < 1e-10);
  // a slow sine is captured well by 10 temporal df
  MatrixXd X(6, T);
  for (Index t = 0; t < T; ++t) X.col(t).setConstant(std::sin(2 * std::numbers::pi * t / T));
  const TrendFit g = fit_space_time_trend(X, lattice_coordinates(2, 3), 1, 10);
  CHECK(g.residual.cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("residual orthogonality, idempotence and Pythagoras") {
  const MatrixXd coords = lattice_coordinates(5, 5);
  const MatrixXd X = random_matrix(25, 80, 11);
  const TrendFit f = fit_space_time_trend(X, coords, 5, 20);
  CHECK((f.spatial_basis.transpose() * f.residual * f.temporal_basis).cwiseAbs().maxCoeff() < 1e-9);
  const TrendFit again = fit_tensor_trend(f.residual, f.spatial_basis, f.temporal_basis);
  CHECK(again.fitted.cwiseAbs().maxCoeff() < 1e-10);
  const double lhs = X.squaredNorm();
  const double rhs = f.fitted.squaredNorm() + f.residual.squaredNorm();
  CHECK(std::abs(lhs - rhs) < 1e-8 * lhs);
  CHECK(std::abs(f.fitted.cwiseProduct(f.residual).sum()) < 1e-8 * lhs);
}

TEST_CASE("least-squares oracle on the explicit tensor design") {
  const MatrixXd coords = lattice_coordinates(3, 3);
  const MatrixXd X = random_matrix(9, 25, 5);
  const TrendFit f = fit_space_time_trend(X, coords, 3, 4);
  // dense Kronecker design, time-major stacking
  const MatrixXd& S = f.spatial_basis;
  const MatrixXd& B = f.temporal_basis;
  MatrixXd D(9 * 25, S.cols() * B.cols());
  for (Index t = 0; t < 25; ++t)
    for (Index i = 0; i < 9; ++i)
      for (Index a = 0; a < S.cols(); ++a)
        for (Index b = 0; b < B.cols(); ++b) D(t * 9 + i, b * S.cols() + a) = S(i, a) * B(t, b);
  const VectorXd y = Eigen::Map<const VectorXd>(X.data(), X.size());
  const VectorXd fit = D * D.colPivHouseholderQr().solve(y);
  CHECK((fit - Eigen::Map<const VectorXd>(f.fitted.data(), f.fitted.size())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("degrees of freedom beyond the data are rejected") {
  const MatrixXd coords = lattice_coordinates(2, 2);
  const MatrixXd X = random_matrix(4, 10, 2);
  try {
    fit_space_time_trend(X, coords, 5, 3);
    FAIL("expected RankDeficientBasis");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientBasis);
  }
  CHECK_THROWS_AS(fit_space_time_trend(X, coords, 2, 11), Error);
}

TEST_CASE("collinear columns are pivoted out") {
  const MatrixXd S = spatial_polynomial_basis(lattice_coordinates(3, 3), 3);
  MatrixXd S2(9, 4);
  S2 << S, S.col(1) * 2.0;
  const MatrixXd B = temporal_trend_basis(20, 3);
  const TrendFit f = fit_tensor_trend(random_matrix(9, 20, 9), S2, B);
  CHECK(f.dropped_columns == 1);
}

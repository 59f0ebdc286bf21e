#include "sdglmc/trend_basis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#include "sdglmc/error.hpp"

namespace sdglmc {

namespace {

inline double cube_pos(double x) { return x > 0.0 ? x * x * x : 0.0; }
inline double pos(double x) { return x > 0.0 ? x : 0.0; }

std::vector<double> distinct_sorted(const VectorXd& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double quantile_sorted(const std::vector<double>& v, double p) {
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Orthonormal basis of the column space of B; collinear columns dropped.
MatrixXd column_space(const MatrixXd& B, int& dropped) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(B);
  qr.setThreshold(1e-10);
  const Index r = qr.rank();
  dropped += static_cast<int>(B.cols() - r);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(B.rows(), r);
  return q;
}

}  // namespace

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> knots) : knots_(std::move(knots)) {
  require(knots_.size() >= 2, ErrorCode::InsufficientDistinctValues,
          "natural spline needs at least two knots");
  for (size_t k = 1; k < knots_.size(); ++k)
    require(knots_[k] > knots_[k - 1], ErrorCode::InsufficientDistinctValues,
            "spline knots must be strictly increasing");
  lo_ = knots_.front();
  hi_ = knots_.back();
  u_.resize(knots_.size());
  for (size_t k = 0; k < knots_.size(); ++k) u_[k] = scaled(knots_[k]);
}

NaturalCubicSpline NaturalCubicSpline::from_data(const VectorXd& x, int df) {
  require(df >= 1, ErrorCode::InvalidConfig, "spline df must be >= 1");
  const auto v = distinct_sorted(x);
  if (static_cast<int>(v.size()) < df + 1)
    fail(ErrorCode::InsufficientDistinctValues,
         "natural spline with df=" + std::to_string(df) + " needs " + std::to_string(df + 1) +
             " distinct values, got " + std::to_string(v.size()));
  std::vector<double> knots;
  knots.reserve(static_cast<size_t>(df) + 1);
  for (int k = 0; k <= df; ++k) knots.push_back(quantile_sorted(v, static_cast<double>(k) / df));
  return NaturalCubicSpline(std::move(knots));
}

Eigen::RowVectorXd NaturalCubicSpline::eval(double x) const {
  const int K = static_cast<int>(u_.size());
  const double u = scaled(x);
  Eigen::RowVectorXd row(K - 1);
  row(0) = u;
  const double uK = u_[K - 1];
  const double last = (cube_pos(u - u_[K - 2]) - cube_pos(u - uK)) / (uK - u_[K - 2]);
  for (int k = 0; k + 2 < K; ++k) {
    const double dk = (cube_pos(u - u_[k]) - cube_pos(u - uK)) / (uK - u_[k]);
    row(k + 1) = dk - last;
  }
  return row;
}

Eigen::RowVectorXd NaturalCubicSpline::second_derivative(double x) const {
  const int K = static_cast<int>(u_.size());
  const double u = scaled(x);
  const double s2 = 1.0 / ((hi_ - lo_) * (hi_ - lo_));
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(K - 1);
  const double uK = u_[K - 1];
  const double last = 6.0 * (pos(u - u_[K - 2]) - pos(u - uK)) / (uK - u_[K - 2]);
  for (int k = 0; k + 2 < K; ++k) {
    const double dk = 6.0 * (pos(u - u_[k]) - pos(u - uK)) / (uK - u_[k]);
    row(k + 1) = (dk - last) * s2;
  }
  return row;
}

MatrixXd NaturalCubicSpline::design(const VectorXd& x) const {
  MatrixXd B(x.size(), df());
  for (Index i = 0; i < x.size(); ++i) B.row(i) = eval(x[i]);
  return B;
}

MatrixXd natural_cubic_basis(const VectorXd& x, int df) {
  return NaturalCubicSpline::from_data(x, df).design(x);
}

MatrixXd seasonal_harmonics(const VectorXd& t, double period) {
  require(period > 0.0, ErrorCode::InvalidConfig, "period must be positive");
  MatrixXd h(t.size(), 2);
  for (Index i = 0; i < t.size(); ++i) {
    const double a = 2.0 * std::numbers::pi * t[i] / period;
    h(i, 0) = std::cos(a);
    h(i, 1) = std::sin(a);
  }
  return h;
}

MatrixXd spatial_polynomial_basis(const MatrixXd& coords, int df) {
  require(df >= 1, ErrorCode::InvalidConfig, "spatial df must be >= 1");
  const Index n = coords.rows();
  MatrixXd z = MatrixXd::Zero(n, 2);
  for (Index c = 0; c < std::min<Index>(2, coords.cols()); ++c) {
    const double mean = coords.col(c).mean();
    const double sd =
        std::sqrt((coords.col(c).array() - mean).square().sum() / std::max<Index>(n - 1, 1));
    z.col(c) = (coords.col(c).array() - mean) / (sd > 0 ? sd : 1.0);
  }
  MatrixXd S(n, df);
  int col = 0;
  for (int degree = 0; col < df; ++degree) {
    for (int py = 0; py <= degree && col < df; ++py) {
      const int px = degree - py;
      S.col(col++) = z.col(0).array().pow(px) * z.col(1).array().pow(py);
    }
  }
  return S;
}

MatrixXd temporal_trend_basis(int T, int df) {
  require(df >= 1, ErrorCode::InvalidConfig, "temporal df must be >= 1");
  MatrixXd B(T, df);
  B.col(0).setOnes();
  if (df > 1) {
    VectorXd t = VectorXd::LinSpaced(T, 0.0, static_cast<double>(T - 1));
    B.rightCols(df - 1) = natural_cubic_basis(t, df - 1);
  }
  return B;
}

TrendFit fit_tensor_trend(const MatrixXd& X, const MatrixXd& spatial_basis,
                          const MatrixXd& temporal_basis) {
  require(spatial_basis.rows() == X.rows() && temporal_basis.rows() == X.cols(),
          ErrorCode::DimensionMismatch, "trend basis dimensions do not match X");
  TrendFit fit;
  fit.spatial_df = static_cast<int>(spatial_basis.cols());
  fit.temporal_df = static_cast<int>(temporal_basis.cols());
  fit.spatial_basis = spatial_basis;
  fit.temporal_basis = temporal_basis;
  const MatrixXd qs = column_space(spatial_basis, fit.dropped_columns);
  const MatrixXd qt = column_space(temporal_basis, fit.dropped_columns);
  if (fit.dropped_columns > 0)
    std::cerr << "warning: trend basis rank deficient, dropped " << fit.dropped_columns
              << " pivoted-out column(s)\n";
  fit.fitted = qs * ((qs.transpose() * X) * qt) * qt.transpose();
  fit.residual = X - fit.fitted;
  return fit;
}

TrendFit fit_space_time_trend(const MatrixXd& X, const MatrixXd& coords, int spatial_df,
                              int temporal_df) {
  require(coords.rows() == X.rows(), ErrorCode::DimensionMismatch,
          "coordinates must have one row per unit");
  if (spatial_df > X.rows() || temporal_df > X.cols())
    fail(ErrorCode::RankDeficientBasis, "basis dimension exceeds the number of units or times");
  return fit_tensor_trend(X, spatial_polynomial_basis(coords, spatial_df),
                          temporal_trend_basis(static_cast<int>(X.cols()), temporal_df));
}

}  // namespace sdglmc

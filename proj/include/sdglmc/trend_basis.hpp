#pragma once

#include <vector>

#include "sdglmc/types.hpp"

namespace sdglmc {

/// Natural cubic spline in the truncated-power form: linear beyond the
/// boundary knots, `knots.size() - 1` columns, no intercept column.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;
  /// knots must be strictly increasing, at least 2 of them.
  explicit NaturalCubicSpline(std::vector<double> knots);

  /// df columns, df - 1 interior knots at equispaced quantiles of the
  /// distinct values of x, boundary knots at min(x) and max(x).
  static NaturalCubicSpline from_data(const VectorXd& x, int df);

  int df() const { return static_cast<int>(knots_.size()) - 1; }
  const std::vector<double>& knots() const { return knots_; }

  Eigen::RowVectorXd eval(double x) const;
  Eigen::RowVectorXd second_derivative(double x) const;
  MatrixXd design(const VectorXd& x) const;

 private:
  double scaled(double x) const { return (x - lo_) / (hi_ - lo_); }

  std::vector<double> knots_;  // original scale
  std::vector<double> u_;      // knots mapped to [0,1]
  double lo_ = 0.0, hi_ = 1.0;
};

/// Design of a natural cubic spline with `df` columns (see NaturalCubicSpline).
/// Throws InsufficientDistinctValues when x has fewer than df + 1 distinct values.
MatrixXd natural_cubic_basis(const VectorXd& x, int df);

/// Columns cos(2 pi t / period), sin(2 pi t / period).
MatrixXd seasonal_harmonics(const VectorXd& t, double period);

/// Graded monomials 1, u, v, u^2, uv, v^2, u^3, ... in standardized
/// coordinates, truncated to `df` columns.
MatrixXd spatial_polynomial_basis(const MatrixXd& coords, int df);

/// Temporal trend basis: intercept plus a natural spline with df - 1 columns.
MatrixXd temporal_trend_basis(int T, int df);

struct TrendFit {
  MatrixXd fitted;    // n x T large-scale trend
  MatrixXd residual;  // X - fitted
  int spatial_df = 0;
  int temporal_df = 0;
  MatrixXd spatial_basis;   // n x spatial_df
  MatrixXd temporal_basis;  // T x temporal_df
  int dropped_columns = 0;  // pivoted out as collinear
};

/// Least-squares fit of X (n x T, columns are time) on the tensor product of
/// the spatial and temporal bases. The tensor-product projection factorizes,
/// so the fit is P_s X P_t with each projector from a pivoted QR.
TrendFit fit_space_time_trend(const MatrixXd& X, const MatrixXd& coords, int spatial_df,
                              int temporal_df);

/// Same fit with caller-supplied bases.
TrendFit fit_tensor_trend(const MatrixXd& X, const MatrixXd& spatial_basis,
                          const MatrixXd& temporal_basis);

}  // namespace sdglmc

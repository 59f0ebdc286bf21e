#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "sdglmc/spatial_graph.hpp"
#include "sdglmc/trend_basis.hpp"

namespace sdglmc {

/// Space-time panel. Matrices are n x T: column t holds every unit at time t,
/// so vec() of any of them is the time-major stacking of the sampler.
struct PanelData {
  MatrixXd Y;                    // counts
  MatrixXd offset;               // log expected counts
  MatrixXd X;                    // exposure
  std::vector<MatrixXd> M;       // measured confounders, one n x T matrix each
  SpatialGraph graph;
  std::optional<MatrixXd> coords;  // n x 2 centroids, if known

  Index n() const { return Y.rows(); }
  Index T() const { return Y.cols(); }
  Index p() const { return static_cast<Index>(M.size()); }

  /// Throws DimensionMismatch / InvalidConfig on inconsistent or invalid data.
  void validate() const;

  /// Supplied centroids, or a spectral embedding of the graph.
  MatrixXd coordinates() const;
};

/// Time window [begin, begin + count) of a panel, e.g. one year for
/// year-specific refits. Coordinates and graph are shared.
PanelData slice_time(const PanelData& data, Index begin, Index count);

/// Long-format CSV with header `unit,time,y,offset,x,m1..mp`. Units and times
/// are 0-based; every (unit, time) pair must appear exactly once.
PanelData read_panel_csv(const std::string& path, const SpatialGraph& graph);
void write_panel_csv(const std::string& path, const PanelData& data);

/// Coordinates CSV `unit,x,y`.
MatrixXd read_coords_csv(const std::string& path, Index n);
void write_coords_csv(const std::string& path, const MatrixXd& coords);

/// beta_kit = baseline + spatial_i + temporal_t + interaction_it.
struct CoefficientField {
  double baseline = 0.0;
  VectorXd spatial;      // n
  VectorXd temporal;     // T
  MatrixXd interaction;  // n x T, zero for the exposure slope

  static CoefficientField zeros(Index n, Index T);
};

MatrixXd compose_coefficients(const CoefficientField& f);

/// Sum-to-zero centering: interaction slice and area means move into the
/// temporal and spatial parts, whose means then move into the baseline.
/// compose_coefficients() is unchanged up to rounding.
void center(CoefficientField& f);

enum class InteractionType { T1, T2, T3, T4, T5 };

const char* to_string(InteractionType t);
InteractionType parse_interaction(const std::string& s);

struct IgParams {
  double shape = 1.0;
  double rate = 1.0;
  bool operator==(const IgParams&) const = default;
};

struct PriorConfig {
  double V_delta0 = 4.0;
  double V_delta1 = 4e-6;
  double V_delta_star = 10.0;
  IgParams w0{0.01, 0.01};
  IgParams d0{0.01, 0.01};
  IgParams star{0.01, 0.01};  // shared by every per-area variance under T5
  IgParams w1{10.0, 0.001};
  IgParams d1{1.0, 0.01};
  IgParams tau{1.0, 2.1e-5};
  double slab_var = 1e6;

  void validate() const;
};

/// Variance parameters entering the prior precisions and the noise level.
struct VarianceState {
  double sigma2_w0 = 1.0;
  double sigma2_d0 = 1.0;
  VectorXd sigma2_star;  // size 1, or n under T5
  double sigma2_w1 = 1.0;
  double sigma2_d1 = 1.0;
  double tau2 = 1.0;

  double star(Index i) const { return sigma2_star.size() == 1 ? sigma2_star[0] : sigma2_star[i]; }
};

/// theta = o + beta0 + beta1 * regressor + M alpha + u. The exposure slope
/// must have no interaction part.
MatrixXd linear_predictor(const PanelData& data, const CoefficientField& beta0,
                          const CoefficientField& beta1, const VectorXd& alpha,
                          const MatrixXd& regressor, const MatrixXd& u);
MatrixXd linear_predictor(const PanelData& data, const CoefficientField& beta0,
                          const CoefficientField& beta1, const VectorXd& alpha,
                          const TrendFit& trend, const MatrixXd& u);

/// 100 (exp(delta_exposure * beta) - 1).
double percent_change(double beta, double delta_exposure = 10.0);

/// Explicit stacked design/precision matrices of the four coefficient blocks:
/// gamma1 = interaction (nT), gamma2 = interleaved temporal (2T),
/// gamma3 = spatial (2n), gamma4 = (baseline0, baseline1, alpha).
struct StackedBlock {
  bool present = false;
  SparseMatrix G;
  SparseMatrix H;
  SparseMatrix S_inv;
  SparseMatrix K;  // H' S_inv H
};

struct StackedSystem {
  std::array<StackedBlock, 4> blocks;
  const StackedBlock& block(int j) const { return blocks.at(static_cast<size_t>(j - 1)); }
};

/// Built from the regressor (X - Xhat, or X), confounders, the graph, the
/// interaction type and current variances. Intended for inspection and
/// verification; the sampler assembles the same precisions in banded form.
StackedSystem build_stacked_system(const MatrixXd& regressor, const std::vector<MatrixXd>& M,
                                   const SpatialGraph& graph, InteractionType interaction,
                                   const PriorConfig& priors, const VarianceState& v);

}  // namespace sdglmc

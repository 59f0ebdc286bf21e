#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sdglmc/model_core.hpp"
#include "sdglmc/sampler.hpp"
#include "sdglmc/types.hpp"

namespace sdglmc {

enum class CompetitorKind { Null, GLMadj, Dummy, Periodic, JDZ, GLMint, GLMintSmooth };

const char* to_string(CompetitorKind k);
CompetitorKind parse_competitor(const std::string& s);

/// Day-of-year boundaries of four calendar seasons. Time index t falls on
/// day (start_day + t) mod 365; season j (0 = winter, 1 = spring, 2 = summer,
/// 3 = autumn) starts at starts[j].
struct SeasonCalendar {
  int start_day = 0;  // day of year of t = 0, 0-based (0 = 1 January)
  std::array<int, 4> starts{354, 79, 171, 265};

  int season(Index t) const;
};

struct CompetitorOptions {
  CompetitorKind kind = CompetitorKind::Null;
  int df_time = 6;          // natural spline of time in the nuisance block
  double period = 365.0;    // Periodic
  int smooth_df = 15;       // GLMintSmooth principal spline, per dimension
  std::optional<SeasonCalendar> calendar;  // required by Dummy
};

/// theta_it = o_it + A_it' a_i + C_it' c_i + eps_it. Each exposure column is
/// A_k = R * L_k with R the exposure regressor (X, or X - Xhat for JDZ), so
/// the exposure slope of area i at time t is sum_k a_ik L_k,it.
struct CompetitorSpec {
  CompetitorKind kind = CompetitorKind::Null;
  std::vector<MatrixXd> A, C;        // n x T each
  std::vector<MatrixXd> loadings;    // n x T each, one per A column
  std::vector<std::string> a_names, c_names;

  Index pa() const { return static_cast<Index>(A.size()); }
  Index pc() const { return static_cast<Index>(C.size()); }
  /// Area-average loadings, T x pa.
  MatrixXd mean_loadings() const;
};

/// Overall temporal exposure trend used by JDZ: area-averaged exposure
/// regressed on an intercept and a natural spline of time with df - 1 columns.
TrendFit overall_temporal_trend(const PanelData& data, int df);

/// Errors: MissingTrend (JDZ without a trend), MissingCalendar (Dummy).
CompetitorSpec build_design(const PanelData& data, const CompetitorOptions& opt,
                            const TrendFit* trend = nullptr);

struct HierarchicalDraws {
  CompetitorKind kind = CompetitorKind::Null;
  std::vector<std::string> a_names;
  int iterations = 0, burn_in = 0, thin = 1;
  std::uint64_t seed = 0;
  double seconds = 0.0;

  MatrixXd mu_a;      // draws x pa
  MatrixXd sigma_a;   // draws x pa^2, column-major
  VectorXd tau2;
  VectorXd deviance;

  MatrixXd a_mean;    // n x pa
  MatrixXd c_mean;    // n x pc
  MatrixXd latent_mean, mu_mean, pvalues;
  int pvalue_draws = 0;
  MatrixXd acceptance;

  // posterior means of percent changes of the exposure-effect components
  MatrixXd percent_overall_mean;   // n x T, area- and time-specific slope
  double percent_global_mean = 0;  // time average of the pooled path
  VectorXd percent_temporal_mean;  // pooled path minus its time average
  VectorXd percent_spatial_mean;   // area slope minus pooled path, time-averaged

  Index draws() const { return mu_a.rows(); }
  MatrixXd sigma_draw(Index r) const;
};

struct HierarchicalPriors {
  double mu_var = 1e6;       // mu_a ~ N(0, mu_var I)
  double c_var = 1e6;        // c_i ~ N(0, c_var I)
  double iw_extra_df = 1.1;  // Sigma_a ~ IW(pa + iw_extra_df, iw_scale I)
  double iw_scale = 1e-4;
  IgParams tau{1.0, 2.1e-5};
};

/// Gibbs sampler: (a_i, c_i) jointly per area, mu_a, Sigma_a (inverse
/// Wishart), latent theta by the shared Metropolis kernel, tau2.
HierarchicalDraws fit_hierarchical(const CompetitorSpec& spec, const PanelData& data,
                                   const FitOptions& opt, int chain = 0,
                                   const HierarchicalPriors& priors = {});

struct EffectPath {
  VectorXd mean, lower, upper;                     // beta scale
  VectorXd percent_mean, percent_lower, percent_upper;
};

/// Pooled time-t exposure effect sum_k mu_a,k * mean_i L_k,it, with 95%
/// equal-tailed intervals.
EffectPath pooled_effect_path(const HierarchicalDraws& draws, const CompetitorSpec& spec);

}  // namespace sdglmc

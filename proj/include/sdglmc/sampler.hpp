#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdglmc/latent.hpp"
#include "sdglmc/model_core.hpp"
#include "sdglmc/random.hpp"
#include "sdglmc/types.hpp"

namespace sdglmc {

enum class Variant { Full, SingleStep, NoConfounders };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

struct FitOptions {
  Variant variant = Variant::Full;
  InteractionType interaction = InteractionType::T5;
  int iterations = 2000;  // total, burn-in included
  int burn_in = 1000;
  int thin = 1;
  int n_chains = 1;
  std::uint64_t seed = 1;
  int spatial_df = 3;
  int temporal_df = 10;
  double target_acceptance = 0.44;
  int adapt_batch = 50;
  int max_pvalue_draws = 2000;
  bool keep_latent_draws = false;

  void validate() const;
};

/// Coefficients are stored in the four blocks of the sampler:
///   gamma1 interaction (time-major, n*T), gamma2 (delta0_t, delta1_t) interleaved,
///   gamma3 (spatial0, spatial1), gamma4 (baseline0, baseline1, alpha).
struct McmcState {
  VectorXd gamma1, gamma2, gamma3, gamma4;
  VarianceState var;
  MatrixXd latent;  // theta, offset included

  CoefficientField beta0(Index n, Index T) const;
  CoefficientField beta1(Index n, Index T) const;
  VectorXd alpha() const { return gamma4.tail(gamma4.size() - 2); }
};

/// Posterior output of one chain. Scalar and low-dimensional chains are kept
/// draw by draw; cell-level quantities are kept as running means.
struct PosteriorDraws {
  Variant variant = Variant::Full;
  InteractionType interaction = InteractionType::T5;
  int iterations = 0, burn_in = 0, thin = 1;
  std::uint64_t seed = 0;
  double seconds = 0.0;

  std::vector<std::string> scalar_names;
  MatrixXd scalars;                 // draws x names
  MatrixXd temporal0, temporal1;    // draws x T
  MatrixXd spatial0, spatial1;      // draws x n
  MatrixXd star_variances;          // draws x n (T5 only)
  VectorXd deviance;                // per draw

  MatrixXd latent_mean;             // n x T
  MatrixXd mu_mean;                 // n x T, E[exp(theta)]
  MatrixXd interaction_mean;        // n x T, empty under T1
  MatrixXd beta1_mean;              // n x T
  MatrixXd percent_overall_mean;    // n x T, posterior mean of P(beta1_it)
  VectorXd percent_temporal_mean;   // T, P(delta1_t)
  VectorXd percent_spatial_mean;    // n, P(spatial1_i)
  double percent_baseline_mean = 0.0;

  MatrixXd pvalues;                 // n x T, Pr(Yrep > Y) + Pr(Yrep = Y) / 2
  int pvalue_draws = 0;

  MatrixXd acceptance;              // per cell, after burn-in
  MatrixXd proposal_multiplier;     // frozen after burn-in
  std::vector<MatrixXd> latent_draws;

  Index draws() const { return scalars.rows(); }
  VectorXd scalar(const std::string& name) const;
  double mean_acceptance() const { return acceptance.size() ? acceptance.mean() : 0.0; }
};

class SdglmcSampler {
 public:
  /// `regressor` is X - Xhat (or X for the single-step variant). Confounders
  /// in `data.M` enter gamma4 unless `use_confounders` is false.
  SdglmcSampler(const PanelData& data, MatrixXd regressor, PriorConfig priors,
                InteractionType interaction, bool use_confounders = true);

  Index n() const { return n_; }
  Index T() const { return T_; }
  Index p() const { return p_; }
  InteractionType interaction() const { return interaction_; }
  const MatrixXd& regressor() const { return x_; }
  const PriorConfig& priors() const { return priors_; }

  McmcState initial_state() const;

  /// theta* = sum_j G_j gamma_j (no offset, no noise), n x T.
  MatrixXd structured_predictor(const McmcState& s) const;
  MatrixXd block_contribution(int j, const McmcState& s) const;

  /// Full conditional of gamma_j in canonical form: precision and G_j' eta_j / tau2.
  SparseMatrix gamma_precision(int j, const McmcState& s) const;
  VectorXd gamma_rhs(int j, const McmcState& s) const;
  void sample_gamma(int j, McmcState& s, Rng& rng) const;

  void center_effects(McmcState& s) const;

  IgParams temporal_variance_posterior(int k, const McmcState& s) const;
  IgParams spatial_variance_posterior(int k, const McmcState& s) const;
  /// One entry, or n entries under T5.
  std::vector<IgParams> interaction_variance_posterior(const McmcState& s) const;
  IgParams tau_posterior(const McmcState& s) const;
  void sample_variances(McmcState& s, Rng& rng) const;
  void sample_tau(McmcState& s, Rng& rng) const;

  void sample_latent(McmcState& s, LatentKernel& kernel, Rng& rng) const;

  /// gamma4, gamma3, gamma2, gamma1, centering, variances, theta, tau2.
  void sweep(McmcState& s, LatentKernel& kernel, Rng& rng) const;

  LatentKernel make_kernel(const FitOptions& opt) const;

 private:
  MatrixXd eta_without(int j, const McmcState& s) const;

  const PanelData& data_;
  MatrixXd x_;
  PriorConfig priors_;
  InteractionType interaction_;
  Index n_, T_, p_;
  SparseMatrix Q_;
  MatrixXd Q_dense_;
  std::vector<MatrixXd> M_;
  MatrixXd G4tG4_;
  MatrixXd curvature_;
};

/// Regressor used by a variant: X - Xhat from the trend fit, or raw X.
MatrixXd variant_regressor(const PanelData& data, const FitOptions& opt,
                           const TrendFit* trend = nullptr);

/// Single chain. `chain` selects the seed stream and the starting point;
/// chains after the first start from a dispersed state.
PosteriorDraws run_chain(const PanelData& data, const MatrixXd& regressor,
                         const PriorConfig& priors, const FitOptions& opt, int chain = 0);

struct FitResult {
  std::optional<TrendFit> trend;
  std::vector<PosteriorDraws> chains;
};

/// Trend fit (unless single-step) followed by `opt.n_chains` chains on
/// worker threads.
FitResult fit_sdglmc(const PanelData& data, const PriorConfig& priors, const FitOptions& opt);

}  // namespace sdglmc

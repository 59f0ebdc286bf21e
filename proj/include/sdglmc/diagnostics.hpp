#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sdglmc/competitors.hpp"
#include "sdglmc/random.hpp"
#include "sdglmc/sampler.hpp"
#include "sdglmc/simulator.hpp"
#include "sdglmc/types.hpp"

namespace sdglmc {

struct DicResult {
  double dic = 0.0;
  double d_bar = 0.0;
  double p_d = 0.0;
};

/// DIC = 2 Dbar - D(mu_bar), p_D = Dbar - D(mu_bar).
DicResult dic(const VectorXd& deviance, double deviance_at_mean);
DicResult dic(const PosteriorDraws& d, const PanelData& data);
DicResult dic(const std::vector<PosteriorDraws>& chains, const PanelData& data);
DicResult dic(const HierarchicalDraws& d, const PanelData& data);

struct PValueSummary {
  MatrixXd p;  // n x T
  double mean = 0.0;
};

/// Pr(Yrep > Y) + Pr(Yrep = Y) / 2 from given replicate count matrices.
PValueSummary bayes_pvalues(const MatrixXd& Y, const std::vector<MatrixXd>& yrep);
/// Same with Yrep ~ Poisson(mu) drawn for at most `max_draws` of the supplied
/// posterior mean surfaces (evenly spaced).
PValueSummary bayes_pvalues(const MatrixXd& Y, const std::vector<MatrixXd>& mu_draws, Rng& rng,
                            int max_draws = 2000);
/// Chain-pooled summary of the p-values accumulated during sampling.
PValueSummary bayes_pvalues(const std::vector<PosteriorDraws>& chains);

/// Potential scale reduction sqrt(Vhat / W), Vhat = (L - 1) / L W + B / L, for
/// m >= 2 equal-length chains of length L. Throws TooFewChains.
double gelman_rubin(const std::vector<VectorXd>& chains);

struct RhatRow {
  std::string name;
  double rhat = 0.0;
};

/// One row per scalar chain (baselines, alpha, variances) plus the maximum
/// over the temporal and spatial effect paths.
std::vector<RhatRow> gelman_rubin_table(const std::vector<PosteriorDraws>& chains);

struct ComponentMetrics {
  double mse_avg = 0.0;
  double mab = 0.0;
  double mae_avg = 0.0;
};

struct MetricReport {
  ComponentMetrics overall, baseline, temporal, spatial;
  int replicates = 0;
};

/// Cell-wise indices over replicates j:
///   MSE_avg = mean_cells mean_j (E_j - P)^2
///   MAB     = max_cells  mean_j |E_j - P|
///   MAE_avg = mean_cells mean_j |E_j - P|
/// `truth` holds one matrix per replicate, or a single shared matrix.
ComponentMetrics index_metrics(const std::vector<MatrixXd>& estimates,
                               const std::vector<MatrixXd>& truth);

MetricReport study_metrics(const std::vector<EffectComponents>& estimates,
                           const std::vector<EffectComponents>& truth);
MetricReport study_metrics(const std::vector<EffectComponents>& estimates,
                           const EffectComponents& truth);

/// CSV `model,component,mse_avg,mab,mae_avg,replicates`.
void write_metric_csv(const std::string& path, const std::vector<std::string>& models,
                      const std::vector<MetricReport>& reports);
void print_metric_table(std::ostream& os, const std::vector<std::string>& models,
                        const std::vector<MetricReport>& reports);

}  // namespace sdglmc

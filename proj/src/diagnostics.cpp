#include "sdglmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "sdglmc/error.hpp"
#include "sdglmc/latent.hpp"

namespace sdglmc {

DicResult dic(const VectorXd& deviance, double deviance_at_mean) {
  require(deviance.size() > 0, ErrorCode::InvalidConfig, "DIC needs at least one draw");
  DicResult r;
  r.d_bar = deviance.mean();
  r.p_d = r.d_bar - deviance_at_mean;
  r.dic = r.d_bar + r.p_d;
  return r;
}

DicResult dic(const PosteriorDraws& d, const PanelData& data) {
  return dic(d.deviance, poisson_deviance(data.Y, d.mu_mean));
}

DicResult dic(const std::vector<PosteriorDraws>& chains, const PanelData& data) {
  require(!chains.empty(), ErrorCode::InvalidConfig, "DIC needs at least one chain");
  Index total = 0;
  for (const auto& c : chains) total += c.deviance.size();
  VectorXd dev(total);
  MatrixXd mu = MatrixXd::Zero(data.n(), data.T());
  Index k = 0;
  for (const auto& c : chains) {
    dev.segment(k, c.deviance.size()) = c.deviance;
    k += c.deviance.size();
    mu += static_cast<double>(c.deviance.size()) * c.mu_mean;
  }
  return dic(dev, poisson_deviance(data.Y, mu / static_cast<double>(std::max<Index>(total, 1))));
}

DicResult dic(const HierarchicalDraws& d, const PanelData& data) {
  return dic(d.deviance, poisson_deviance(data.Y, d.mu_mean));
}

PValueSummary bayes_pvalues(const MatrixXd& Y, const std::vector<MatrixXd>& yrep) {
  require(!yrep.empty(), ErrorCode::InvalidConfig, "no replicate draws");
  PValueSummary s;
  s.p = MatrixXd::Zero(Y.rows(), Y.cols());
  for (const auto& r : yrep) {
    require(r.rows() == Y.rows() && r.cols() == Y.cols(), ErrorCode::DimensionMismatch,
            "replicate shape differs from Y");
    s.p.array() += (r.array() > Y.array()).cast<double>() + 0.5 * (r.array() == Y.array()).cast<double>();
  }
  s.p /= static_cast<double>(yrep.size());
  s.mean = s.p.mean();
  return s;
}

PValueSummary bayes_pvalues(const MatrixXd& Y, const std::vector<MatrixXd>& mu_draws, Rng& rng,
                            int max_draws) {
  require(!mu_draws.empty() && max_draws >= 1, ErrorCode::InvalidConfig, "no posterior draws");
  const auto R = mu_draws.size();
  const size_t every = std::max<size_t>(1, (R + static_cast<size_t>(max_draws) - 1) / static_cast<size_t>(max_draws));
  PValueSummary s;
  s.p = MatrixXd::Zero(Y.rows(), Y.cols());
  int used = 0;
  for (size_t r = 0; r < R; r += every, ++used) accumulate_pvalues(s.p, Y, mu_draws[r], rng);
  s.p /= static_cast<double>(used);
  s.mean = s.p.mean();
  return s;
}

PValueSummary bayes_pvalues(const std::vector<PosteriorDraws>& chains) {
  require(!chains.empty(), ErrorCode::InvalidConfig, "no chains");
  PValueSummary s;
  double w = 0.0;
  for (const auto& c : chains) {
    if (c.pvalue_draws == 0) continue;
    if (s.p.size() == 0) s.p = MatrixXd::Zero(c.pvalues.rows(), c.pvalues.cols());
    s.p += c.pvalue_draws * c.pvalues;
    w += c.pvalue_draws;
  }
  if (w > 0) {
    s.p /= w;
    s.mean = s.p.mean();
  }
  return s;
}

double gelman_rubin(const std::vector<VectorXd>& chains) {
  require(chains.size() >= 2, ErrorCode::TooFewChains, "R-hat needs at least two chains");
  const Index L = chains[0].size();
  for (const auto& c : chains)
    require(c.size() == L, ErrorCode::DimensionMismatch, "chains must have equal length");
  require(L >= 2, ErrorCode::InvalidConfig, "chains need at least two draws");
  const auto m = static_cast<double>(chains.size());
  const auto len = static_cast<double>(L);
  VectorXd means(chains.size());
  double W = 0.0;
  for (size_t k = 0; k < chains.size(); ++k) {
    means[static_cast<Index>(k)] = chains[k].mean();
    W += (chains[k].array() - means[static_cast<Index>(k)]).square().sum() / (len - 1.0);
  }
  W /= m;
  const double B_over_L = (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (W <= 0.0) return B_over_L > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double V = (len - 1.0) / len * W + B_over_L;
  return std::sqrt(V / W);
}

std::vector<RhatRow> gelman_rubin_table(const std::vector<PosteriorDraws>& chains) {
  require(chains.size() >= 2, ErrorCode::TooFewChains, "R-hat needs at least two chains");
  Index L = chains[0].draws();
  for (const auto& c : chains) L = std::min(L, c.draws());
  std::vector<RhatRow> rows;
  const auto column = [&](const MatrixXd PosteriorDraws::*field, Index col) {
    std::vector<VectorXd> seqs;
    for (const auto& c : chains) seqs.push_back((c.*field).col(col).head(L));
    return gelman_rubin(seqs);
  };
  for (size_t k = 0; k < chains[0].scalar_names.size(); ++k)
    rows.push_back({chains[0].scalar_names[k], column(&PosteriorDraws::scalars, static_cast<Index>(k))});
  const auto max_over = [&](const char* name, const MatrixXd PosteriorDraws::*field) {
    const Index cols = (chains[0].*field).cols();
    if (cols == 0) return;
    double worst = 0.0;
    for (Index j = 0; j < cols; ++j) worst = std::max(worst, column(field, j));
    rows.push_back({name, worst});
  };
  max_over("max_temporal0", &PosteriorDraws::temporal0);
  max_over("max_temporal1", &PosteriorDraws::temporal1);
  max_over("max_spatial0", &PosteriorDraws::spatial0);
  max_over("max_spatial1", &PosteriorDraws::spatial1);
  return rows;
}

ComponentMetrics index_metrics(const std::vector<MatrixXd>& estimates,
                               const std::vector<MatrixXd>& truth) {
  require(!estimates.empty(), ErrorCode::DimensionMismatch, "no replicate estimates");
  require(truth.size() == 1 || truth.size() == estimates.size(), ErrorCode::DimensionMismatch,
          "truth must be shared or given per replicate");
  const Index rows = estimates[0].rows(), cols = estimates[0].cols();
  MatrixXd sq = MatrixXd::Zero(rows, cols), ab = MatrixXd::Zero(rows, cols);
  for (size_t j = 0; j < estimates.size(); ++j) {
    const MatrixXd& P = truth.size() == 1 ? truth[0] : truth[j];
    require(estimates[j].rows() == rows && estimates[j].cols() == cols && P.rows() == rows &&
                P.cols() == cols,
            ErrorCode::DimensionMismatch, "estimate and truth shapes differ");
    const MatrixXd d = estimates[j] - P;
    sq += d.cwiseAbs2();
    ab += d.cwiseAbs();
  }
  const double R = static_cast<double>(estimates.size());
  sq /= R;
  ab /= R;
  ComponentMetrics m;
  if (sq.size() == 0) return m;
  m.mse_avg = sq.mean();
  m.mab = ab.maxCoeff();
  m.mae_avg = ab.mean();
  return m;
}

namespace {

template <class Get>
ComponentMetrics component(const std::vector<EffectComponents>& est,
                           const std::vector<EffectComponents>& truth, Get get) {
  std::vector<MatrixXd> e, t;
  for (const auto& x : est) e.push_back(get(x));
  for (const auto& x : truth) t.push_back(get(x));
  return index_metrics(e, t);
}

}  // namespace

MetricReport study_metrics(const std::vector<EffectComponents>& estimates,
                           const std::vector<EffectComponents>& truth) {
  MetricReport r;
  r.replicates = static_cast<int>(estimates.size());
  r.overall = component(estimates, truth, [](const EffectComponents& c) { return c.overall; });
  r.baseline = component(estimates, truth,
                         [](const EffectComponents& c) { return MatrixXd::Constant(1, 1, c.baseline); });
  r.temporal = component(estimates, truth, [](const EffectComponents& c) { return MatrixXd(c.temporal); });
  r.spatial = component(estimates, truth, [](const EffectComponents& c) { return MatrixXd(c.spatial); });
  return r;
}

MetricReport study_metrics(const std::vector<EffectComponents>& estimates,
                           const EffectComponents& truth) {
  return study_metrics(estimates, std::vector<EffectComponents>{truth});
}

namespace {

const std::pair<const char*, const ComponentMetrics MetricReport::*> kComponents[] = {
    {"overall", &MetricReport::overall},
    {"baseline", &MetricReport::baseline},
    {"temporal", &MetricReport::temporal},
    {"spatial", &MetricReport::spatial},
};

}  // namespace

void write_metric_csv(const std::string& path, const std::vector<std::string>& models,
                      const std::vector<MetricReport>& reports) {
  require(models.size() == reports.size(), ErrorCode::DimensionMismatch, "one report per model");
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << "model,component,mse_avg,mab,mae_avg,replicates\n" << std::setprecision(10);
  for (size_t k = 0; k < models.size(); ++k)
    for (const auto& [name, field] : kComponents) {
      const ComponentMetrics& m = reports[k].*field;
      out << models[k] << ',' << name << ',' << m.mse_avg << ',' << m.mab << ',' << m.mae_avg << ','
          << reports[k].replicates << '\n';
    }
}

void print_metric_table(std::ostream& os, const std::vector<std::string>& models,
                        const std::vector<MetricReport>& reports) {
  os << std::left << std::setw(14) << "model" << std::setw(10) << "component" << std::right
     << std::setw(12) << "MSE_avg" << std::setw(12) << "MAB" << std::setw(12) << "MAE_avg" << '\n';
  os << std::fixed << std::setprecision(4);
  for (size_t k = 0; k < models.size(); ++k)
    for (const auto& [name, field] : kComponents) {
      const ComponentMetrics& m = reports[k].*field;
      os << std::left << std::setw(14) << models[k] << std::setw(10) << name << std::right
         << std::setw(12) << m.mse_avg << std::setw(12) << m.mab << std::setw(12) << m.mae_avg << '\n';
    }
  os.unsetf(std::ios::floatfield);
}

}  // namespace sdglmc

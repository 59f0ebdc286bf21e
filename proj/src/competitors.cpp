#include "sdglmc/competitors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

#include "sdglmc/error.hpp"
#include "sdglmc/latent.hpp"
#include "sdglmc/trend_basis.hpp"

namespace sdglmc {

const char* to_string(CompetitorKind k) {
  switch (k) {
    case CompetitorKind::Null: return "Null";
    case CompetitorKind::GLMadj: return "GLMadj";
    case CompetitorKind::Dummy: return "Dummy";
    case CompetitorKind::Periodic: return "Periodic";
    case CompetitorKind::JDZ: return "JDZ";
    case CompetitorKind::GLMint: return "GLMint";
    case CompetitorKind::GLMintSmooth: return "GLMintSmooth";
  }
  return "?";
}

CompetitorKind parse_competitor(const std::string& s) {
  for (auto k : {CompetitorKind::Null, CompetitorKind::GLMadj, CompetitorKind::Dummy,
                 CompetitorKind::Periodic, CompetitorKind::JDZ, CompetitorKind::GLMint,
                 CompetitorKind::GLMintSmooth})
    if (s == to_string(k)) return k;
  fail(ErrorCode::InvalidConfig, "unknown competitor '" + s + "'");
}

int SeasonCalendar::season(Index t) const {
  const int d = static_cast<int>((static_cast<Index>(start_day) + t) % 365);
  int best = 0, best_gap = 366;
  for (int j = 0; j < 4; ++j) {
    const int gap = ((d - starts[static_cast<size_t>(j)]) % 365 + 365) % 365;
    if (gap < best_gap) {
      best_gap = gap;
      best = j;
    }
  }
  return best;
}

MatrixXd CompetitorSpec::mean_loadings() const {
  const Index T = loadings.empty() ? 0 : loadings[0].cols();
  MatrixXd out(T, pa());
  for (Index k = 0; k < pa(); ++k) out.col(k) = loadings[static_cast<size_t>(k)].colwise().mean().transpose();
  return out;
}

TrendFit overall_temporal_trend(const PanelData& data, int df) {
  const Index n = data.n();
  return fit_tensor_trend(data.X, MatrixXd::Ones(n, 1), temporal_trend_basis(static_cast<int>(data.T()), df));
}

CompetitorSpec build_design(const PanelData& data, const CompetitorOptions& opt,
                            const TrendFit* trend) {
  data.validate();
  const Index n = data.n(), T = data.T();
  CompetitorSpec s;
  s.kind = opt.kind;
  const MatrixXd ones = MatrixXd::Ones(n, T);

  const auto add_a = [&](const MatrixXd& regressor, const MatrixXd& load, std::string name) {
    s.A.push_back(regressor.cwiseProduct(load));
    s.loadings.push_back(load);
    s.a_names.push_back(std::move(name));
  };
  const auto add_c = [&](MatrixXd col, std::string name) {
    s.C.push_back(std::move(col));
    s.c_names.push_back(std::move(name));
  };
  const auto add_time_spline = [&](int df) {
    if (df < 1) return;
    const MatrixXd B = natural_cubic_basis(VectorXd::LinSpaced(T, 0.0, static_cast<double>(T - 1)), df);
    for (Index k = 0; k < B.cols(); ++k)
      add_c(MatrixXd(ones.array().rowwise() * B.col(k).transpose().array()), "ns" + std::to_string(k + 1));
  };

  add_c(ones, "intercept");
  if (opt.kind == CompetitorKind::JDZ) {
    require(trend != nullptr, ErrorCode::MissingTrend, "JDZ needs the exposure trend");
    require(trend->fitted.rows() == n && trend->fitted.cols() == T, ErrorCode::DimensionMismatch,
            "trend must be n x T");
    add_c(trend->fitted, "xhat");
  }
  for (Index k = 0; k < data.p(); ++k) add_c(data.M[static_cast<size_t>(k)], "m" + std::to_string(k + 1));

  switch (opt.kind) {
    case CompetitorKind::Null:
      add_a(data.X, ones, "x");
      break;
    case CompetitorKind::GLMadj:
      add_a(data.X, ones, "x");
      add_time_spline(opt.df_time);
      break;
    case CompetitorKind::Dummy: {
      require(opt.calendar.has_value(), ErrorCode::MissingCalendar,
              "the Dummy model needs a season calendar");
      const char* names[4] = {"x_winter", "x_spring", "x_summer", "x_autumn"};
      for (int j = 0; j < 4; ++j) {
        MatrixXd load = MatrixXd::Zero(n, T);
        for (Index t = 0; t < T; ++t)
          if (opt.calendar->season(t) == j) load.col(t).setOnes();
        add_a(data.X, load, names[j]);
      }
      add_time_spline(opt.df_time);
      break;
    }
    case CompetitorKind::Periodic: {
      require(opt.period > 0, ErrorCode::InvalidConfig, "period must be positive");
      const MatrixXd H = seasonal_harmonics(VectorXd::LinSpaced(T, 0.0, static_cast<double>(T - 1)), opt.period);
      add_a(data.X, ones, "x");
      add_a(data.X, MatrixXd(ones.array().rowwise() * H.col(0).transpose().array()), "x_cos");
      add_a(data.X, MatrixXd(ones.array().rowwise() * H.col(1).transpose().array()), "x_sin");
      add_time_spline(opt.df_time);
      break;
    }
    case CompetitorKind::JDZ:
      add_a(data.X - trend->fitted, ones, "x_local");
      add_time_spline(opt.df_time - 1);
      break;
    case CompetitorKind::GLMint:
      add_a(data.X, ones, "x");
      for (Index k = 0; k < data.p(); ++k)
        add_a(data.X, data.M[static_cast<size_t>(k)], "x_m" + std::to_string(k + 1));
      add_time_spline(opt.df_time);
      break;
    case CompetitorKind::GLMintSmooth: {
      add_a(data.X, ones, "x");
      const MatrixXd coords = data.coordinates();
      const int sdf = static_cast<int>(std::min<Index>(opt.smooth_df, n));
      const int tdf = static_cast<int>(std::min<Index>(opt.smooth_df, T));
      for (Index k = 0; k < data.p(); ++k) {
        const TrendFit f = fit_space_time_trend(data.M[static_cast<size_t>(k)], coords, sdf, tdf);
        add_a(data.X, f.fitted, "x_ms" + std::to_string(k + 1));
      }
      add_time_spline(opt.df_time);
      break;
    }
  }
  return s;
}

MatrixXd HierarchicalDraws::sigma_draw(Index r) const {
  const auto p = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(sigma_a.cols()))));
  return Eigen::Map<const MatrixXd>(sigma_a.row(r).eval().data(), p, p);
}

HierarchicalDraws fit_hierarchical(const CompetitorSpec& spec, const PanelData& data,
                                   const FitOptions& opt, int chain,
                                   const HierarchicalPriors& pr) {
  opt.validate();
  data.validate();
  const auto start = std::chrono::steady_clock::now();
  const Index n = data.n(), T = data.T(), pa = spec.pa(), pc = spec.pc(), q = pa + pc;
  require(pa >= 1, ErrorCode::InvalidConfig, "exposure block is empty");
  for (const auto* blk : {&spec.A, &spec.C})
    for (const auto& m : *blk)
      require(m.rows() == n && m.cols() == T, ErrorCode::DimensionMismatch,
              "design columns must be n x T");
  if (pa >= n)
    std::cerr << "warning: IWDegeneracy: " << pa << " exposure coefficients for " << n
              << " areas; Sigma_a is driven by its prior\n";

  std::vector<const MatrixXd*> cols;
  for (const auto& m : spec.A) cols.push_back(&m);
  for (const auto& m : spec.C) cols.push_back(&m);

  // per-area cross products Z_i' Z_i
  std::vector<MatrixXd> ZtZ(static_cast<size_t>(n), MatrixXd::Zero(q, q));
  for (Index i = 0; i < n; ++i)
    for (Index a = 0; a < q; ++a)
      for (Index b = 0; b <= a; ++b)
        ZtZ[static_cast<size_t>(i)](a, b) = ZtZ[static_cast<size_t>(i)](b, a) =
            cols[a]->row(i).dot(cols[b]->row(i));

  Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(chain)));
  Rng rep_rng(derive_seed(opt.seed, 100000 + static_cast<std::uint64_t>(chain)));

  const double nu = static_cast<double>(pa) + pr.iw_extra_df;
  const MatrixXd Psi = MatrixXd::Identity(pa, pa) * pr.iw_scale;
  MatrixXd a = MatrixXd::Zero(n, pa), c = MatrixXd::Zero(n, pc);
  VectorXd mu = VectorXd::Zero(pa);
  MatrixXd Sigma = Psi / std::max(nu - static_cast<double>(pa) - 1.0, 1e-3);
  double tau2 = pr.tau.shape > 1 ? pr.tau.rate / (pr.tau.shape - 1) : pr.tau.rate / pr.tau.shape;
  MatrixXd latent = (data.Y.array() + 0.5).log().matrix();
  if (chain > 0) tau2 *= std::exp(2.0 * std_normal(rng));
  LatentKernel kernel(n, T, opt.target_acceptance, opt.adapt_batch);

  HierarchicalDraws out;
  out.kind = spec.kind;
  out.a_names = spec.a_names;
  out.iterations = opt.iterations;
  out.burn_in = opt.burn_in;
  out.thin = opt.thin;
  out.seed = opt.seed;
  const Index R = (opt.iterations - opt.burn_in + opt.thin - 1) / opt.thin;
  const Index pv_every = std::max<Index>(1, (R + opt.max_pvalue_draws - 1) / opt.max_pvalue_draws);
  out.mu_a.resize(R, pa);
  out.sigma_a.resize(R, pa * pa);
  out.tau2.resize(R);
  out.deviance.resize(R);
  out.a_mean = MatrixXd::Zero(n, pa);
  out.c_mean = MatrixXd::Zero(n, pc);
  out.latent_mean = MatrixXd::Zero(n, T);
  out.mu_mean = MatrixXd::Zero(n, T);
  out.pvalues = MatrixXd::Zero(n, T);
  out.percent_overall_mean = MatrixXd::Zero(n, T);
  out.percent_temporal_mean = VectorXd::Zero(T);
  out.percent_spatial_mean = VectorXd::Zero(n);
  const MatrixXd Lbar = spec.mean_loadings();
  const auto pc_fn = [](double b) { return percent_change(b); };

  const auto linear_part = [&]() {
    MatrixXd m = data.offset;
    for (Index k = 0; k < pa; ++k) m += (spec.A[static_cast<size_t>(k)].array().colwise() * a.col(k).array()).matrix();
    for (Index k = 0; k < pc; ++k) m += (spec.C[static_cast<size_t>(k)].array().colwise() * c.col(k).array()).matrix();
    return m;
  };

  Index r = 0;
  for (int it = 0; it < opt.iterations; ++it) {
    // (a_i, c_i) jointly
    {
      Eigen::LLT<MatrixXd> sig(Sigma);
      if (sig.info() != Eigen::Success) fail(ErrorCode::CholeskyFailure, "Sigma_a not positive definite");
      const MatrixXd Sinv = sig.solve(MatrixXd::Identity(pa, pa));
      const VectorXd prior_rhs = Sinv * mu;
      const MatrixXd eta = latent - data.offset;
      for (Index i = 0; i < n; ++i) {
        MatrixXd P = ZtZ[static_cast<size_t>(i)] / tau2;
        P.topLeftCorner(pa, pa) += Sinv;
        P.bottomRightCorner(pc, pc).diagonal().array() += 1.0 / pr.c_var;
        VectorXd b(q);
        for (Index k = 0; k < q; ++k) b[k] = cols[k]->row(i).dot(eta.row(i)) / tau2;
        b.head(pa) += prior_rhs;
        const VectorXd g = sample_gaussian_precision(P, b, rng);
        a.row(i) = g.head(pa).transpose();
        c.row(i) = g.tail(pc).transpose();
      }
      // mu_a
      MatrixXd Pm = static_cast<double>(n) * Sinv;
      Pm.diagonal().array() += 1.0 / pr.mu_var;
      mu = sample_gaussian_precision(Pm, Sinv * a.colwise().sum().transpose(), rng);
    }
    // Sigma_a
    {
      const MatrixXd dev = a.rowwise() - mu.transpose();
      Sigma = draw_inverse_wishart(nu + static_cast<double>(n), Psi + dev.transpose() * dev, rng);
    }
    // latent and noise
    const MatrixXd centre = linear_part();
    kernel.step(latent, centre, data.Y, tau2, PoissonLogLik{data.Y}, rng);
    tau2 = draw_inverse_gamma(
        {pr.tau.shape + 0.5 * static_cast<double>(n * T), pr.tau.rate + 0.5 * (latent - centre).squaredNorm()},
        rng);

    if (it < opt.burn_in) {
      kernel.adapt();
      if (it == opt.burn_in - 1) kernel.reset_counts();
      continue;
    }
    if ((it - opt.burn_in) % opt.thin != 0) continue;

    out.mu_a.row(r) = mu.transpose();
    out.sigma_a.row(r) = Eigen::Map<const VectorXd>(Sigma.data(), pa * pa).transpose();
    out.tau2[r] = tau2;
    const MatrixXd mu_cell = latent.array().exp().matrix();
    out.deviance[r] = poisson_deviance(data.Y, mu_cell);
    out.a_mean += a;
    out.c_mean += c;
    out.latent_mean += latent;
    out.mu_mean += mu_cell;

    MatrixXd slope = MatrixXd::Zero(n, T);
    for (Index k = 0; k < pa; ++k)
      slope += (spec.loadings[static_cast<size_t>(k)].array().colwise() * a.col(k).array()).matrix();
    const VectorXd pooled = Lbar * mu;
    const double global = T > 0 ? pooled.mean() : 0.0;
    out.percent_overall_mean += slope.unaryExpr(pc_fn);
    out.percent_global_mean += percent_change(global);
    out.percent_temporal_mean += (pooled.array() - global).matrix().unaryExpr(pc_fn);
    if (T > 0)
      out.percent_spatial_mean +=
          (slope.rowwise() - pooled.transpose()).rowwise().mean().unaryExpr(pc_fn);

    if (r % pv_every == 0) {
      accumulate_pvalues(out.pvalues, data.Y, mu_cell, rep_rng);
      ++out.pvalue_draws;
    }
    ++r;
  }
  if (R > 0) {
    const double inv = 1.0 / static_cast<double>(R);
    out.a_mean *= inv;
    out.c_mean *= inv;
    out.latent_mean *= inv;
    out.mu_mean *= inv;
    out.percent_overall_mean *= inv;
    out.percent_global_mean *= inv;
    out.percent_temporal_mean *= inv;
    out.percent_spatial_mean *= inv;
  }
  if (out.pvalue_draws > 0) out.pvalues /= static_cast<double>(out.pvalue_draws);
  out.acceptance = kernel.acceptance_rates();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace {

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

EffectPath pooled_effect_path(const HierarchicalDraws& draws, const CompetitorSpec& spec) {
  const MatrixXd Lbar = spec.mean_loadings();
  require(Lbar.cols() == draws.mu_a.cols(), ErrorCode::DimensionMismatch,
          "draws and design disagree on the exposure block");
  const Index T = Lbar.rows(), R = draws.draws();
  const MatrixXd paths = draws.mu_a * Lbar.transpose();  // R x T
  EffectPath e;
  e.mean = R > 0 ? VectorXd(paths.colwise().mean().transpose()) : VectorXd::Zero(T);
  e.lower.resize(T);
  e.upper.resize(T);
  e.percent_mean.resize(T);
  e.percent_lower.resize(T);
  e.percent_upper.resize(T);
  for (Index t = 0; t < T; ++t) {
    std::vector<double> col(paths.col(t).data(), paths.col(t).data() + R);
    e.lower[t] = quantile(col, 0.025);
    e.upper[t] = quantile(col, 0.975);
    e.percent_mean[t] =
        R > 0 ? paths.col(t).unaryExpr([](double b) { return percent_change(b); }).mean() : 0.0;
    e.percent_lower[t] = percent_change(e.lower[t]);
    e.percent_upper[t] = percent_change(e.upper[t]);
  }
  return e;
}

}  // namespace sdglmc

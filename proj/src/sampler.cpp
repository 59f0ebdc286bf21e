#include "sdglmc/sampler.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "sdglmc/block_tridiagonal.hpp"
#include "sdglmc/error.hpp"

namespace sdglmc {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::SingleStep: return "single_step";
    case Variant::NoConfounders: return "no_confounders";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "single_step" || s == "single") return Variant::SingleStep;
  if (s == "no_confounders" || s == "noconf") return Variant::NoConfounders;
  fail(ErrorCode::InvalidConfig, "unknown variant '" + s + "'");
}

void FitOptions::validate() const {
  require(iterations >= 1, ErrorCode::InvalidConfig, "iterations must be positive");
  require(burn_in >= 0 && burn_in <= iterations, ErrorCode::InvalidConfig,
          "burn_in must be in [0, iterations]");
  require(thin >= 1, ErrorCode::InvalidConfig, "thin must be at least 1");
  require(n_chains >= 1, ErrorCode::InvalidConfig, "n_chains must be at least 1");
  require(spatial_df >= 1 && temporal_df >= 1, ErrorCode::InvalidConfig,
          "trend degrees of freedom must be positive");
  require(target_acceptance > 0.0 && target_acceptance < 1.0, ErrorCode::InvalidConfig,
          "target acceptance must lie in (0, 1)");
  require(adapt_batch >= 1 && max_pvalue_draws >= 1, ErrorCode::InvalidConfig,
          "adapt_batch and max_pvalue_draws must be positive");
}

CoefficientField McmcState::beta0(Index n, Index T) const {
  CoefficientField f;
  f.baseline = gamma4[0];
  f.spatial = gamma3.head(n);
  f.temporal = Eigen::Map<const VectorXd, 0, Eigen::InnerStride<2>>(gamma2.data(), T);
  if (gamma1.size() == n * T)
    f.interaction = Eigen::Map<const MatrixXd>(gamma1.data(), n, T);
  else
    f.interaction = MatrixXd::Zero(n, T);
  return f;
}

CoefficientField McmcState::beta1(Index n, Index T) const {
  CoefficientField f;
  f.baseline = gamma4[1];
  f.spatial = gamma3.tail(n);
  f.temporal = Eigen::Map<const VectorXd, 0, Eigen::InnerStride<2>>(gamma2.data() + 1, T);
  f.interaction = MatrixXd::Zero(n, T);
  return f;
}

VectorXd PosteriorDraws::scalar(const std::string& name) const {
  for (size_t k = 0; k < scalar_names.size(); ++k)
    if (scalar_names[k] == name) return scalars.col(static_cast<Index>(k));
  fail(ErrorCode::InvalidConfig, "no scalar chain named '" + name + "'");
}

namespace {

double initial_variance(const IgParams& p) {
  return p.shape > 1.0 ? p.rate / (p.shape - 1.0) : p.rate / p.shape;
}

}  // namespace

SdglmcSampler::SdglmcSampler(const PanelData& data, MatrixXd regressor, PriorConfig priors,
                             InteractionType interaction, bool use_confounders)
    : data_(data),
      x_(std::move(regressor)),
      priors_(priors),
      interaction_(interaction),
      n_(data.n()),
      T_(data.T()),
      p_(use_confounders ? data.p() : 0) {
  data.validate();
  priors_.validate();
  require(x_.rows() == n_ && x_.cols() == T_, ErrorCode::DimensionMismatch,
          "regressor must be n x T");
  require(data.graph.connected(), ErrorCode::DisconnectedGraph,
          "the ICAR priors need a connected graph");
  if (use_confounders) M_ = data.M;
  Q_ = icar_precision(data.graph).Q;
  Q_dense_ = MatrixXd(Q_);
  G4tG4_ = MatrixXd::Zero(p_ + 2, p_ + 2);
  std::vector<const MatrixXd*> cols;
  MatrixXd ones = MatrixXd::Ones(n_, T_);
  cols.push_back(&ones);
  cols.push_back(&x_);
  for (const auto& m : M_) cols.push_back(&m);
  for (Index a = 0; a < p_ + 2; ++a)
    for (Index b = 0; b <= a; ++b)
      G4tG4_(a, b) = G4tG4_(b, a) = cols[a]->cwiseProduct(*cols[b]).sum();
  curvature_ = data.Y;
}

McmcState SdglmcSampler::initial_state() const {
  McmcState s;
  s.gamma1 = VectorXd::Zero(interaction_ == InteractionType::T1 ? 0 : n_ * T_);
  s.gamma2 = VectorXd::Zero(2 * T_);
  s.gamma3 = VectorXd::Zero(2 * n_);
  s.gamma4 = VectorXd::Zero(p_ + 2);
  s.var.sigma2_w0 = initial_variance(priors_.w0);
  s.var.sigma2_d0 = initial_variance(priors_.d0);
  s.var.sigma2_w1 = initial_variance(priors_.w1);
  s.var.sigma2_d1 = initial_variance(priors_.d1);
  s.var.tau2 = initial_variance(priors_.tau);
  s.var.sigma2_star = VectorXd::Constant(interaction_ == InteractionType::T5 ? n_ : 1,
                                         initial_variance(priors_.star));
  s.latent = (data_.Y.array() + 0.5).log().matrix();
  return s;
}

MatrixXd SdglmcSampler::block_contribution(int j, const McmcState& s) const {
  switch (j) {
    case 1:
      if (s.gamma1.size() == 0) return MatrixXd::Zero(n_, T_);
      return Eigen::Map<const MatrixXd>(s.gamma1.data(), n_, T_);
    case 2: {
      MatrixXd out(n_, T_);
      for (Index t = 0; t < T_; ++t)
        out.col(t) = (s.gamma2[2 * t] + s.gamma2[2 * t + 1] * x_.col(t).array()).matrix();
      return out;
    }
    case 3: {
      MatrixXd out = x_.array().colwise() * s.gamma3.tail(n_).array();
      out.colwise() += s.gamma3.head(n_);
      return out;
    }
    case 4: {
      MatrixXd out = (s.gamma4[0] + s.gamma4[1] * x_.array()).matrix();
      for (Index k = 0; k < p_; ++k) out += s.gamma4[2 + k] * M_[static_cast<size_t>(k)];
      return out;
    }
    default:
      fail(ErrorCode::InvalidConfig, "block index must be 1..4");
  }
}

MatrixXd SdglmcSampler::structured_predictor(const McmcState& s) const {
  MatrixXd out = block_contribution(4, s) + block_contribution(3, s) + block_contribution(2, s);
  if (s.gamma1.size() > 0) out += block_contribution(1, s);
  return out;
}

MatrixXd SdglmcSampler::eta_without(int j, const McmcState& s) const {
  MatrixXd eta = s.latent - data_.offset;
  for (int l = 1; l <= 4; ++l)
    if (l != j && !(l == 1 && s.gamma1.size() == 0)) eta -= block_contribution(l, s);
  return eta;
}

VectorXd SdglmcSampler::gamma_rhs(int j, const McmcState& s) const {
  const MatrixXd eta = eta_without(j, s);
  const double it = 1.0 / s.var.tau2;
  switch (j) {
    case 1:
      require(interaction_ != InteractionType::T1, ErrorCode::UnsupportedInteraction,
              "no interaction block under T1");
      return Eigen::Map<const VectorXd>(eta.data(), eta.size()) * it;
    case 2: {
      VectorXd r(2 * T_);
      for (Index t = 0; t < T_; ++t) {
        r[2 * t] = eta.col(t).sum() * it;
        r[2 * t + 1] = eta.col(t).dot(x_.col(t)) * it;
      }
      return r;
    }
    case 3: {
      VectorXd r(2 * n_);
      r.head(n_) = eta.rowwise().sum() * it;
      r.tail(n_) = eta.cwiseProduct(x_).rowwise().sum() * it;
      return r;
    }
    case 4: {
      VectorXd r(p_ + 2);
      r[0] = eta.sum() * it;
      r[1] = eta.cwiseProduct(x_).sum() * it;
      for (Index k = 0; k < p_; ++k) r[2 + k] = eta.cwiseProduct(M_[static_cast<size_t>(k)]).sum() * it;
      return r;
    }
    default:
      fail(ErrorCode::InvalidConfig, "block index must be 1..4");
  }
}

namespace {

BlockTridiagonal gamma1_precision(InteractionType type, Index n, Index T, const MatrixXd& Q,
                                  const PriorConfig& pr, const VarianceState& v) {
  const double it = 1.0 / v.tau2;
  if (type == InteractionType::T2 || type == InteractionType::T5) {
    auto P = BlockTridiagonal::diagonal(T, n);
    VectorXd r(n);
    for (Index i = 0; i < n; ++i) r[i] = 1.0 / v.star(i);
    for (Index t = 0; t < T; ++t) P.diag_vec(t).setConstant(it);
    P.diag_vec(0).array() += 1.0 / pr.V_delta_star;
    for (Index t = 1; t < T; ++t) {
      P.diag_vec(t - 1) += r;
      P.diag_vec(t) += r;
      P.lower_vec(t) = -r;
    }
    return P;
  }
  auto P = BlockTridiagonal::dense(T, n);
  const MatrixXd R = Q / v.star(0);
  for (Index t = 0; t < T; ++t) P.diag(t).diagonal().setConstant(it);
  if (type == InteractionType::T3) {
    for (Index t = 0; t < T; ++t) P.diag(t) += R;
    return P;
  }
  P.diag(0).diagonal().array() += 1.0 / pr.V_delta_star;
  for (Index t = 1; t < T; ++t) {
    P.diag(t - 1) += R;
    P.diag(t) += R;
    P.lower(t) = -R;
  }
  return P;
}

BlockTridiagonal gamma2_precision(Index n, Index T, const MatrixXd& x, const PriorConfig& pr,
                                  const VarianceState& v) {
  const double it = 1.0 / v.tau2;
  auto P = BlockTridiagonal::dense(T, 2);
  for (Index t = 0; t < T; ++t) {
    const double sx = x.col(t).sum(), sxx = x.col(t).squaredNorm();
    P.diag(t) << n * it, sx * it, sx * it, sxx * it;
  }
  P.diag(0)(0, 0) += 1.0 / pr.V_delta0;
  P.diag(0)(1, 1) += 1.0 / pr.V_delta1;
  const Eigen::Matrix2d R = Eigen::Vector2d(1.0 / v.sigma2_w0, 1.0 / v.sigma2_w1).asDiagonal();
  for (Index t = 1; t < T; ++t) {
    P.diag(t - 1) += R;
    P.diag(t) += R;
    P.lower(t) = -R;
  }
  return P;
}

}  // namespace

SparseMatrix SdglmcSampler::gamma_precision(int j, const McmcState& s) const {
  const double it = 1.0 / s.var.tau2;
  switch (j) {
    case 1:
      require(interaction_ != InteractionType::T1, ErrorCode::UnsupportedInteraction,
              "no interaction block under T1");
      return gamma1_precision(interaction_, n_, T_, Q_dense_, priors_, s.var).to_sparse();
    case 2:
      return gamma2_precision(n_, T_, x_, priors_, s.var).to_sparse();
    case 3: {
      MatrixXd P = MatrixXd::Zero(2 * n_, 2 * n_);
      P.topLeftCorner(n_, n_) = Q_dense_ / s.var.sigma2_d0;
      P.bottomRightCorner(n_, n_) = Q_dense_ / s.var.sigma2_d1;
      P.topLeftCorner(n_, n_).diagonal().array() += static_cast<double>(T_) * it;
      const VectorXd sx = x_.rowwise().sum() * it;
      P.topRightCorner(n_, n_).diagonal() = sx;
      P.bottomLeftCorner(n_, n_).diagonal() = sx;
      P.bottomRightCorner(n_, n_).diagonal() += x_.rowwise().squaredNorm() * it;
      return P.sparseView();
    }
    case 4: {
      MatrixXd P = G4tG4_ * it;
      P.diagonal().array() += 1.0 / priors_.slab_var;
      return P.sparseView();
    }
    default:
      fail(ErrorCode::InvalidConfig, "block index must be 1..4");
  }
}

void SdglmcSampler::sample_gamma(int j, McmcState& s, Rng& rng) const {
  const VectorXd b = gamma_rhs(j, s);
  switch (j) {
    case 1: {
      auto P = gamma1_precision(interaction_, n_, T_, Q_dense_, priors_, s.var);
      P.factorize();
      s.gamma1 = P.sample(b, rng);
      return;
    }
    case 2: {
      auto P = gamma2_precision(n_, T_, x_, priors_, s.var);
      P.factorize();
      s.gamma2 = P.sample(b, rng);
      return;
    }
    case 3:
      s.gamma3 = sample_gaussian_precision(MatrixXd(gamma_precision(3, s)), b, rng);
      return;
    case 4: {
      MatrixXd P = G4tG4_ / s.var.tau2;
      P.diagonal().array() += 1.0 / priors_.slab_var;
      s.gamma4 = sample_gaussian_precision(P, b, rng);
      return;
    }
    default:
      fail(ErrorCode::InvalidConfig, "block index must be 1..4");
  }
}

void SdglmcSampler::center_effects(McmcState& s) const {
  CoefficientField b0 = s.beta0(n_, T_), b1 = s.beta1(n_, T_);
  if (s.gamma1.size() == 0) b0.interaction.resize(0, 0);
  b1.interaction.resize(0, 0);
  center(b0);
  center(b1);
  s.gamma4[0] = b0.baseline;
  s.gamma4[1] = b1.baseline;
  s.gamma3.head(n_) = b0.spatial;
  s.gamma3.tail(n_) = b1.spatial;
  for (Index t = 0; t < T_; ++t) {
    s.gamma2[2 * t] = b0.temporal[t];
    s.gamma2[2 * t + 1] = b1.temporal[t];
  }
  if (s.gamma1.size() > 0) s.gamma1 = Eigen::Map<const VectorXd>(b0.interaction.data(), n_ * T_);
}

IgParams SdglmcSampler::temporal_variance_posterior(int k, const McmcState& s) const {
  require(k == 0 || k == 1, ErrorCode::InvalidConfig, "k must be 0 or 1");
  double ss = 0.0;
  for (Index t = 1; t < T_; ++t) {
    const double d = s.gamma2[2 * t + k] - s.gamma2[2 * (t - 1) + k];
    ss += d * d;
  }
  const IgParams& p = k == 0 ? priors_.w0 : priors_.w1;
  return {p.shape + 0.5 * static_cast<double>(T_ - 1), p.rate + 0.5 * ss};
}

IgParams SdglmcSampler::spatial_variance_posterior(int k, const McmcState& s) const {
  require(k == 0 || k == 1, ErrorCode::InvalidConfig, "k must be 0 or 1");
  const double qf = icar_quadratic_form(data_.graph, k == 0 ? s.gamma3.head(n_) : s.gamma3.tail(n_));
  const IgParams& p = k == 0 ? priors_.d0 : priors_.d1;
  return {p.shape + 0.5 * static_cast<double>(n_ - 1), p.rate + 0.5 * qf};
}

std::vector<IgParams> SdglmcSampler::interaction_variance_posterior(const McmcState& s) const {
  const IgParams& p = priors_.star;
  const double n = static_cast<double>(n_), T = static_cast<double>(T_);
  if (interaction_ == InteractionType::T1) return {};
  const Eigen::Map<const MatrixXd> d(s.gamma1.data(), n_, T_);
  switch (interaction_) {
    case InteractionType::T2: {
      const double ss = T_ > 1 ? (d.rightCols(T_ - 1) - d.leftCols(T_ - 1)).squaredNorm() : 0.0;
      return {{p.shape + 0.5 * n * (T - 1), p.rate + 0.5 * ss}};
    }
    case InteractionType::T3: {
      double qf = 0.0;
      for (Index t = 0; t < T_; ++t) qf += icar_quadratic_form(data_.graph, d.col(t));
      return {{p.shape + 0.5 * (n - 1) * T, p.rate + 0.5 * qf}};
    }
    case InteractionType::T4: {
      double qf = 0.0;
      for (Index t = 1; t < T_; ++t)
        qf += icar_quadratic_form(data_.graph, VectorXd(d.col(t) - d.col(t - 1)));
      return {{p.shape + 0.5 * (n - 1) * (T - 1), p.rate + 0.5 * qf}};
    }
    case InteractionType::T5: {
      std::vector<IgParams> out(static_cast<size_t>(n_));
      for (Index i = 0; i < n_; ++i) {
        const double ss =
            T_ > 1 ? (d.row(i).tail(T_ - 1) - d.row(i).head(T_ - 1)).squaredNorm() : 0.0;
        out[static_cast<size_t>(i)] = {p.shape + 0.5 * (T - 1), p.rate + 0.5 * ss};
      }
      return out;
    }
    default:
      return {};
  }
}

IgParams SdglmcSampler::tau_posterior(const McmcState& s) const {
  double ss = 0.0;
  if (n_ * T_ > 0) ss = (s.latent - data_.offset - structured_predictor(s)).squaredNorm();
  return {priors_.tau.shape + 0.5 * static_cast<double>(n_ * T_), priors_.tau.rate + 0.5 * ss};
}

void SdglmcSampler::sample_variances(McmcState& s, Rng& rng) const {
  s.var.sigma2_w0 = draw_inverse_gamma(temporal_variance_posterior(0, s), rng);
  s.var.sigma2_w1 = draw_inverse_gamma(temporal_variance_posterior(1, s), rng);
  s.var.sigma2_d0 = draw_inverse_gamma(spatial_variance_posterior(0, s), rng);
  s.var.sigma2_d1 = draw_inverse_gamma(spatial_variance_posterior(1, s), rng);
  const auto star = interaction_variance_posterior(s);
  for (size_t k = 0; k < star.size(); ++k)
    s.var.sigma2_star[static_cast<Index>(k)] = draw_inverse_gamma(star[k], rng);
}

void SdglmcSampler::sample_tau(McmcState& s, Rng& rng) const {
  s.var.tau2 = draw_inverse_gamma(tau_posterior(s), rng);
}

void SdglmcSampler::sample_latent(McmcState& s, LatentKernel& kernel, Rng& rng) const {
  const MatrixXd centre = data_.offset + structured_predictor(s);
  kernel.step(s.latent, centre, curvature_, s.var.tau2, PoissonLogLik{data_.Y}, rng);
}

void SdglmcSampler::sweep(McmcState& s, LatentKernel& kernel, Rng& rng) const {
  sample_gamma(4, s, rng);
  sample_gamma(3, s, rng);
  sample_gamma(2, s, rng);
  if (interaction_ != InteractionType::T1) sample_gamma(1, s, rng);
  center_effects(s);
  sample_variances(s, rng);
  sample_latent(s, kernel, rng);
  sample_tau(s, rng);
}

LatentKernel SdglmcSampler::make_kernel(const FitOptions& opt) const {
  return LatentKernel(n_, T_, opt.target_acceptance, opt.adapt_batch);
}

MatrixXd variant_regressor(const PanelData& data, const FitOptions& opt, const TrendFit* trend) {
  if (opt.variant == Variant::SingleStep) return data.X;
  require(trend != nullptr, ErrorCode::MissingTrend,
          "the two-step variants need the large-scale exposure trend");
  require(trend->residual.rows() == data.n() && trend->residual.cols() == data.T(),
          ErrorCode::DimensionMismatch, "trend residual must be n x T");
  return trend->residual;
}

PosteriorDraws run_chain(const PanelData& data, const MatrixXd& regressor,
                         const PriorConfig& priors, const FitOptions& opt, int chain) {
  opt.validate();
  const auto start = std::chrono::steady_clock::now();
  SdglmcSampler sampler(data, regressor, priors, opt.interaction,
                        opt.variant != Variant::NoConfounders);
  const Index n = sampler.n(), T = sampler.T(), p = sampler.p();
  Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(chain)));
  Rng rep_rng(derive_seed(opt.seed, 100000 + static_cast<std::uint64_t>(chain)));

  McmcState s = sampler.initial_state();
  if (chain > 0) {
    s.gamma4[0] += 0.5 * std_normal(rng);
    s.var.tau2 *= std::exp(2.0 * std_normal(rng));
  }
  LatentKernel kernel = sampler.make_kernel(opt);

  PosteriorDraws out;
  out.variant = opt.variant;
  out.interaction = opt.interaction;
  out.iterations = opt.iterations;
  out.burn_in = opt.burn_in;
  out.thin = opt.thin;
  out.seed = opt.seed;
  out.scalar_names = {"baseline0", "baseline1"};
  for (Index k = 0; k < p; ++k) out.scalar_names.push_back("alpha" + std::to_string(k + 1));
  for (const char* v : {"sigma2_w0", "sigma2_d0", "sigma2_w1", "sigma2_d1", "tau2"})
    out.scalar_names.emplace_back(v);
  const bool shared_star =
      opt.interaction != InteractionType::T1 && opt.interaction != InteractionType::T5;
  if (shared_star) out.scalar_names.emplace_back("sigma2_star");

  const Index R = (opt.iterations - opt.burn_in + opt.thin - 1) / opt.thin;
  const Index pv_every = std::max<Index>(1, (R + opt.max_pvalue_draws - 1) / opt.max_pvalue_draws);
  out.scalars.resize(R, static_cast<Index>(out.scalar_names.size()));
  out.temporal0.resize(R, T);
  out.temporal1.resize(R, T);
  out.spatial0.resize(R, n);
  out.spatial1.resize(R, n);
  if (opt.interaction == InteractionType::T5) out.star_variances.resize(R, n);
  out.deviance.resize(R);
  out.latent_mean = MatrixXd::Zero(n, T);
  out.mu_mean = MatrixXd::Zero(n, T);
  if (opt.interaction != InteractionType::T1) out.interaction_mean = MatrixXd::Zero(n, T);
  out.beta1_mean = MatrixXd::Zero(n, T);
  out.percent_overall_mean = MatrixXd::Zero(n, T);
  out.percent_temporal_mean = VectorXd::Zero(T);
  out.percent_spatial_mean = VectorXd::Zero(n);
  out.pvalues = MatrixXd::Zero(n, T);

  const auto pc = [](double b) { return percent_change(b); };
  Index r = 0;
  for (int it = 0; it < opt.iterations; ++it) {
    sampler.sweep(s, kernel, rng);
    if (it < opt.burn_in) {
      kernel.adapt();
      if (it == opt.burn_in - 1) kernel.reset_counts();
      continue;
    }
    if ((it - opt.burn_in) % opt.thin != 0) continue;

    Index c = 0;
    out.scalars(r, c++) = s.gamma4[0];
    out.scalars(r, c++) = s.gamma4[1];
    for (Index k = 0; k < p; ++k) out.scalars(r, c++) = s.gamma4[2 + k];
    out.scalars(r, c++) = s.var.sigma2_w0;
    out.scalars(r, c++) = s.var.sigma2_d0;
    out.scalars(r, c++) = s.var.sigma2_w1;
    out.scalars(r, c++) = s.var.sigma2_d1;
    out.scalars(r, c++) = s.var.tau2;
    if (shared_star) out.scalars(r, c++) = s.var.sigma2_star[0];
    for (Index t = 0; t < T; ++t) {
      out.temporal0(r, t) = s.gamma2[2 * t];
      out.temporal1(r, t) = s.gamma2[2 * t + 1];
    }
    out.spatial0.row(r) = s.gamma3.head(n).transpose();
    out.spatial1.row(r) = s.gamma3.tail(n).transpose();
    if (opt.interaction == InteractionType::T5) out.star_variances.row(r) = s.var.sigma2_star.transpose();

    const MatrixXd mu = s.latent.array().exp().matrix();
    out.deviance[r] = poisson_deviance(data.Y, mu);
    out.latent_mean += s.latent;
    out.mu_mean += mu;
    if (s.gamma1.size() > 0) out.interaction_mean += Eigen::Map<const MatrixXd>(s.gamma1.data(), n, T);
    const MatrixXd b1 = compose_coefficients(s.beta1(n, T));
    out.beta1_mean += b1;
    out.percent_overall_mean += b1.unaryExpr(pc);
    out.percent_temporal_mean += out.temporal1.row(r).transpose().unaryExpr(pc);
    out.percent_spatial_mean += s.gamma3.tail(n).unaryExpr(pc);
    out.percent_baseline_mean += pc(s.gamma4[1]);

    if (r % pv_every == 0) {
      accumulate_pvalues(out.pvalues, data.Y, mu, rep_rng);
      ++out.pvalue_draws;
    }
    if (opt.keep_latent_draws) out.latent_draws.push_back(s.latent);
    ++r;
  }

  if (R > 0) {
    const double inv = 1.0 / static_cast<double>(R);
    out.latent_mean *= inv;
    out.mu_mean *= inv;
    if (out.interaction_mean.size()) out.interaction_mean *= inv;
    out.beta1_mean *= inv;
    out.percent_overall_mean *= inv;
    out.percent_temporal_mean *= inv;
    out.percent_spatial_mean *= inv;
    out.percent_baseline_mean *= inv;
  }
  if (out.pvalue_draws > 0) out.pvalues /= static_cast<double>(out.pvalue_draws);
  out.acceptance = kernel.acceptance_rates();
  out.proposal_multiplier = kernel.multiplier();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

FitResult fit_sdglmc(const PanelData& data, const PriorConfig& priors, const FitOptions& opt) {
  opt.validate();
  data.validate();
  FitResult res;
  if (opt.variant != Variant::SingleStep)
    res.trend = fit_space_time_trend(data.X, data.coordinates(), opt.spatial_df, opt.temporal_df);
  const MatrixXd regressor = variant_regressor(data, opt, res.trend ? &*res.trend : nullptr);

  res.chains.resize(static_cast<size_t>(opt.n_chains));
  std::vector<std::exception_ptr> errors(res.chains.size());
  std::vector<std::thread> workers;
  for (int c = 0; c < opt.n_chains; ++c)
    workers.emplace_back([&, c] {
      try {
        res.chains[static_cast<size_t>(c)] = run_chain(data, regressor, priors, opt, c);
      } catch (...) {
        errors[static_cast<size_t>(c)] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return res;
}

}  // namespace sdglmc

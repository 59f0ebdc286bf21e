#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sdglmc/error.hpp"
#include "sdglmc/sampler.hpp"

using namespace sdglmc;

namespace {

MatrixXd randn(Index r, Index c, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  MatrixXd m(r, c);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = z(rng);
  return m;
}

PanelData small_panel(Index rows, Index cols, Index T, Index p, Rng& rng) {
  PanelData d;
  d.graph = make_lattice(rows, cols);
  const Index n = rows * cols;
  d.offset = MatrixXd::Constant(n, T, std::log(20.0));
  d.X = randn(n, T, rng);
  for (Index k = 0; k < p; ++k) d.M.push_back(randn(n, T, rng));
  d.Y.resize(n, T);
  for (Index k = 0; k < d.Y.size(); ++k) d.Y.data()[k] = draw_poisson(20.0, rng);
  return d;
}

McmcState random_state(const SdglmcSampler& s, Rng& rng) {
  McmcState st = s.initial_state();
  const Index n = s.n(), T = s.T();
  if (st.gamma1.size()) st.gamma1 = randn(n * T, 1, rng, 0.3);
  st.gamma2 = randn(2 * T, 1, rng, 0.2);
  st.gamma3 = randn(2 * n, 1, rng, 0.2);
  st.gamma4 = randn(s.p() + 2, 1, rng, 0.5);
  st.var.sigma2_w0 = 0.4;
  st.var.sigma2_d0 = 0.6;
  st.var.sigma2_w1 = 0.05;
  st.var.sigma2_d1 = 0.08;
  st.var.tau2 = 0.5;
  for (Index i = 0; i < st.var.sigma2_star.size(); ++i) st.var.sigma2_star[i] = 0.2 + 0.1 * i;
  st.latent = std::log(20.0) + randn(n, T, rng, 0.3).array();
  return st;
}

// Kolmogorov distribution tail, Pr(K > lambda).
double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(s, 0.0, 1.0);
}

double ks_pvalue(std::vector<double> x, double mean, double sd) {
  std::sort(x.begin(), x.end());
  const double N = static_cast<double>(x.size());
  double D = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    const double F = 0.5 * std::erfc(-(x[k] - mean) / (sd * std::sqrt(2.0)));
    D = std::max({D, F - k / N, (k + 1) / N - F});
  }
  const double sn = std::sqrt(N);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * D);
}

double newton_root(double y, double c, double tau2) {
  double th = c;
  for (int k = 0; k < 100; ++k) {
    const double f = y - std::exp(th) - (th - c) / tau2;
    const double df = -std::exp(th) - 1.0 / tau2;
    th -= f / df;
  }
  return th;
}

}  // namespace

TEST_CASE("full-conditional precision and mean match the dense stacked oracle") {
  Rng rng(101);
  const PanelData d = small_panel(2, 2, 3, 1, rng);
  const PriorConfig pr;
  for (auto type : {InteractionType::T1, InteractionType::T2, InteractionType::T3, InteractionType::T4,
                    InteractionType::T5}) {
    CAPTURE(to_string(type));
    SdglmcSampler sm(d, d.X, pr, type);
    const McmcState st = random_state(sm, rng);
    const auto sys = build_stacked_system(d.X, d.M, d.graph, type, pr, st.var);
    const VectorXd theta = Eigen::Map<const VectorXd>(st.latent.data(), st.latent.size());
    const VectorXd o = Eigen::Map<const VectorXd>(d.offset.data(), d.offset.size());
    const VectorXd* gammas[4] = {&st.gamma1, &st.gamma2, &st.gamma3, &st.gamma4};
    for (int j = 1; j <= 4; ++j) {
      if (!sys.block(j).present) continue;
      VectorXd eta = theta - o;
      for (int l = 1; l <= 4; ++l)
        if (l != j && sys.block(l).present) eta -= MatrixXd(sys.block(l).G) * *gammas[l - 1];
      const MatrixXd G = MatrixXd(sys.block(j).G);
      const MatrixXd P = MatrixXd(sys.block(j).K) + G.transpose() * G / st.var.tau2;
      const VectorXd b = G.transpose() * eta / st.var.tau2;
      CHECK((MatrixXd(sm.gamma_precision(j, st)) - P).cwiseAbs().maxCoeff() < 1e-9 * P.cwiseAbs().maxCoeff());
      CHECK((sm.gamma_rhs(j, st) - b).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("Gaussian block draws match the dense oracle moments") {
  Rng rng(2024);
  const PanelData d = small_panel(2, 2, 3, 1, rng);
  const PriorConfig pr;
  const int N = 50000;
  for (auto type : {InteractionType::T2, InteractionType::T3, InteractionType::T4, InteractionType::T5}) {
    SdglmcSampler sm(d, d.X, pr, type);
    McmcState st = random_state(sm, rng);
    for (int j = 1; j <= 4; ++j) {
      if (type != InteractionType::T2 && j > 1) continue;  // blocks 2-4 do not depend on the type
      CAPTURE(to_string(type));
      CAPTURE(j);
      const MatrixXd P = MatrixXd(sm.gamma_precision(j, st));
      const MatrixXd V = P.inverse();
      const VectorXd mean = V * sm.gamma_rhs(j, st);
      const Index k = P.rows();
      VectorXd sum = VectorXd::Zero(k);
      MatrixXd sq = MatrixXd::Zero(k, k);
      for (int r = 0; r < N; ++r) {
        sm.sample_gamma(j, st, rng);
        const VectorXd& g = j == 1 ? st.gamma1 : j == 2 ? st.gamma2 : j == 3 ? st.gamma3 : st.gamma4;
        sum += g;
        sq += g * g.transpose();
      }
      const VectorXd m = sum / N;
      const MatrixXd C = sq / N - m * m.transpose();
      for (Index a = 0; a < k; ++a) CHECK(std::abs(m[a] - mean[a]) < 3.0 * std::sqrt(V(a, a) / N));
      // joint check: N (m - mean)' P (m - mean) ~ chi2_k, mean k, sd sqrt(2k)
      const VectorXd e = m - mean;
      CHECK(N * e.dot(P * e) < k + 5.0 * std::sqrt(2.0 * k));
      CHECK((C - V).norm() / V.norm() < 0.05);
    }
  }
}

TEST_CASE("Gaussian block limits: vague likelihood gives the prior, huge precision gives zero") {
  Rng rng(303);
  const PanelData d = small_panel(1, 2, 3, 0, rng);
  PriorConfig pr;
  SdglmcSampler sm(d, d.X, pr, InteractionType::T2);
  McmcState st = random_state(sm, rng);
  st.var.tau2 = 1e12;
  VectorXd sum = VectorXd::Zero(6);
  const int N = 20000;
  for (int r = 0; r < N; ++r) {
    sm.sample_gamma(1, st, rng);
    sum += st.gamma1;
  }
  const double prior_sd = std::sqrt(pr.V_delta_star);
  CHECK((sum / N).cwiseAbs().maxCoeff() < 5 * 3 * prior_sd / std::sqrt(N));

  st.var.tau2 = 0.5;
  st.var.sigma2_d0 = st.var.sigma2_d1 = 1e-14;
  sm.sample_gamma(3, st, rng);
  // ICAR leaves the constant direction to the likelihood; everything else is pinned
  const VectorXd s0 = st.gamma3.head(2), s1 = st.gamma3.tail(2);
  CHECK(std::abs(s0[0] - s0[1]) < 1e-5);
  CHECK(std::abs(s1[0] - s1[1]) < 1e-5);
  PriorConfig tight;
  tight.slab_var = 1e-16;
  SdglmcSampler sm2(d, d.X, tight, InteractionType::T1);
  McmcState st2 = random_state(sm2, rng);
  sm2.sample_gamma(4, st2, rng);
  CHECK(st2.gamma4.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("conjugate parameters: temporal variances") {
  Rng rng(1);
  PanelData d = small_panel(1, 2, 2, 0, rng);
  SdglmcSampler sm(d, d.X, PriorConfig{}, InteractionType::T1);
  McmcState st = sm.initial_state();
  CHECK(sm.temporal_variance_posterior(0, st) == IgParams{0.51, 0.01});

  d = small_panel(1, 2, 3, 0, rng);
  PriorConfig pr;
  pr.w1 = {1.0, 1.0};
  SdglmcSampler sm3(d, d.X, pr, InteractionType::T1);
  st = sm3.initial_state();
  for (Index t = 0; t < 3; ++t) st.gamma2[2 * t + 1] = static_cast<double>(t);
  CHECK(sm3.temporal_variance_posterior(1, st) == IgParams{2.0, 2.0});

  // posterior mean over draws matches b'/(a'-1)
  const IgParams post{2.0 + 1.0, 2.0};
  double s = 0.0;
  const int N = 200000;
  for (int r = 0; r < N; ++r) s += draw_inverse_gamma(post, rng);
  CHECK(s / N == doctest::Approx(post.rate / (post.shape - 1)).epsilon(0.02));
}

TEST_CASE("conjugate parameters: spatial variances") {
  Rng rng(2);
  const PriorConfig pr;
  PanelData d = small_panel(1, 3, 2, 0, rng);  // path 0-1-2
  SdglmcSampler sm(d, d.X, pr, InteractionType::T1);
  McmcState st = sm.initial_state();
  st.gamma3.head(3).setConstant(1.7);
  CHECK(sm.spatial_variance_posterior(0, st) == IgParams{pr.d0.shape + 1.0, pr.d0.rate});
  st.gamma3.tail(3) << 0.0, 1.0, 0.0;
  CHECK(sm.spatial_variance_posterior(1, st).rate == doctest::Approx(pr.d1.rate + 1.0).epsilon(1e-15));

  d = small_panel(1, 2, 2, 0, rng);
  SdglmcSampler sm2(d, d.X, pr, InteractionType::T1);
  st = sm2.initial_state();
  st.gamma3.head(2) << 1.0, -1.0;
  CHECK(sm2.spatial_variance_posterior(0, st) == IgParams{pr.d0.shape + 0.5, pr.d0.rate + 2.0});
}

TEST_CASE("conjugate parameters: interaction variances") {
  Rng rng(3);
  const PriorConfig pr;
  const IgParams a = pr.star;
  PanelData d = small_panel(1, 2, 2, 0, rng);
  {
    SdglmcSampler sm(d, d.X, pr, InteractionType::T4);
    McmcState st = sm.initial_state();
    const auto zero = sm.interaction_variance_posterior(st);
    REQUIRE(zero.size() == 1);
    CHECK(zero[0].rate == a.rate);
    st.gamma1 << 0.3, 0.2, 1.3, -0.8;  // delta_t2 - delta_t1 = (1, -1)
    const auto p = sm.interaction_variance_posterior(st);
    CHECK(p[0].shape == doctest::Approx(a.shape + 0.5));
    CHECK(p[0].rate == doctest::Approx(a.rate + 2.0).epsilon(1e-14));
  }
  {
    SdglmcSampler sm(d, d.X, pr, InteractionType::T5);
    McmcState st = sm.initial_state();
    st.gamma1 << 0.0, 0.0, 0.0, std::sqrt(8.0);  // area 0 no increments, area 1 squared sum 8
    const auto p = sm.interaction_variance_posterior(st);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == IgParams{a.shape + 0.5, a.rate});
    CHECK(p[1].rate == doctest::Approx(a.rate + 4.0).epsilon(1e-14));
  }
  d = small_panel(2, 2, 3, 0, rng);
  McmcState base;
  {
    SdglmcSampler sm(d, d.X, pr, InteractionType::T2);
    McmcState st = random_state(sm, rng);
    const Eigen::Map<const MatrixXd> m(st.gamma1.data(), 4, 3);
    double ss = 0.0;
    for (Index i = 0; i < 4; ++i)
      for (Index t = 1; t < 3; ++t) ss += std::pow(m(i, t) - m(i, t - 1), 2);
    const auto p = sm.interaction_variance_posterior(st);
    CHECK(p[0].shape == doctest::Approx(a.shape + 4.0));
    CHECK(p[0].rate == doctest::Approx(a.rate + 0.5 * ss).epsilon(1e-13));
    base = st;
  }
  {
    SdglmcSampler sm(d, d.X, pr, InteractionType::T3);
    McmcState st = random_state(sm, rng);
    const MatrixXd Q = MatrixXd(icar_precision(d.graph).Q);
    const Eigen::Map<const MatrixXd> m(st.gamma1.data(), 4, 3);
    double qf = 0.0;
    for (Index t = 0; t < 3; ++t) qf += m.col(t).dot(Q * m.col(t));
    const auto p = sm.interaction_variance_posterior(st);
    CHECK(p[0].shape == doctest::Approx(a.shape + 0.5 * 3 * 3));
    CHECK(p[0].rate == doctest::Approx(a.rate + 0.5 * qf).epsilon(1e-13));
  }
}

TEST_CASE("conjugate parameters: noise variance") {
  Rng rng(4);
  const PriorConfig pr;
  PanelData d = small_panel(1, 1, 1, 0, rng);
  SdglmcSampler sm(d, d.X, pr, InteractionType::T1);
  McmcState st = sm.initial_state();
  st.latent(0, 0) = d.offset(0, 0);
  CHECK(sm.tau_posterior(st) == IgParams{pr.tau.shape + 0.5, pr.tau.rate});
  st.latent(0, 0) = d.offset(0, 0) + 2.0;
  CHECK(sm.tau_posterior(st).rate == doctest::Approx(pr.tau.rate + 2.0).epsilon(1e-14));

  PanelData empty = small_panel(1, 1, 0, 0, rng);
  SdglmcSampler sm0(empty, empty.X, pr, InteractionType::T1);
  CHECK(sm0.tau_posterior(sm0.initial_state()) == pr.tau);
}

TEST_CASE("prior tail of the slope's temporal variance") {
  const PriorConfig pr;
  CHECK(std::abs(inverse_gamma_cdf(2.4e-4, pr.w1) - 0.99) <= 0.001);
  CHECK(std::abs(inverse_gamma_cdf(0.995, pr.d1) - 0.99) <= 0.001);
}

TEST_CASE("centering preserves the predictor and the state likelihood") {
  Rng rng(5);
  const PanelData d = small_panel(3, 3, 6, 2, rng);
  for (auto type : {InteractionType::T1, InteractionType::T3, InteractionType::T5}) {
    SdglmcSampler sm(d, d.X, PriorConfig{}, type);
    McmcState st = random_state(sm, rng);
    const MatrixXd before = sm.structured_predictor(st);
    const auto loglik = [&](const McmcState& s) {
      const MatrixXd r = s.latent - d.offset - sm.structured_predictor(s);
      return -0.5 * r.squaredNorm() / s.var.tau2;
    };
    const double ll0 = loglik(st);
    sm.center_effects(st);
    CHECK((sm.structured_predictor(st) - before).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(loglik(st) - ll0) < 1e-10);
    const auto b0 = st.beta0(sm.n(), sm.T());
    CHECK(std::abs(b0.temporal.sum()) < 1e-12);
    CHECK(std::abs(b0.spatial.sum()) < 1e-12);
    CHECK(b0.interaction.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    const McmcState fixed = st;
    sm.center_effects(st);
    CHECK((st.gamma2 - fixed.gamma2).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(st.gamma4[0] - fixed.gamma4[0]) < 1e-15);
  }
  SdglmcSampler sm(d, d.X, PriorConfig{}, InteractionType::T1);
  McmcState st = sm.initial_state();
  for (Index t = 0; t < sm.T(); ++t) st.gamma2[2 * t] = 0.8;
  sm.center_effects(st);
  CHECK(st.gamma4[0] == doctest::Approx(0.8));
  CHECK(st.gamma2.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("latent MH is exact for a Gaussian substitute likelihood") {
  Rng rng(6);
  LatentKernel k(1, 1, 0.44, 50);
  const double m = 1.0, s2 = 0.25, c = 0.0, tau2 = 0.5;
  const auto gauss = [&](Index, Index, double th) { return -0.5 * (th - m) * (th - m) / s2; };
  const double prec = 1 / s2 + 1 / tau2, post_mean = (m / s2 + c / tau2) / prec;
  MatrixXd theta = MatrixXd::Constant(1, 1, 3.0), centre = MatrixXd::Constant(1, 1, c),
           curv = MatrixXd::Constant(1, 1, 1 / s2);
  for (int it = 0; it < 5000; ++it) {
    k.step(theta, centre, curv, tau2, gauss, rng);
    k.adapt();
  }
  k.reset_counts();
  std::vector<double> xs;
  for (int it = 0; it < 200000; ++it) {
    k.step(theta, centre, curv, tau2, gauss, rng);
    if (it % 20 == 0) xs.push_back(theta(0, 0));
  }
  CHECK(ks_pvalue(xs, post_mean, 1 / std::sqrt(prec)) > 0.01);
  CHECK(k.mean_acceptance() > 0.3);
  CHECK(k.mean_acceptance() < 0.6);
}

TEST_CASE("latent MH: Poisson mode, pinning and tuned acceptance") {
  Rng rng(7);
  const double y = 50.0, c = std::log(40.0), tau2 = 0.01;
  const double root = newton_root(y, c, tau2);
  MatrixXd Y = MatrixXd::Constant(1, 1, y), theta = MatrixXd::Constant(1, 1, c),
           centre = MatrixXd::Constant(1, 1, c);
  LatentKernel k(1, 1);
  for (int it = 0; it < 5000; ++it) {
    k.step(theta, centre, Y, tau2, PoissonLogLik{Y}, rng);
    k.adapt();
  }
  k.reset_counts();
  const double sd = 1 / std::sqrt(y + 1 / tau2);
  const double w = sd / 5;
  std::vector<int> hist(200, 0);
  for (int it = 0; it < 200000; ++it) {
    k.step(theta, centre, Y, tau2, PoissonLogLik{Y}, rng);
    const int b = static_cast<int>(std::floor((theta(0, 0) - root) / w)) + 100;
    if (b >= 0 && b < 200) ++hist[static_cast<size_t>(b)];
  }
  const int mode_bin = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  const double mode = root + (mode_bin - 100 + 0.5) * w;
  CHECK(std::abs(mode - root) < 2.5 * w);
  CHECK(k.mean_acceptance() > 0.1);
  CHECK(k.mean_acceptance() < 0.9);

  LatentKernel pin(1, 1);
  theta(0, 0) = c;
  for (int it = 0; it < 200; ++it) pin.step(theta, centre, Y, 1e-10, PoissonLogLik{Y}, rng);
  CHECK(std::abs(theta(0, 0) - c) < 1e-3);
}

TEST_CASE("run_chain: empty chains, determinism, shapes") {
  Rng rng(8);
  const PanelData d = small_panel(2, 2, 8, 1, rng);
  FitOptions opt;
  opt.interaction = InteractionType::T5;
  opt.iterations = 30;
  opt.burn_in = 30;
  opt.seed = 99;
  const auto empty = run_chain(d, d.X, PriorConfig{}, opt);
  CHECK(empty.draws() == 0);
  CHECK(empty.deviance.size() == 0);

  opt.iterations = 60;
  opt.burn_in = 20;
  opt.thin = 3;
  const auto a = run_chain(d, d.X, PriorConfig{}, opt);
  const auto b = run_chain(d, d.X, PriorConfig{}, opt);
  CHECK(a.draws() == 14);
  CHECK(a.temporal1.rows() == 14);
  CHECK(a.star_variances.cols() == 4);
  CHECK(a.scalars == b.scalars);
  CHECK(a.temporal0 == b.temporal0);
  CHECK(a.pvalues == b.pvalues);
  CHECK(a.latent_mean == b.latent_mean);
  CHECK((a.acceptance.array() >= 0).all());
  CHECK((a.acceptance.array() <= 1).all());
  CHECK((a.scalar("tau2").array() > 0).all());
  CHECK(a.scalar("alpha1").size() == 14);

  opt.variant = Variant::NoConfounders;
  const auto nc = run_chain(d, d.X, PriorConfig{}, opt);
  CHECK_THROWS_AS(nc.scalar("alpha1"), Error);

  FitOptions bad = opt;
  bad.thin = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = opt;
  bad.burn_in = 61;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("fit: chains on worker threads are reproducible and distinct") {
  Rng rng(9);
  PanelData d = small_panel(3, 3, 24, 0, rng);
  d.coords = lattice_coordinates(3, 3);
  FitOptions opt;
  opt.interaction = InteractionType::T2;
  opt.iterations = 60;
  opt.burn_in = 30;
  opt.n_chains = 2;
  opt.spatial_df = 3;
  opt.temporal_df = 4;
  const auto r1 = fit_sdglmc(d, PriorConfig{}, opt);
  const auto r2 = fit_sdglmc(d, PriorConfig{}, opt);
  REQUIRE(r1.chains.size() == 2);
  REQUIRE(r1.trend.has_value());
  CHECK(r1.chains[0].scalars == r2.chains[0].scalars);
  CHECK(r1.chains[1].scalars == r2.chains[1].scalars);
  CHECK(r1.chains[0].scalars != r1.chains[1].scalars);
  opt.variant = Variant::SingleStep;
  CHECK_FALSE(fit_sdglmc(d, PriorConfig{}, opt).trend.has_value());
  CHECK_THROWS_AS(variant_regressor(d, FitOptions{}, nullptr), Error);
}

TEST_CASE("no-confounder synthetic data: exposure path recovered") {
  Rng rng(10);
  const Index rows = 4, cols = 4, n = rows * cols, T = 120;
  PanelData d;
  d.graph = make_lattice(rows, cols);
  d.coords = lattice_coordinates(rows, cols);
  d.X = randn(n, T, rng, 4.0);
  d.offset = MatrixXd::Constant(n, T, std::log(100.0));
  VectorXd path(T);
  for (Index t = 0; t < T; ++t) path[t] = 0.005 + 0.003 * std::sin(2 * std::numbers::pi * t / 60.0);
  d.Y.resize(n, T);
  const MatrixXd noise = randn(n, T, rng, 0.03);
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < n; ++i)
      d.Y(i, t) = draw_poisson(std::exp(d.offset(i, t) + path[t] * d.X(i, t) + noise(i, t)), rng);

  FitOptions opt;
  opt.interaction = InteractionType::T1;
  opt.iterations = 3000;
  opt.burn_in = 1500;
  opt.spatial_df = 3;
  opt.temporal_df = 5;
  opt.seed = 2024;
  const auto fit = fit_sdglmc(d, PriorConfig{}, opt);
  const auto& ch = fit.chains[0];
  const VectorXd b1 = ch.scalar("baseline1");
  MatrixXd beta = ch.temporal1;
  beta.colwise() += b1;
  int covered = 0;
  for (Index t = 0; t < T; ++t) {
    const double m = beta.col(t).mean();
    const double sd = std::sqrt((beta.col(t).array() - m).square().mean());
    covered += std::abs(m - path[t]) <= 2 * sd;
  }
  CHECK(covered >= static_cast<int>(0.9 * T));
  CHECK(ch.mean_acceptance() > 0.2);
}

#include "sdglmc/simulator.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "sdglmc/csv.hpp"
#include "sdglmc/error.hpp"
#include "sdglmc/trend_basis.hpp"

namespace sdglmc {

double FourierMean::operator()(double t) const {
  const double w = 2.0 * std::numbers::pi * t / period;
  double v = level;
  for (size_t k = 0; k < sin_amp.size(); ++k) v += sin_amp[k] * std::sin(static_cast<double>(k + 1) * w);
  for (size_t k = 0; k < cos_amp.size(); ++k) v += cos_amp[k] * std::cos(static_cast<double>(k + 1) * w);
  return v;
}

MatrixXd FourierMean::field(Index n, Index T) const {
  MatrixXd out(n, T);
  for (Index t = 0; t < T; ++t) out.col(t).setConstant((*this)(static_cast<double>(t)));
  return out;
}

const char* to_string(EffectKind k) {
  switch (k) {
    case EffectKind::Constant: return "constant";
    case EffectKind::Periodic: return "periodic";
    case EffectKind::Cubic: return "cubic";
  }
  return "?";
}

EffectKind parse_effect(const std::string& s) {
  for (auto k : {EffectKind::Constant, EffectKind::Periodic, EffectKind::Cubic})
    if (s == to_string(k)) return k;
  fail(ErrorCode::InvalidConfig, "unknown effect surface '" + s + "'");
}

void ScenarioConfig::validate() const {
  require(rows >= 1 && cols >= 1 && rows * cols >= 2, ErrorCode::InvalidConfig,
          "lattice needs at least two areas");
  require(T >= 2, ErrorCode::InvalidConfig, "T must be at least 2");
  for (double phi : {phi_x_S, phi_z_S})
    require(phi > 0.0 && phi < 1.0, ErrorCode::PhiOutOfRange, "spatial phi must lie in (0,1)");
  for (double phi : {phi_x_T, phi_z_T})
    require(phi >= 0.0 && phi < 1.0, ErrorCode::PhiOutOfRange, "temporal phi must lie in [0,1)");
  require(rho_xz > -1.0 && rho_xz < 1.0, ErrorCode::InvalidConfig, "rho_xz must lie in (-1,1)");
  require(tau_x2 > 0.0 && tau_z2 > 0.0 && tau_u2 >= 0.0, ErrorCode::InvalidConfig,
          "variances must be positive");
  require(expected > 0.0, ErrorCode::InvalidConfig, "expected counts must be positive");
  require(mean_x.period > 0.0 && mean_z.period > 0.0 && effect.temporal_period > 0.0,
          ErrorCode::InvalidConfig, "periods must be positive");
}

ScenarioConfig scenario_preset(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  c.effect.kind = EffectKind::Periodic;
  if (name == "S1") {
    c.phi_x_S = 0.2, c.phi_z_S = 0.98, c.phi_x_T = 0.2, c.phi_z_T = 0.98;
  } else if (name == "S2") {
    c.phi_x_S = 0.2, c.phi_z_S = 0.98, c.phi_x_T = 0.98, c.phi_z_T = 0.2;
  } else if (name == "S3") {
    c.phi_x_S = 0.98, c.phi_z_S = 0.2, c.phi_x_T = 0.2, c.phi_z_T = 0.98;
  } else {
    fail(ErrorCode::InvalidConfig, "unknown scenario preset '" + name + "'");
  }
  return c;
}

ScenarioConfig desk_scale(ScenarioConfig cfg) {
  cfg.rows = 8;
  cfg.cols = 8;
  cfg.T = 200;
  cfg.tau_x2 = 200.0;
  cfg.effect.temporal_amplitude = 0.005;
  cfg.effect.spatial_amplitude = 0.003;
  cfg.effect.temporal_period = 100.0;
  return cfg;
}

Var1Covariance::Var1Covariance(const SpatialGraph& g, double phi_S, double phi_T, double tau2)
    : phi_S_(phi_S), phi_T_(phi_T), tau2_(tau2) {
  require(phi_T >= 0.0 && phi_T < 1.0, ErrorCode::PhiOutOfRange,
          "temporal phi must lie in [0,1), got " + std::to_string(phi_T));
  require(tau2 > 0.0, ErrorCode::InvalidConfig, "innovation variance must be positive");
  require(!g.edges().empty(), ErrorCode::InvalidConfig, "VAR(1) covariance needs a graph with edges");
  for (Index d : g.degree())
    require(d > 0, ErrorCode::InvalidConfig, "VAR(1) covariance needs every area to have a neighbour");
  const MatrixXd omega = MatrixXd(pcar_precision(g, phi_S).omega);
  const Index n = omega.rows();
  c0_ = tau2 / (1.0 - phi_T * phi_T) * omega.llt().solve(MatrixXd::Identity(n, n));
  c0_ = 0.5 * (c0_ + c0_.transpose());
  Eigen::LLT<MatrixXd> llt(c0_);
  require(llt.info() == Eigen::Success, ErrorCode::CholeskyFailure, "C(0) is not positive definite");
  c0_chol_ = llt.matrixL();
}

MatrixXd Var1Covariance::gamma(Index T) const {
  MatrixXd G(T, T);
  for (Index s = 0; s < T; ++s)
    for (Index t = 0; t < T; ++t) G(s, t) = std::pow(phi_T_, static_cast<double>(std::abs(s - t)));
  return G;
}

MatrixXd Var1Covariance::gamma_chol(Index T) const {
  MatrixXd L = MatrixXd::Zero(T, T);
  const double c = std::sqrt(1.0 - phi_T_ * phi_T_);
  for (Index t = 0; t < T; ++t)
    for (Index s = 0; s <= t; ++s)
      L(t, s) = std::pow(phi_T_, static_cast<double>(t - s)) * (s == 0 ? 1.0 : c);
  return L;
}

MatrixXd Var1Covariance::apply_root(const MatrixXd& E) const {
  require(E.rows() == n(), ErrorCode::DimensionMismatch, "innovation rows differ from graph size");
  MatrixXd out = c0_chol_ * E;
  const double c = std::sqrt(1.0 - phi_T_ * phi_T_);
  for (Index t = 1; t < out.cols(); ++t) out.col(t) = phi_T_ * out.col(t - 1) + c * out.col(t);
  return out;
}

MatrixXd Var1Covariance::dense(Index T) const {
  const MatrixXd G = gamma(T);
  const Index n = this->n();
  MatrixXd out(n * T, n * T);
  for (Index s = 0; s < T; ++s)
    for (Index t = 0; t < T; ++t) out.block(s * n, t * n, n, n) = G(s, t) * c0_;
  return out;
}

namespace {

MatrixXd normal_matrix(Index n, Index T, Rng& rng) {
  MatrixXd E(n, T);
  for (Index k = 0; k < E.size(); ++k) E.data()[k] = std_normal(rng);
  return E;
}

}  // namespace

JointField sample_joint_xz(const ScenarioConfig& cfg, const SpatialGraph& g, Rng& rng) {
  cfg.validate();
  const Var1Covariance cx(g, cfg.phi_x_S, cfg.phi_x_T, cfg.tau_x2);
  const Var1Covariance cz(g, cfg.phi_z_S, cfg.phi_z_T, cfg.tau_z2);
  const Index n = g.size(), T = cfg.T;
  const MatrixXd ex = normal_matrix(n, T, rng);
  const MatrixXd ez = normal_matrix(n, T, rng);
  JointField f;
  f.X = cfg.mean_x.field(n, T) + cx.apply_root(ex);
  f.Z = cfg.mean_z.field(n, T) +
        cz.apply_root(cfg.rho_xz * ex + std::sqrt(1.0 - cfg.rho_xz * cfg.rho_xz) * ez);
  return f;
}

EffectComponents truth_components(const CoefficientField& beta1) {
  const auto pc = [](double b) { return percent_change(b); };
  EffectComponents c;
  c.overall = compose_coefficients(beta1).unaryExpr(pc);
  c.baseline = percent_change(beta1.baseline);
  c.temporal = beta1.temporal.unaryExpr(pc);
  c.spatial = beta1.spatial.unaryExpr(pc);
  return c;
}

CoefficientField true_effect(const EffectSurface& e, const MatrixXd& X, const MatrixXd& coords,
                             MatrixXd* xhat) {
  const Index n = X.rows(), T = X.cols();
  CoefficientField f = CoefficientField::zeros(n, T);
  switch (e.kind) {
    case EffectKind::Constant:
      f.baseline = e.baseline;
      break;
    case EffectKind::Periodic: {
      f.baseline = e.baseline;
      for (Index t = 0; t < T; ++t)
        f.temporal[t] = e.temporal_amplitude *
                        std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / e.temporal_period);
      require(coords.rows() == n && coords.cols() == 2, ErrorCode::DimensionMismatch,
              "coordinates must be n x 2");
      const Eigen::RowVector2d centre = coords.colwise().mean();
      const double extent = (coords.colwise().maxCoeff() - coords.colwise().minCoeff()).maxCoeff();
      const double s = extent > 0 ? 0.3 * extent : 1.0;
      for (Index i = 0; i < n; ++i)
        f.spatial[i] = -e.spatial_amplitude * std::exp(-(coords.row(i) - centre).squaredNorm() / (2 * s * s));
      f.spatial.array() -= f.spatial.mean();
      f.temporal.array() -= f.temporal.mean();
      break;
    }
    case EffectKind::Cubic: {
      const TrendFit tr = fit_space_time_trend(X, coords, e.spatial_df, e.temporal_df);
      f.interaction = (e.g1 + 2.0 * e.g2 * tr.fitted.array() + 3.0 * e.g3 * tr.fitted.array().square()).matrix();
      if (xhat) *xhat = tr.fitted;
      break;
    }
  }
  center(f);
  return f;
}

SimulatedPanel generate_outcome(const MatrixXd& X, const MatrixXd& Z, const ScenarioConfig& cfg,
                                const SpatialGraph& g, const MatrixXd& coords,
                                const MatrixXd& offsets, Rng& rng) {
  const Index n = X.rows(), T = X.cols();
  require(Z.rows() == n && Z.cols() == T && offsets.rows() == n && offsets.cols() == T &&
              g.size() == n,
          ErrorCode::DimensionMismatch, "X, Z, offsets and graph disagree in size");
  SimulatedPanel sim;
  sim.beta1 = true_effect(cfg.effect, X, coords, &sim.xhat);
  sim.beta1_true = compose_coefficients(sim.beta1);
  sim.Z = Z;

  MatrixXd theta = offsets.array() + cfg.beta0;
  if (cfg.effect.kind == EffectKind::Cubic) {
    const auto& e = cfg.effect;
    theta.array() += e.g0 + X.array() * (e.g1 + X.array() * (e.g2 + X.array() * e.g3));
  } else {
    theta += sim.beta1_true.cwiseProduct(X);
  }
  theta += Z;
  const double su = std::sqrt(cfg.tau_u2);
  for (Index k = 0; k < theta.size(); ++k) {
    if (su > 0) theta.data()[k] += su * std_normal(rng);
    require(theta.data()[k] <= 30.0, ErrorCode::OverflowGuard,
            "linear predictor exceeds 30; check the scenario scales");
  }

  PanelData& d = sim.data;
  d.Y.resize(n, T);
  for (Index k = 0; k < theta.size(); ++k) d.Y.data()[k] = draw_poisson(std::exp(theta.data()[k]), rng);
  d.offset = offsets;
  d.X = X;
  d.graph = g;
  d.coords = coords;
  return sim;
}

SimulatedPanel simulate_panel(const ScenarioConfig& cfg, const SpatialGraph& g,
                              const MatrixXd& coords, Rng& rng) {
  JointField f = sample_joint_xz(cfg, g, rng);
  if (!cfg.include_confounder) f.Z.setZero();
  const MatrixXd offsets = MatrixXd::Constant(g.size(), cfg.T, std::log(cfg.expected));
  return generate_outcome(f.X, f.Z, cfg, g, coords, offsets, rng);
}

void write_truth_csv(const std::string& path, const SimulatedPanel& sim) {
  const Index n = sim.Z.rows(), T = sim.Z.cols();
  MatrixXd rows(n * T, 9);
  Index r = 0;
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < T; ++t, ++r) {
      rows.row(r) << static_cast<double>(i), static_cast<double>(t), sim.Z(i, t), sim.beta1_true(i, t),
          sim.beta1.baseline, sim.beta1.spatial[i], sim.beta1.temporal[t], sim.beta1.interaction(i, t),
          sim.xhat.size() ? sim.xhat(i, t) : 0.0;
    }
  write_csv(path, {"unit", "time", "z", "beta1", "baseline", "spatial", "temporal", "interaction", "xhat"},
            rows);
}

void read_truth_csv(const std::string& path, SimulatedPanel& sim) {
  const CsvTable tab = read_csv(path);
  const Index n = sim.data.n(), T = sim.data.T();
  require(static_cast<Index>(tab.rows.size()) == n * T, ErrorCode::DimensionMismatch,
          "truth file " + path + " does not match the panel size");
  const size_t cu = tab.column_index("unit"), ct = tab.column_index("time"),
               cz = tab.column_index("z"), cb = tab.column_index("beta1"),
               c0 = tab.column_index("baseline"), cs = tab.column_index("spatial"),
               cT = tab.column_index("temporal"), ci = tab.column_index("interaction");
  const auto cx = tab.find_column("xhat");
  sim.Z.resize(n, T);
  sim.beta1_true.resize(n, T);
  sim.beta1 = CoefficientField::zeros(n, T);
  MatrixXd xhat(n, T);
  for (const auto& row : tab.rows) {
    const auto i = static_cast<Index>(row[cu]), t = static_cast<Index>(row[ct]);
    require(i >= 0 && i < n && t >= 0 && t < T, ErrorCode::InvalidIndex, "truth row out of range");
    sim.Z(i, t) = row[cz];
    sim.beta1_true(i, t) = row[cb];
    sim.beta1.baseline = row[c0];
    sim.beta1.spatial[i] = row[cs];
    sim.beta1.temporal[t] = row[cT];
    sim.beta1.interaction(i, t) = row[ci];
    xhat(i, t) = cx ? row[*cx] : 0.0;
  }
  sim.xhat = xhat.isZero() ? MatrixXd() : xhat;
}

EffectComponents components_from(const PosteriorDraws& d) {
  return {d.percent_overall_mean, d.percent_baseline_mean, d.percent_temporal_mean,
          d.percent_spatial_mean};
}

EffectComponents components_from(const std::vector<PosteriorDraws>& chains) {
  require(!chains.empty(), ErrorCode::InvalidConfig, "no chains to summarise");
  EffectComponents out = components_from(chains[0]);
  for (size_t c = 1; c < chains.size(); ++c) {
    const EffectComponents e = components_from(chains[c]);
    out.overall += e.overall;
    out.baseline += e.baseline;
    out.temporal += e.temporal;
    out.spatial += e.spatial;
  }
  const double inv = 1.0 / static_cast<double>(chains.size());
  out.overall *= inv;
  out.baseline *= inv;
  out.temporal *= inv;
  out.spatial *= inv;
  return out;
}

EffectComponents components_from(const HierarchicalDraws& d) {
  return {d.percent_overall_mean, d.percent_global_mean, d.percent_temporal_mean,
          d.percent_spatial_mean};
}

ReplicateStore run_replicates(const ScenarioConfig& cfg, const SpatialGraph& g,
                              const MatrixXd& coords, int n_reps,
                              const std::vector<NamedEstimator>& estimators,
                              std::uint64_t master_seed, unsigned workers) {
  cfg.validate();
  require(n_reps >= 0, ErrorCode::InvalidConfig, "replicate count must be non-negative");
  const auto R = static_cast<size_t>(n_reps);
  ReplicateStore store;
  for (const auto& e : estimators) store.names.push_back(e.name);
  store.seeds.resize(R);
  store.truth.resize(R);
  store.estimates.assign(estimators.size(), std::vector<EffectComponents>(R));
  for (size_t r = 0; r < R; ++r) store.seeds[r] = derive_seed(master_seed, r);

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<size_t>(R, 1)));

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto work = [&] {
    for (size_t r = next++; r < R; r = next++) {
      try {
        Rng rng(store.seeds[r]);
        const SimulatedPanel sim = simulate_panel(cfg, g, coords, rng);
        store.truth[r] = truth_components(sim.beta1);
        const std::uint64_t fit_seed = derive_seed(store.seeds[r], 1);
        for (size_t k = 0; k < estimators.size(); ++k)
          store.estimates[k][r] = estimators[k].fit(sim, fit_seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = R;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return store;
}

}  // namespace sdglmc

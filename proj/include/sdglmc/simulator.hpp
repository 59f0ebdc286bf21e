#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sdglmc/competitors.hpp"
#include "sdglmc/model_core.hpp"
#include "sdglmc/random.hpp"
#include "sdglmc/sampler.hpp"
#include "sdglmc/types.hpp"

namespace sdglmc {

/// level + sum_k (sin_k sin(2 pi k t / period) + cos_k cos(2 pi k t / period)),
/// identical across areas.
struct FourierMean {
  double level = 0.0;
  std::vector<double> sin_amp;
  std::vector<double> cos_amp;
  double period = 365.0;

  double operator()(double t) const;
  MatrixXd field(Index n, Index T) const;
};

enum class EffectKind { Constant, Periodic, Cubic };

const char* to_string(EffectKind k);
EffectKind parse_effect(const std::string& s);

/// True exposure effect.
///   Constant: beta1 = baseline.
///   Periodic: baseline + temporal_amplitude sin(2 pi t / temporal_period)
///             + a spatial dip of depth spatial_amplitude at the centre of the map.
///   Cubic:    outcome uses f(X) = g0 + g1 X + g2 X^2 + g3 X^3 and the target
///             slope is f'(Xhat), Xhat the space-time trend of X.
struct EffectSurface {
  EffectKind kind = EffectKind::Constant;
  double baseline = 0.004879016416943205;  // log(1.05) / 10, a 5% change per 10 units
  double temporal_amplitude = 0.003;
  double temporal_period = 365.0;
  double spatial_amplitude = 0.002;
  double g0 = -0.08, g1 = 0.02, g2 = -8e-5, g3 = 5e-8;
  int spatial_df = 3;   // trend used for Xhat in the cubic case
  int temporal_df = 10;
};

struct ScenarioConfig {
  std::string name = "custom";
  Index rows = 9, cols = 13;  // lattice used when no graph is supplied
  Index T = 600;
  double phi_x_S = 0.2, phi_x_T = 0.2, phi_z_S = 0.98, phi_z_T = 0.98;
  double rho_xz = 0.5;
  double tau_x2 = 4e-4, tau_z2 = 1e-3, tau_u2 = 1e-3;
  double beta0 = 0.0;
  double expected = 100.0;  // E_it, offset log(E)
  bool include_confounder = true;
  FourierMean mean_x{18.0, {10.0}, {}, 365.0};
  FourierMean mean_z{0.0, {0.1}, {}, 365.0};
  EffectSurface effect;
  std::uint64_t seed = 1;

  void validate() const;
  SpatialGraph lattice() const { return make_lattice(rows, cols); }
  MatrixXd lattice_coords() const { return lattice_coordinates(rows, cols); }
};

/// S1, S2 or S3 with the full-size settings: 117 areas (9 x 13 lattice), T = 600.
ScenarioConfig scenario_preset(const std::string& name);

/// 8 x 8 lattice, T = 200, a larger exposure innovation variance so that the
/// local exposure variation is not swamped by Poisson noise, and a periodic
/// effect whose cycle fits twice into the window.
ScenarioConfig desk_scale(ScenarioConfig cfg);

/// Covariance of vec(X) for a stationary spatial VAR(1):
/// Gamma_ar (x) C(0), Gamma_ar[s,t] = phi_T^|s-t|, C(0) = tau2 / (1 - phi_T^2) (D - phi_S W)^{-1}.
class Var1Covariance {
 public:
  Var1Covariance(const SpatialGraph& g, double phi_S, double phi_T, double tau2);

  Index n() const { return c0_.rows(); }
  double phi_S() const { return phi_S_; }
  double phi_T() const { return phi_T_; }
  double tau2() const { return tau2_; }

  const MatrixXd& c0() const { return c0_; }
  const MatrixXd& c0_chol() const { return c0_chol_; }
  /// Lower Cholesky factor of the T x T AR(1) correlation matrix.
  MatrixXd gamma_chol(Index T) const;
  MatrixXd gamma(Index T) const;

  /// L_C E L_Gamma' for an n x T matrix E, by the AR(1) recursion.
  MatrixXd apply_root(const MatrixXd& E) const;

  /// Full nT x nT matrix, for small checks only.
  MatrixXd dense(Index T) const;

 private:
  double phi_S_, phi_T_, tau2_;
  MatrixXd c0_, c0_chol_;
};

struct JointField {
  MatrixXd X, Z;  // n x T
};

/// X = mu_x + L_x e, Z = mu_z + L_z (rho e + sqrt(1 - rho^2) e'), so that
/// Cov(X, Z) = rho L_x L_z' and Var(Z | X) = (1 - rho^2) Sigma_z.
JointField sample_joint_xz(const ScenarioConfig& cfg, const SpatialGraph& g, Rng& rng);

struct SimulatedPanel {
  PanelData data;
  MatrixXd Z;
  CoefficientField beta1;  // centred decomposition of beta1_true
  MatrixXd beta1_true;     // n x T
  MatrixXd xhat;           // empty unless the cubic surface is used
};

/// Exposure effect components on the percent-change scale.
struct EffectComponents {
  MatrixXd overall;  // n x T
  double baseline = 0.0;
  VectorXd temporal;  // T
  VectorXd spatial;   // n
};

EffectComponents truth_components(const CoefficientField& beta1);

/// True beta1 surface for a given exposure field.
CoefficientField true_effect(const EffectSurface& e, const MatrixXd& X, const MatrixXd& coords,
                             MatrixXd* xhat = nullptr);

/// theta = o + beta0 + beta1 X (or f(X)) + Z + u, Y ~ Poisson(exp theta).
/// Throws OverflowGuard if any theta exceeds 30.
SimulatedPanel generate_outcome(const MatrixXd& X, const MatrixXd& Z, const ScenarioConfig& cfg,
                                const SpatialGraph& g, const MatrixXd& coords,
                                const MatrixXd& offsets, Rng& rng);

/// sample_joint_xz followed by generate_outcome with offsets log(cfg.expected).
SimulatedPanel simulate_panel(const ScenarioConfig& cfg, const SpatialGraph& g,
                              const MatrixXd& coords, Rng& rng);

/// Truth CSV `unit,time,z,beta1,baseline,spatial,temporal,interaction,xhat`.
void write_truth_csv(const std::string& path, const SimulatedPanel& sim);
/// Reads Z and the beta1 decomposition back into `sim` (n, T from sim.data).
void read_truth_csv(const std::string& path, SimulatedPanel& sim);

EffectComponents components_from(const PosteriorDraws& d);
EffectComponents components_from(const std::vector<PosteriorDraws>& chains);
EffectComponents components_from(const HierarchicalDraws& d);

struct NamedEstimator {
  std::string name;
  std::function<EffectComponents(const SimulatedPanel&, std::uint64_t seed)> fit;
};

struct ReplicateStore {
  std::vector<std::string> names;
  std::vector<std::uint64_t> seeds;
  std::vector<EffectComponents> truth;                  // per replicate
  std::vector<std::vector<EffectComponents>> estimates;  // [estimator][replicate]
};

/// Replicate r simulates with derive_seed(master_seed, r) and passes a second
/// derived seed to every estimator. Replicates run on `workers` threads
/// (0 = hardware concurrency).
ReplicateStore run_replicates(const ScenarioConfig& cfg, const SpatialGraph& g,
                              const MatrixXd& coords, int n_reps,
                              const std::vector<NamedEstimator>& estimators,
                              std::uint64_t master_seed, unsigned workers = 0);

}  // namespace sdglmc

#include "sdglmc/model_core.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sdglmc/csv.hpp"
#include "sdglmc/error.hpp"

namespace sdglmc {

using Triplet = Eigen::Triplet<double>;

void PanelData::validate() const {
  const Index n = Y.rows(), T = Y.cols();
  require(offset.rows() == n && offset.cols() == T && X.rows() == n && X.cols() == T,
          ErrorCode::DimensionMismatch, "Y, offset and X must share dimensions");
  for (const auto& m : M)
    require(m.rows() == n && m.cols() == T, ErrorCode::DimensionMismatch,
            "confounder dimensions differ from Y");
  require(graph.size() == n, ErrorCode::DimensionMismatch,
          "panel has " + std::to_string(n) + " units but graph has " +
              std::to_string(graph.size()));
  if (coords)
    require(coords->rows() == n, ErrorCode::DimensionMismatch, "coordinate rows != units");
  require(Y.allFinite() && (Y.array() >= 0).all() && (Y.array() == Y.array().round()).all(),
          ErrorCode::InvalidConfig, "counts must be non-negative integers");
  require(offset.allFinite(), ErrorCode::InvalidConfig, "offsets must be finite");
  require(X.allFinite(), ErrorCode::InvalidConfig, "exposure must be finite");
}

MatrixXd PanelData::coordinates() const {
  if (coords) return *coords;
  return spectral_coordinates(graph);
}

PanelData slice_time(const PanelData& data, Index begin, Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= data.T(), ErrorCode::InvalidIndex,
          "time window outside the panel");
  PanelData out;
  out.graph = data.graph;
  out.coords = data.coords;
  out.Y = data.Y.middleCols(begin, count);
  out.offset = data.offset.middleCols(begin, count);
  out.X = data.X.middleCols(begin, count);
  for (const auto& m : data.M) out.M.push_back(m.middleCols(begin, count));
  return out;
}

PanelData read_panel_csv(const std::string& path, const SpatialGraph& graph) {
  CsvTable table = read_csv(path);
  const auto col = [&](const std::string& name) { return table.column_index(name); };
  const size_t cu = col("unit"), ct = col("time"), cy = col("y"), co = col("offset"),
               cx = col("x");
  std::vector<size_t> cm;
  for (int k = 1;; ++k) {
    auto idx = table.find_column("m" + std::to_string(k));
    if (!idx) break;
    cm.push_back(*idx);
  }
  Index T = 0;
  for (const auto& row : table.rows) T = std::max<Index>(T, static_cast<Index>(row[ct]) + 1);
  const Index n = graph.size();
  require(static_cast<Index>(table.rows.size()) == n * T, ErrorCode::DimensionMismatch,
          path + ": expected " + std::to_string(n * T) + " rows for n=" + std::to_string(n) +
              ", T=" + std::to_string(T));

  PanelData d;
  d.graph = graph;
  d.Y = MatrixXd::Constant(n, T, std::nan(""));
  d.offset = MatrixXd::Zero(n, T);
  d.X = MatrixXd::Zero(n, T);
  d.M.assign(cm.size(), MatrixXd::Zero(n, T));
  for (const auto& row : table.rows) {
    const auto i = static_cast<Index>(row[cu]);
    const auto t = static_cast<Index>(row[ct]);
    require(i >= 0 && i < n && t >= 0 && t < T && row[cu] == std::floor(row[cu]),
            ErrorCode::InvalidIndex, path + ": unit/time index out of range");
    require(std::isnan(d.Y(i, t)), ErrorCode::InvalidConfig,
            path + ": duplicate (unit,time) " + std::to_string(i) + "," + std::to_string(t));
    d.Y(i, t) = row[cy];
    d.offset(i, t) = row[co];
    d.X(i, t) = row[cx];
    for (size_t k = 0; k < cm.size(); ++k) d.M[k](i, t) = row[cm[k]];
  }
  d.validate();
  return d;
}

void write_panel_csv(const std::string& path, const PanelData& d) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << "unit,time,y,offset,x";
  for (Index k = 0; k < d.p(); ++k) out << ",m" << (k + 1);
  out << '\n' << std::setprecision(17);
  for (Index t = 0; t < d.T(); ++t)
    for (Index i = 0; i < d.n(); ++i) {
      out << i << ',' << t << ',' << static_cast<long long>(d.Y(i, t)) << ',' << d.offset(i, t)
          << ',' << d.X(i, t);
      for (const auto& m : d.M) out << ',' << m(i, t);
      out << '\n';
    }
}

MatrixXd read_coords_csv(const std::string& path, Index n) {
  CsvTable table = read_csv(path);
  const size_t cu = table.column_index("unit"), cx = table.column_index("x"),
               cy = table.column_index("y");
  require(static_cast<Index>(table.rows.size()) == n, ErrorCode::DimensionMismatch,
          path + ": expected one row per unit");
  MatrixXd xy(n, 2);
  for (const auto& row : table.rows) {
    const auto i = static_cast<Index>(row[cu]);
    require(i >= 0 && i < n, ErrorCode::InvalidIndex, path + ": unit out of range");
    xy(i, 0) = row[cx];
    xy(i, 1) = row[cy];
  }
  return xy;
}

void write_coords_csv(const std::string& path, const MatrixXd& coords) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << "unit,x,y\n" << std::setprecision(17);
  for (Index i = 0; i < coords.rows(); ++i)
    out << i << ',' << coords(i, 0) << ',' << coords(i, 1) << '\n';
}

CoefficientField CoefficientField::zeros(Index n, Index T) {
  CoefficientField f;
  f.spatial = VectorXd::Zero(n);
  f.temporal = VectorXd::Zero(T);
  f.interaction = MatrixXd::Zero(n, T);
  return f;
}

MatrixXd compose_coefficients(const CoefficientField& f) {
  const Index n = f.spatial.size(), T = f.temporal.size();
  MatrixXd b(n, T);
  for (Index t = 0; t < T; ++t)
    b.col(t) = (f.baseline + f.temporal[t]) + f.spatial.array();
  if (f.interaction.size() > 0) {
    require(f.interaction.rows() == n && f.interaction.cols() == T,
            ErrorCode::DimensionMismatch, "interaction must be n x T");
    b += f.interaction;
  }
  return b;
}

void center(CoefficientField& f) {
  if (f.interaction.size() > 0) {
    const VectorXd slice = f.interaction.colwise().mean().transpose();  // per t
    const VectorXd area = f.interaction.rowwise().mean();               // per i
    const double grand = slice.mean();
    f.interaction.colwise() -= area;
    f.interaction.rowwise() -= slice.transpose();
    f.interaction.array() += grand;
    f.temporal.array() += slice.array() - grand;
    f.spatial.array() += area.array() - grand;
    f.baseline += grand;
  }
  if (f.temporal.size() > 0) {
    const double m = f.temporal.mean();
    f.temporal.array() -= m;
    f.baseline += m;
  }
  if (f.spatial.size() > 0) {
    const double m = f.spatial.mean();
    f.spatial.array() -= m;
    f.baseline += m;
  }
}

const char* to_string(InteractionType t) {
  switch (t) {
    case InteractionType::T1: return "T1";
    case InteractionType::T2: return "T2";
    case InteractionType::T3: return "T3";
    case InteractionType::T4: return "T4";
    case InteractionType::T5: return "T5";
  }
  return "?";
}

InteractionType parse_interaction(const std::string& s) {
  if (s == "T1") return InteractionType::T1;
  if (s == "T2") return InteractionType::T2;
  if (s == "T3") return InteractionType::T3;
  if (s == "T4") return InteractionType::T4;
  if (s == "T5") return InteractionType::T5;
  fail(ErrorCode::UnsupportedInteraction, "unknown interaction type '" + s + "'");
}

void PriorConfig::validate() const {
  for (const IgParams& p : {w0, d0, star, w1, d1, tau})
    require(p.shape > 0 && p.rate > 0, ErrorCode::InvalidConfig,
            "inverse-gamma shape and rate must be positive");
  require(V_delta0 > 0 && V_delta1 > 0 && V_delta_star > 0 && slab_var > 0,
          ErrorCode::InvalidConfig, "prior variances must be positive");
}

MatrixXd linear_predictor(const PanelData& data, const CoefficientField& beta0,
                          const CoefficientField& beta1, const VectorXd& alpha,
                          const MatrixXd& regressor, const MatrixXd& u) {
  const Index n = data.n(), T = data.T();
  require(regressor.rows() == n && regressor.cols() == T && u.rows() == n && u.cols() == T &&
              beta0.spatial.size() == n && beta0.temporal.size() == T &&
              beta1.spatial.size() == n && beta1.temporal.size() == T &&
              alpha.size() == data.p(),
          ErrorCode::DimensionMismatch, "linear predictor inputs have inconsistent sizes");
  require(beta1.interaction.size() == 0 || beta1.interaction.isZero(0.0),
          ErrorCode::InvalidConfig, "exposure slope carries no interaction term");
  MatrixXd theta = data.offset + compose_coefficients(beta0) +
                   compose_coefficients(beta1).cwiseProduct(regressor) + u;
  for (Index k = 0; k < data.p(); ++k) theta += alpha[k] * data.M[static_cast<size_t>(k)];
  return theta;
}

MatrixXd linear_predictor(const PanelData& data, const CoefficientField& beta0,
                          const CoefficientField& beta1, const VectorXd& alpha,
                          const TrendFit& trend, const MatrixXd& u) {
  return linear_predictor(data, beta0, beta1, alpha, trend.residual, u);
}

double percent_change(double beta, double delta_exposure) {
  return 100.0 * std::expm1(delta_exposure * beta);
}

namespace {

void append_block(std::vector<Triplet>& trip, Index r0, Index c0, const SparseMatrix& b,
                  double scale) {
  for (int k = 0; k < b.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(b, k); it; ++it)
      trip.emplace_back(r0 + it.row(), c0 + it.col(), scale * it.value());
}

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& trip) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix identity(Index n) {
  SparseMatrix I(n, n);
  I.setIdentity();
  return I;
}

// First-difference operator on T stacked blocks of size b: block row 0 is I,
// block row t is -I at t-1 and I at t.
SparseMatrix random_walk_operator(Index T, Index b) {
  std::vector<Triplet> trip;
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < b; ++i) {
      trip.emplace_back(t * b + i, t * b + i, 1.0);
      if (t > 0) trip.emplace_back(t * b + i, (t - 1) * b + i, -1.0);
    }
  return from_triplets(T * b, T * b, trip);
}

void finish(StackedBlock& blk) {
  blk.present = true;
  blk.K = SparseMatrix(blk.H.transpose() * blk.S_inv * blk.H);
  blk.K.prune(0.0);
}

}  // namespace

StackedSystem build_stacked_system(const MatrixXd& regressor, const std::vector<MatrixXd>& M,
                                   const SpatialGraph& graph, InteractionType interaction,
                                   const PriorConfig& priors, const VarianceState& v) {
  const Index n = regressor.rows(), T = regressor.cols();
  const Index p = static_cast<Index>(M.size());
  require(graph.size() == n, ErrorCode::DimensionMismatch, "graph size != regressor rows");
  const SparseMatrix Q = icar_precision(graph).Q;
  StackedSystem sys;

  // gamma1: interaction of the intercept
  if (interaction != InteractionType::T1) {
    StackedBlock& b = sys.blocks[0];
    b.G = identity(n * T);
    std::vector<Triplet> s;
    if (interaction == InteractionType::T3) {
      b.H = identity(n * T);
      for (Index t = 0; t < T; ++t) append_block(s, t * n, t * n, Q, 1.0 / v.star(0));
    } else {
      b.H = random_walk_operator(T, n);
      for (Index i = 0; i < n; ++i) s.emplace_back(i, i, 1.0 / priors.V_delta_star);
      for (Index t = 1; t < T; ++t) {
        if (interaction == InteractionType::T4) {
          append_block(s, t * n, t * n, Q, 1.0 / v.star(0));
        } else {
          for (Index i = 0; i < n; ++i) s.emplace_back(t * n + i, t * n + i, 1.0 / v.star(i));
        }
      }
    }
    b.S_inv = from_triplets(n * T, n * T, s);
    finish(b);
  }

  // gamma2: (delta_0t, delta_1t) interleaved over t
  {
    StackedBlock& b = sys.blocks[1];
    std::vector<Triplet> g, s;
    for (Index t = 0; t < T; ++t)
      for (Index i = 0; i < n; ++i) {
        g.emplace_back(t * n + i, 2 * t, 1.0);
        g.emplace_back(t * n + i, 2 * t + 1, regressor(i, t));
      }
    b.G = from_triplets(n * T, 2 * T, g);
    b.H = random_walk_operator(T, 2);
    s.emplace_back(0, 0, 1.0 / priors.V_delta0);
    s.emplace_back(1, 1, 1.0 / priors.V_delta1);
    for (Index t = 1; t < T; ++t) {
      s.emplace_back(2 * t, 2 * t, 1.0 / v.sigma2_w0);
      s.emplace_back(2 * t + 1, 2 * t + 1, 1.0 / v.sigma2_w1);
    }
    b.S_inv = from_triplets(2 * T, 2 * T, s);
    finish(b);
  }

  // gamma3: spatial effects of intercept and slope
  {
    StackedBlock& b = sys.blocks[2];
    std::vector<Triplet> g, s;
    for (Index t = 0; t < T; ++t)
      for (Index i = 0; i < n; ++i) {
        g.emplace_back(t * n + i, i, 1.0);
        g.emplace_back(t * n + i, n + i, regressor(i, t));
      }
    b.G = from_triplets(n * T, 2 * n, g);
    b.H = identity(2 * n);
    append_block(s, 0, 0, Q, 1.0 / v.sigma2_d0);
    append_block(s, n, n, Q, 1.0 / v.sigma2_d1);
    b.S_inv = from_triplets(2 * n, 2 * n, s);
    finish(b);
  }

  // gamma4: baselines and confounder coefficients
  {
    StackedBlock& b = sys.blocks[3];
    std::vector<Triplet> g;
    for (Index t = 0; t < T; ++t)
      for (Index i = 0; i < n; ++i) {
        const Index r = t * n + i;
        g.emplace_back(r, 0, 1.0);
        g.emplace_back(r, 1, regressor(i, t));
        for (Index k = 0; k < p; ++k) g.emplace_back(r, 2 + k, M[static_cast<size_t>(k)](i, t));
      }
    b.G = from_triplets(n * T, p + 2, g);
    b.H = identity(p + 2);
    b.S_inv = identity(p + 2) * (1.0 / priors.slab_var);
    finish(b);
  }
  return sys;
}

}  // namespace sdglmc

#include "sdglmc/spatial_graph.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sdglmc/error.hpp"

namespace sdglmc {

namespace {

Index count_components(Index n, const std::vector<std::vector<Index>>& nbrs) {
  std::vector<char> seen(static_cast<size_t>(n), 0);
  Index components = 0;
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      Index v = stack.back();
      stack.pop_back();
      for (Index w : nbrs[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  return components;
}

}  // namespace

SpatialGraph build_graph(const std::vector<std::pair<Index, Index>>& edge_list, Index n) {
  require(n >= 0, ErrorCode::InvalidIndex, "negative unit count");
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(edge_list.size());
  for (auto [i, j] : edge_list) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      fail(ErrorCode::InvalidIndex,
           "edge (" + std::to_string(i) + "," + std::to_string(j) + ") outside [0," +
               std::to_string(n) + ")");
    if (i == j) fail(ErrorCode::SelfLoop, "self edge at unit " + std::to_string(i));
    edges.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  SpatialGraph g;
  g.n_ = n;
  g.edges_ = std::move(edges);
  g.degree_.assign(static_cast<size_t>(n), 0);
  g.neighbors_.assign(static_cast<size_t>(n), {});
  for (auto [i, j] : g.edges_) {
    ++g.degree_[i];
    ++g.degree_[j];
    g.neighbors_[i].push_back(j);
    g.neighbors_[j].push_back(i);
  }
  for (auto& nb : g.neighbors_) std::sort(nb.begin(), nb.end());
  g.components_ = count_components(n, g.neighbors_);
  if (n > 0 && g.components_ != 1) {
    std::cerr << "warning: " << to_string(ErrorCode::DisconnectedGraph) << ": graph has "
              << g.components_ << " connected components\n";
  }
  return g;
}

SparseMatrix SpatialGraph::adjacency() const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edges_.size() * 2);
  for (auto [i, j] : edges_) {
    trip.emplace_back(i, j, 1.0);
    trip.emplace_back(j, i, 1.0);
  }
  SparseMatrix w(n_, n_);
  w.setFromTriplets(trip.begin(), trip.end());
  return w;
}

SpatialGraph make_lattice(Index rows, Index cols) {
  require(rows >= 1 && cols >= 1, ErrorCode::InvalidConfig, "lattice needs rows, cols >= 1");
  std::vector<std::pair<Index, Index>> e;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      Index u = r * cols + c;
      if (c + 1 < cols) e.emplace_back(u, u + 1);
      if (r + 1 < rows) e.emplace_back(u, u + cols);
    }
  return build_graph(e, rows * cols);
}

Eigen::MatrixXd lattice_coordinates(Index rows, Index cols) {
  Eigen::MatrixXd xy(rows * cols, 2);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      xy(r * cols + c, 0) = static_cast<double>(c);
      xy(r * cols + c, 1) = static_cast<double>(r);
    }
  return xy;
}

IcarPrecision icar_precision(const SpatialGraph& g) {
  const Index n = g.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.edges().size() * 2 + static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, static_cast<double>(g.degree()[i]));
  for (auto [i, j] : g.edges()) {
    trip.emplace_back(i, j, -1.0);
    trip.emplace_back(j, i, -1.0);
  }
  IcarPrecision out;
  out.Q.resize(n, n);
  out.Q.setFromTriplets(trip.begin(), trip.end());
  out.rank = n - g.components();
  return out;
}

PcarPrecision pcar_precision(const SpatialGraph& g, double phi) {
  if (!(phi > 0.0 && phi < 1.0))
    fail(ErrorCode::PhiOutOfRange, "PCAR phi must lie in (0,1), got " + std::to_string(phi));
  const Index n = g.size();
  std::vector<Eigen::Triplet<double>> trip;
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, static_cast<double>(g.degree()[i]));
  for (auto [i, j] : g.edges()) {
    trip.emplace_back(i, j, -phi);
    trip.emplace_back(j, i, -phi);
  }
  PcarPrecision out;
  out.phi = phi;
  out.omega.resize(n, n);
  out.omega.setFromTriplets(trip.begin(), trip.end());
  return out;
}

double icar_quadratic_form(const SpatialGraph& g, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(x.size() == g.size(), ErrorCode::DimensionMismatch, "quadratic form length");
  double s = 0.0;
  for (auto [i, j] : g.edges()) {
    const double d = x[i] - x[j];
    s += d * d;
  }
  return s;
}

SpatialGraph read_edge_list(const std::string& path, Index n) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open edge list " + path);
  std::vector<std::pair<Index, Index>> e;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    long long i = 0, j = 0;
    if (!(ss >> i)) continue;
    if (!(ss >> j))
      fail(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": expected two indices");
    e.emplace_back(static_cast<Index>(i), static_cast<Index>(j));
  }
  return build_graph(e, n);
}

void write_edge_list(const std::string& path, const SpatialGraph& g) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << "# n=" << g.size() << "\n";
  for (auto [i, j] : g.edges()) out << i << ' ' << j << '\n';
}

Eigen::MatrixXd spectral_coordinates(const SpatialGraph& g) {
  const Index n = g.size();
  Eigen::MatrixXd xy = Eigen::MatrixXd::Zero(n, 2);
  if (n < 3) {
    for (Index i = 0; i < n; ++i) xy(i, 0) = static_cast<double>(i);
    return xy;
  }
  Eigen::MatrixXd q = Eigen::MatrixXd(icar_precision(g).Q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  // eigenvalues ascending; column 0 spans constants on a connected graph
  xy.col(0) = es.eigenvectors().col(1);
  xy.col(1) = es.eigenvectors().col(2);
  return xy;
}

}  // namespace sdglmc

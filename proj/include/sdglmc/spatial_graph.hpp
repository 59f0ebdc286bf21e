#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "sdglmc/types.hpp"

namespace sdglmc {

/// Areal adjacency. Edges are stored once with i < j, sorted.
class SpatialGraph {
 public:
  SpatialGraph() = default;

  Index size() const { return n_; }
  const std::vector<std::pair<Index, Index>>& edges() const { return edges_; }
  const std::vector<Index>& degree() const { return degree_; }
  const std::vector<std::vector<Index>>& neighbors() const { return neighbors_; }
  bool connected() const { return components_ == 1; }
  Index components() const { return components_; }

  /// Binary adjacency W.
  SparseMatrix adjacency() const;

  friend SpatialGraph build_graph(const std::vector<std::pair<Index, Index>>& edge_list,
                                  Index n);

 private:
  Index n_ = 0;
  Index components_ = 0;
  std::vector<std::pair<Index, Index>> edges_;
  std::vector<Index> degree_;
  std::vector<std::vector<Index>> neighbors_;
};

/// Validates and normalizes an undirected edge list. Throws InvalidIndex or
/// SelfLoop; duplicates (including (j,i) after (i,j)) are merged. A graph with
/// more than one connected component is returned with connected() == false and
/// a warning on stderr; ICAR fitting rejects such graphs later.
SpatialGraph build_graph(const std::vector<std::pair<Index, Index>>& edge_list, Index n);

/// Rook-adjacency lattice, unit index = r * cols + c.
SpatialGraph make_lattice(Index rows, Index cols);

/// Centroid coordinates of make_lattice units, (col, row) per unit.
Eigen::MatrixXd lattice_coordinates(Index rows, Index cols);

struct IcarPrecision {
  SparseMatrix Q;  // D - W
  Index rank = 0;
};

/// Q = D - W. Row sums are exactly zero because integer degrees are stored.
IcarPrecision icar_precision(const SpatialGraph& g);

struct PcarPrecision {
  SparseMatrix omega;  // D - phi W
  double phi = 0.0;
};

PcarPrecision pcar_precision(const SpatialGraph& g, double phi);

/// x' (D - W) x evaluated as the sum of squared edge differences.
double icar_quadratic_form(const SpatialGraph& g, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Edge-list text: one "i j" pair per line, '#' starts a comment.
SpatialGraph read_edge_list(const std::string& path, Index n);
void write_edge_list(const std::string& path, const SpatialGraph& g);

/// Smooth 2-d embedding from the two leading non-trivial Laplacian
/// eigenvectors; used when no centroid coordinates are supplied.
Eigen::MatrixXd spectral_coordinates(const SpatialGraph& g);

}  // namespace sdglmc

#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "sdglmc/random.hpp"

namespace sdglmc {

/// Symmetric block-tridiagonal precision over `blocks` time points with
/// square blocks of `size`. Factorized as L L' with L block-bidiagonal, so a
/// joint draw of every time point costs O(blocks * size^3), or O(blocks * size)
/// when all blocks are diagonal (independent per-coordinate tridiagonals).
class BlockTridiagonal {
 public:
  static BlockTridiagonal dense(Index blocks, Index size);
  static BlockTridiagonal diagonal(Index blocks, Index size);

  Index blocks() const { return blocks_; }
  Index block_size() const { return size_; }
  Index dim() const { return blocks_ * size_; }
  bool is_diagonal() const { return diagonal_; }

  // Dense mode: diagonal block t and the sub-diagonal block (t, t-1), t >= 1.
  MatrixXd& diag(Index t) { return dd_[t]; }
  MatrixXd& lower(Index t) { return dl_[t]; }
  // Diagonal mode equivalents.
  VectorXd& diag_vec(Index t) { return vd_[t]; }
  VectorXd& lower_vec(Index t) { return vl_[t]; }

  void set_zero();

  /// Throws CholeskyFailure when the matrix is not positive definite.
  void factorize();

  /// P^{-1} b (requires factorize()).
  VectorXd solve(const VectorXd& b) const;

  /// Draw from N(P^{-1} b, P^{-1}) (requires factorize()).
  VectorXd sample(const VectorXd& b, Rng& rng) const;

  SparseMatrix to_sparse() const;

 private:
  VectorXd forward(const VectorXd& b) const;
  VectorXd backward(const VectorXd& y) const;

  Index blocks_ = 0, size_ = 0;
  bool diagonal_ = false;
  bool factorized_ = false;
  std::vector<MatrixXd> dd_, dl_, Ld_, Cl_;
  std::vector<VectorXd> vd_, vl_, Lv_, Cv_;
};

}  // namespace sdglmc

#include "sdglmc/block_tridiagonal.hpp"

#include <cmath>

#include "sdglmc/error.hpp"

namespace sdglmc {

BlockTridiagonal BlockTridiagonal::dense(Index blocks, Index size) {
  BlockTridiagonal b;
  b.blocks_ = blocks;
  b.size_ = size;
  b.dd_.assign(static_cast<size_t>(blocks), MatrixXd::Zero(size, size));
  b.dl_.assign(static_cast<size_t>(blocks), MatrixXd::Zero(size, size));
  return b;
}

BlockTridiagonal BlockTridiagonal::diagonal(Index blocks, Index size) {
  BlockTridiagonal b;
  b.blocks_ = blocks;
  b.size_ = size;
  b.diagonal_ = true;
  b.vd_.assign(static_cast<size_t>(blocks), VectorXd::Zero(size));
  b.vl_.assign(static_cast<size_t>(blocks), VectorXd::Zero(size));
  return b;
}

void BlockTridiagonal::set_zero() {
  for (auto& m : dd_) m.setZero();
  for (auto& m : dl_) m.setZero();
  for (auto& v : vd_) v.setZero();
  for (auto& v : vl_) v.setZero();
  factorized_ = false;
}

void BlockTridiagonal::factorize() {
  const auto not_pd = [](Index t) {
    fail(ErrorCode::CholeskyFailure,
         "block-tridiagonal precision not positive definite at block " + std::to_string(t));
  };
  if (diagonal_) {
    Lv_.assign(static_cast<size_t>(blocks_), VectorXd());
    Cv_.assign(static_cast<size_t>(blocks_), VectorXd());
    for (Index t = 0; t < blocks_; ++t) {
      VectorXd s = vd_[t];
      if (t > 0) {
        Cv_[t] = vl_[t].cwiseQuotient(Lv_[t - 1]);
        s -= Cv_[t].cwiseAbs2();
      }
      if (!(s.array() > 0.0).all()) not_pd(t);
      Lv_[t] = s.cwiseSqrt();
    }
  } else {
    Ld_.assign(static_cast<size_t>(blocks_), MatrixXd());
    Cl_.assign(static_cast<size_t>(blocks_), MatrixXd());
    for (Index t = 0; t < blocks_; ++t) {
      MatrixXd s = dd_[t];
      if (t > 0) {
        // C_t = B_t L_{t-1}^{-T}
        Cl_[t] = Ld_[t - 1].triangularView<Eigen::Lower>().solve(dl_[t].transpose()).transpose();
        s.noalias() -= Cl_[t] * Cl_[t].transpose();
      }
      Eigen::LLT<MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) not_pd(t);
      Ld_[t] = llt.matrixL();
    }
  }
  factorized_ = true;
}

VectorXd BlockTridiagonal::forward(const VectorXd& b) const {
  VectorXd v(dim());
  for (Index t = 0; t < blocks_; ++t) {
    VectorXd r = b.segment(t * size_, size_);
    if (diagonal_) {
      if (t > 0) r -= Cv_[t].cwiseProduct(v.segment((t - 1) * size_, size_));
      v.segment(t * size_, size_) = r.cwiseQuotient(Lv_[t]);
    } else {
      if (t > 0) r.noalias() -= Cl_[t] * v.segment((t - 1) * size_, size_);
      v.segment(t * size_, size_) = Ld_[t].triangularView<Eigen::Lower>().solve(r);
    }
  }
  return v;
}

VectorXd BlockTridiagonal::backward(const VectorXd& y) const {
  VectorXd x(dim());
  for (Index t = blocks_ - 1; t >= 0; --t) {
    VectorXd r = y.segment(t * size_, size_);
    if (diagonal_) {
      if (t + 1 < blocks_) r -= Cv_[t + 1].cwiseProduct(x.segment((t + 1) * size_, size_));
      x.segment(t * size_, size_) = r.cwiseQuotient(Lv_[t]);
    } else {
      if (t + 1 < blocks_) r.noalias() -= Cl_[t + 1].transpose() * x.segment((t + 1) * size_, size_);
      x.segment(t * size_, size_) =
          Ld_[t].triangularView<Eigen::Lower>().transpose().solve(r);
    }
  }
  return x;
}

VectorXd BlockTridiagonal::solve(const VectorXd& b) const {
  require(factorized_, ErrorCode::InvalidConfig, "solve() before factorize()");
  require(b.size() == dim(), ErrorCode::DimensionMismatch, "right-hand side length");
  return backward(forward(b));
}

VectorXd BlockTridiagonal::sample(const VectorXd& b, Rng& rng) const {
  require(factorized_, ErrorCode::InvalidConfig, "sample() before factorize()");
  require(b.size() == dim(), ErrorCode::DimensionMismatch, "right-hand side length");
  // L' x = L^{-1} b + z gives mean P^{-1} b and covariance (L L')^{-1}
  return backward(forward(b) + std_normal_vector(dim(), rng));
}

SparseMatrix BlockTridiagonal::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trip;
  for (Index t = 0; t < blocks_; ++t) {
    const Index o = t * size_;
    for (Index r = 0; r < size_; ++r) {
      if (diagonal_) {
        trip.emplace_back(o + r, o + r, vd_[t][r]);
        if (t > 0 && vl_[t][r] != 0.0) {
          trip.emplace_back(o + r, o - size_ + r, vl_[t][r]);
          trip.emplace_back(o - size_ + r, o + r, vl_[t][r]);
        }
        continue;
      }
      for (Index c = 0; c < size_; ++c) {
        if (dd_[t](r, c) != 0.0) trip.emplace_back(o + r, o + c, dd_[t](r, c));
        if (t > 0 && dl_[t](r, c) != 0.0) {
          trip.emplace_back(o + r, o - size_ + c, dl_[t](r, c));
          trip.emplace_back(o - size_ + c, o + r, dl_[t](r, c));
        }
      }
    }
  }
  SparseMatrix m(dim(), dim());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace sdglmc

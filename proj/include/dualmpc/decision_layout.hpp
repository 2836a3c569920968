#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dualmpc/prediction.hpp"

namespace dualmpc {

/// Index map of the core decision vector: h, the free blocks of M (k >= 1, l < k),
/// the diagonal blocks K_k (k >= 1), then (lam, nu) for every (step 1..N, obstacle, mode).
/// M row block 0 and K_0 never influence anything and are not variables.
class DecisionLayout {
 public:
  DecisionLayout() = default;
  DecisionLayout(const StackedSystem& stk, const AgentModel& agent, const std::vector<ObstacleModel>& obstacles);

  int N() const { return N_; }
  int size() const { return size_; }
  int policy_size() const { return dual0_; }

  int h(int k, int r) const { return h0_ + k * nu_ + r; }
  int M(int k, int l, int r, int c) const { return M0_ + ((k * (k - 1) / 2 + l) * nu_ + r) * nx_ + c; }
  int K(int k, int r, int c) const { return K0_ + ((k - 1) * nu_ + r) * nobs_ + c; }

  int num_obstacles() const { return static_cast<int>(modes_.size()); }
  int num_modes(int i) const { return modes_[i]; }
  int lam_dim() const { return lam_dim_; }
  int nu_dim(int i) const { return nu_dim_[i]; }
  /// Dual block index for step k in 1..N.
  int block(int k, int i, int m) const { return (k - 1) * modes_total_ + mode_off_[i] + m; }
  int num_blocks() const { return N_ * modes_total_; }
  int lam(int k, int i, int m) const { return lam_start_[block(k, i, m)]; }
  int nu(int k, int i, int m) const { return nu_start_[block(k, i, m)]; }

  PolicyParams unpack_policy(const Eigen::VectorXd& x) const;
  /// Writes theta into x (entries of M/K that are not variables are ignored).
  void pack_policy(const PolicyParams& theta, Eigen::VectorXd& x) const;

 private:
  int N_ = 0, nx_ = 0, nu_ = 0, nobs_ = 0;
  int h0_ = 0, M0_ = 0, K0_ = 0, dual0_ = 0, size_ = 0;
  int lam_dim_ = 0;
  std::vector<int> nu_dim_;
  std::vector<int> modes_;
  std::vector<int> mode_off_;
  int modes_total_ = 0;
  std::vector<int> lam_start_, nu_start_;
};

}  // namespace dualmpc

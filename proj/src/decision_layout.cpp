#include "dualmpc/decision_layout.hpp"

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::VectorXd;

DecisionLayout::DecisionLayout(const StackedSystem& stk, const AgentModel& agent,
                               const std::vector<ObstacleModel>& obstacles)
    : N_(stk.N), nx_(stk.nx), nu_(stk.nu), nobs_(stk.obs_state_total()) {
  if (static_cast<int>(obstacles.size()) != stk.num_obstacles())
    throw ValidationError("DecisionLayout: obstacle list differs from the stacked system");
  h0_ = 0;
  M0_ = h0_ + N_ * nu_;
  K0_ = M0_ + (N_ * (N_ - 1) / 2) * nu_ * nx_;
  dual0_ = K0_ + (N_ - 1) * nu_ * nobs_;
  lam_dim_ = agent.shape.rows();
  for (const auto& ob : obstacles) {
    mode_off_.push_back(modes_total_);
    modes_.push_back(static_cast<int>(ob.modes.size()));
    nu_dim_.push_back(ob.shape.rows());
    modes_total_ += static_cast<int>(ob.modes.size());
  }
  int next = dual0_;
  for (int k = 1; k <= N_; ++k)
    for (int i = 0; i < num_obstacles(); ++i)
      for (int m = 0; m < modes_[i]; ++m) {
        lam_start_.push_back(next);
        next += lam_dim_;
        nu_start_.push_back(next);
        next += nu_dim_[i];
      }
  size_ = next;
}

PolicyParams DecisionLayout::unpack_policy(const VectorXd& x) const {
  if (x.size() < size_) throw ValidationError("unpack_policy: decision vector too short");
  PolicyParams th = PolicyParams::zeros(N_, nu_, nx_, nobs_);
  for (int k = 0; k < N_; ++k)
    for (int r = 0; r < nu_; ++r) th.h(k * nu_ + r) = x(h(k, r));
  for (int k = 1; k < N_; ++k) {
    for (int l = 0; l < k; ++l)
      for (int r = 0; r < nu_; ++r)
        for (int c = 0; c < nx_; ++c) th.M(k * nu_ + r, l * nx_ + c) = x(M(k, l, r, c));
    for (int r = 0; r < nu_; ++r)
      for (int c = 0; c < nobs_; ++c) th.K(k * nu_ + r, k * nobs_ + c) = x(K(k, r, c));
  }
  return th;
}

void DecisionLayout::pack_policy(const PolicyParams& th, VectorXd& x) const {
  if (x.size() < size_) x.conservativeResize(size_);
  for (int k = 0; k < N_; ++k)
    for (int r = 0; r < nu_; ++r) x(h(k, r)) = th.h(k * nu_ + r);
  for (int k = 1; k < N_; ++k) {
    for (int l = 0; l < k; ++l)
      for (int r = 0; r < nu_; ++r)
        for (int c = 0; c < nx_; ++c) x(M(k, l, r, c)) = th.M(k * nu_ + r, l * nx_ + c);
    for (int r = 0; r < nu_; ++r)
      for (int c = 0; c < nobs_; ++c) x(K(k, r, c)) = th.K(k * nu_ + r, k * nobs_ + c);
  }
}

}  // namespace dualmpc

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dualmpc/geometry.hpp"

namespace dualmpc {

/// x_{k+1} = A_k x_k + B_k u_k + E_k w_k,  position C x_k + c_k,  orientation R_k.
struct AgentModel {
  std::vector<Eigen::MatrixXd> A;  // N
  std::vector<Eigen::MatrixXd> B;  // N
  std::vector<Eigen::MatrixXd> E;  // N
  Eigen::MatrixXd C;
  std::vector<Eigen::VectorXd> c;  // N+1
  std::vector<Eigen::MatrixXd> R;  // N+1
  ConeSet shape;

  int nx() const { return static_cast<int>(C.cols()); }
  int nu() const { return A.empty() ? 0 : static_cast<int>(B.front().cols()); }
  int pos_dim() const { return static_cast<int>(C.rows()); }
  int horizon() const { return static_cast<int>(A.size()); }
  void validate() const;
};

/// o_{k+1} = T_k o_k + q_k + F_k n_k,  position C o_k + c,  orientation R_k.
struct ObstacleMode {
  std::vector<Eigen::MatrixXd> T;  // N
  std::vector<Eigen::VectorXd> q;  // N
  std::vector<Eigen::MatrixXd> F;  // N
  Eigen::MatrixXd C;
  Eigen::VectorXd c;
  std::vector<Eigen::MatrixXd> R;  // N+1
  double weight = 1.0;

  int no() const { return static_cast<int>(C.cols()); }
  int horizon() const { return static_cast<int>(T.size()); }
};

struct ObstacleModel {
  std::vector<ObstacleMode> modes;
  ConeSet shape;

  int no() const { return modes.empty() ? 0 : modes.front().no(); }
  void validate(int horizon, int pos_dim) const;
};

/// u = h + M w + K D n with M strictly block lower triangular and K block diagonal.
/// D n stacks the obstacle deviations o_k - obar_k of all obstacles at steps 0..N-1.
struct PolicyParams {
  Eigen::VectorXd h;  // N nu
  Eigen::MatrixXd M;  // N nu x N nx
  Eigen::MatrixXd K;  // N nu x N sum(no)

  static PolicyParams zeros(int N, int nu, int nx, int n_obs_state);
  /// Throws ValidationError if the causality structure is violated.
  void validate(int N, int nu, int nx, int n_obs_state) const;
};

struct ObstacleStack {
  Eigen::MatrixXd T;  // (N+1)no x no
  Eigen::VectorXd q;  // (N+1)no
  Eigen::MatrixXd F;  // (N+1)no x N no
};

struct StackedSystem {
  int N = 0;
  int nx = 0;
  int nu = 0;
  std::vector<int> no;  // per obstacle

  Eigen::MatrixXd A;  // (N+1)nx x nx
  Eigen::MatrixXd B;  // (N+1)nx x N nu
  Eigen::MatrixXd E;  // (N+1)nx x N nx
  std::vector<std::vector<ObstacleStack>> obs;  // [obstacle][mode]

  int num_obstacles() const { return static_cast<int>(no.size()); }
  int obs_state_total() const;
  int nw() const { return N * nx; }
  int nn() const { return N * obs_state_total(); }
  int nv_step() const { return nx + obs_state_total(); }
  /// Offset of obstacle i's noise stack inside n.
  int n_offset(int i) const;
  /// Offset of obstacle i inside the per-step obstacle stack (the K column blocks).
  int obs_offset(int i) const;

  // Selectors as row offsets into the stacks.
  int sx(int k) const { return k * nx; }
  int su(int k) const { return k * nu; }
  int so(int i, int k) const { return k * no[i]; }

  /// Index into (w; n) of every entry of the interleaved v = (v_0..v_{N-1}),
  /// v_k = (w_k, n_{1,k}, ..., n_{M,k}).
  std::vector<int> perm;
  /// Dense P with (w; n) = P v.
  Eigen::MatrixXd P() const;

  /// Maps n to the stacked obstacle deviations at steps 0..N-1 (the D of u = h + M w + K D n).
  /// mode_choice selects F per obstacle.
  Eigen::MatrixXd deviation_map(const std::vector<int>& mode_choice) const;
};

StackedSystem build_stacked(const AgentModel& agent, const std::vector<ObstacleModel>& obstacles);

struct Rollout {
  Eigen::VectorXd x;               // (N+1)nx
  Eigen::VectorXd u;               // N nu
  std::vector<Eigen::VectorXd> o;  // per obstacle, (N+1)no
};

Rollout rollout_closed_loop(const StackedSystem& stk, const PolicyParams& theta, const Eigen::VectorXd& x0,
                            const std::vector<Eigen::VectorXd>& o0, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& n, const std::vector<int>& mode_choice);

Eigen::VectorXd nominal_obstacle_trajectory(const ObstacleMode& mode, const Eigen::VectorXd& o0, int N);

}  // namespace dualmpc

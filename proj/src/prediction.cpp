#include "dualmpc/prediction.hpp"

#include <string>

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool is_rotation(const MatrixXd& R, int n) {
  return R.rows() == n && R.cols() == n &&
         (R.transpose() * R - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-9 &&
         std::abs(R.determinant() - 1.0) <= 1e-9;
}

}  // namespace

void AgentModel::validate() const {
  const int N = horizon();
  require(N >= 1, "agent: horizon must be >= 1");
  require(static_cast<int>(B.size()) == N && static_cast<int>(E.size()) == N, "agent: A, B, E lengths differ");
  require(static_cast<int>(c.size()) == N + 1 && static_cast<int>(R.size()) == N + 1,
          "agent: c and R need N+1 entries");
  const int n = nx(), m = nu(), p = pos_dim();
  require(n >= 1 && m >= 1, "agent: empty state or input");
  for (int k = 0; k < N; ++k) {
    require(A[k].rows() == n && A[k].cols() == n, "agent: A_" + std::to_string(k) + " has wrong size");
    require(B[k].rows() == n && B[k].cols() == m, "agent: B_" + std::to_string(k) + " has wrong size");
    require(E[k].rows() == n && E[k].cols() == n, "agent: E_" + std::to_string(k) + " has wrong size");
  }
  for (int k = 0; k <= N; ++k) {
    require(c[k].size() == p, "agent: offset c_" + std::to_string(k) + " has wrong size");
    require(is_rotation(R[k], p), "agent: R_" + std::to_string(k) + " is not a rotation");
  }
  require(shape.dim() == p, "agent: shape dimension differs from position dimension");
}

void ObstacleModel::validate(int N, int pos_dim) const {
  require(!modes.empty(), "obstacle: mode list is empty");
  require(shape.dim() == pos_dim, "obstacle: shape dimension differs from position dimension");
  const int n = no();
  for (const auto& m : modes) {
    require(m.no() == n, "obstacle: modes disagree on state dimension");
    require(m.horizon() == N && static_cast<int>(m.q.size()) == N && static_cast<int>(m.F.size()) == N,
            "obstacle: T, q, F need N entries");
    require(static_cast<int>(m.R.size()) == N + 1, "obstacle: R needs N+1 entries");
    require(m.C.rows() == pos_dim && m.c.size() == pos_dim, "obstacle: position map has wrong size");
    for (int k = 0; k < N; ++k) {
      require(m.T[k].rows() == n && m.T[k].cols() == n, "obstacle: T has wrong size");
      require(m.q[k].size() == n, "obstacle: q has wrong size");
      require(m.F[k].rows() == n && m.F[k].cols() == n, "obstacle: F has wrong size");
    }
    for (int k = 0; k <= N; ++k) require(is_rotation(m.R[k], pos_dim), "obstacle: R is not a rotation");
  }
}

PolicyParams PolicyParams::zeros(int N, int nu, int nx, int n_obs_state) {
  return {VectorXd::Zero(N * nu), MatrixXd::Zero(N * nu, N * nx), MatrixXd::Zero(N * nu, N * n_obs_state)};
}

void PolicyParams::validate(int N, int nu, int nx, int n_obs_state) const {
  require(h.size() == N * nu, "policy: h has wrong size");
  require(M.rows() == N * nu && M.cols() == N * nx, "policy: M has wrong size");
  require(K.rows() == N * nu && K.cols() == N * n_obs_state, "policy: K has wrong size");
  for (int k = 0; k < N; ++k) {
    for (int l = k; l < N; ++l)
      require(M.block(k * nu, l * nx, nu, nx).cwiseAbs().maxCoeff() == 0.0,
              "policy: M is not strictly block lower triangular");
    for (int l = 0; l < N && n_obs_state > 0; ++l)
      if (l != k)
        require(K.block(k * nu, l * n_obs_state, nu, n_obs_state).cwiseAbs().maxCoeff() == 0.0,
                "policy: K is not block diagonal");
  }
}

int StackedSystem::obs_state_total() const {
  int t = 0;
  for (int v : no) t += v;
  return t;
}

int StackedSystem::n_offset(int i) const {
  int off = 0;
  for (int j = 0; j < i; ++j) off += N * no[j];
  return off;
}

int StackedSystem::obs_offset(int i) const {
  int off = 0;
  for (int j = 0; j < i; ++j) off += no[j];
  return off;
}

MatrixXd StackedSystem::P() const {
  const int dim = nw() + nn();
  MatrixXd out = MatrixXd::Zero(dim, dim);
  for (int v = 0; v < dim; ++v) out(perm[v], v) = 1.0;
  return out;
}

MatrixXd StackedSystem::deviation_map(const std::vector<int>& mode_choice) const {
  require(static_cast<int>(mode_choice.size()) == num_obstacles(), "deviation_map: one mode per obstacle");
  const int tot = obs_state_total();
  MatrixXd D = MatrixXd::Zero(N * tot, nn());
  for (int i = 0; i < num_obstacles(); ++i) {
    const auto& F = obs[i].at(mode_choice[i]).F;
    for (int k = 0; k < N; ++k)
      D.block(k * tot + obs_offset(i), n_offset(i), no[i], N * no[i]) = F.block(k * no[i], 0, no[i], N * no[i]);
  }
  return D;
}

namespace {

// Stacks x_{k+1} = A_k x_k + (inputs): returns free-response and per-input transfer.
void stack_dynamics(const std::vector<MatrixXd>& A, const std::vector<MatrixXd>& B, MatrixXd& Astk,
                    MatrixXd& Bstk) {
  const int N = static_cast<int>(A.size());
  const int n = static_cast<int>(A.front().rows());
  const int m = static_cast<int>(B.front().cols());
  Astk = MatrixXd::Zero((N + 1) * n, n);
  Bstk = MatrixXd::Zero((N + 1) * n, N * m);
  Astk.topRows(n).setIdentity();
  for (int k = 0; k < N; ++k) {
    Astk.block((k + 1) * n, 0, n, n) = A[k] * Astk.block(k * n, 0, n, n);
    Bstk.block((k + 1) * n, 0, n, k * m) = A[k] * Bstk.block(k * n, 0, n, k * m);
    Bstk.block((k + 1) * n, k * m, n, m) = B[k];
  }
}

}  // namespace

StackedSystem build_stacked(const AgentModel& agent, const std::vector<ObstacleModel>& obstacles) {
  agent.validate();
  StackedSystem s;
  s.N = agent.horizon();
  s.nx = agent.nx();
  s.nu = agent.nu();
  stack_dynamics(agent.A, agent.B, s.A, s.B);
  MatrixXd dummy;
  stack_dynamics(agent.A, agent.E, dummy, s.E);

  for (const auto& ob : obstacles) {
    ob.validate(s.N, agent.pos_dim());
    s.no.push_back(ob.no());
    std::vector<ObstacleStack> per_mode;
    for (const auto& md : ob.modes) {
      ObstacleStack os;
      stack_dynamics(md.T, md.F, os.T, os.F);
      const int n = md.no();
      os.q = VectorXd::Zero((s.N + 1) * n);
      for (int k = 0; k < s.N; ++k) os.q.segment((k + 1) * n, n) = md.T[k] * os.q.segment(k * n, n) + md.q[k];
      per_mode.push_back(std::move(os));
    }
    s.obs.push_back(std::move(per_mode));
  }

  const int nvs = s.nv_step();
  s.perm.resize(s.N * nvs);
  for (int k = 0; k < s.N; ++k) {
    for (int j = 0; j < s.nx; ++j) s.perm[k * nvs + j] = k * s.nx + j;
    for (int i = 0; i < s.num_obstacles(); ++i)
      for (int j = 0; j < s.no[i]; ++j)
        s.perm[k * nvs + s.nx + s.obs_offset(i) + j] = s.nw() + s.n_offset(i) + k * s.no[i] + j;
  }
  return s;
}

Rollout rollout_closed_loop(const StackedSystem& stk, const PolicyParams& theta, const VectorXd& x0,
                            const std::vector<VectorXd>& o0, const VectorXd& w, const VectorXd& n,
                            const std::vector<int>& mode_choice) {
  require(x0.size() == stk.nx, "rollout: x0 has wrong size");
  require(static_cast<int>(o0.size()) == stk.num_obstacles(), "rollout: one initial state per obstacle");
  require(w.size() == stk.nw() && n.size() == stk.nn(), "rollout: noise has wrong size");
  theta.validate(stk.N, stk.nu, stk.nx, stk.obs_state_total());
  Rollout r;
  r.u = theta.h + theta.M * w;
  if (stk.num_obstacles() > 0) r.u += theta.K * (stk.deviation_map(mode_choice) * n);
  r.x = stk.A * x0 + stk.B * r.u + stk.E * w;
  for (int i = 0; i < stk.num_obstacles(); ++i) {
    require(o0[i].size() == stk.no[i], "rollout: obstacle initial state has wrong size");
    const auto& os = stk.obs[i].at(mode_choice[i]);
    r.o.push_back(os.T * o0[i] + os.q + os.F * n.segment(stk.n_offset(i), stk.N * stk.no[i]));
  }
  return r;
}

VectorXd nominal_obstacle_trajectory(const ObstacleMode& mode, const VectorXd& o0, int N) {
  require(mode.horizon() >= N && static_cast<int>(mode.q.size()) >= N, "nominal trajectory: horizon too long");
  require(o0.size() == mode.no(), "nominal trajectory: o0 has wrong size");
  const int n = mode.no();
  VectorXd out((N + 1) * n);
  out.head(n) = o0;
  for (int k = 0; k < N; ++k) out.segment((k + 1) * n, n) = mode.T[k] * out.segment(k * n, n) + mode.q[k];
  return out;
}

}  // namespace dualmpc

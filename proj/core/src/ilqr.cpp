#include "swarm/ilqr.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

#include "swarm/error.hpp"

namespace swarm::ilqr {

QuadraticCost::QuadraticCost(MatrixXd Q, MatrixXd R, MatrixXd Qf,
                             std::vector<VectorXd> reference)
    : Q_(std::move(Q)), R_(std::move(R)), Qf_(std::move(Qf)),
      reference_(std::move(reference)) {}

VectorXd QuadraticCost::offset(int k, const VectorXd& x) const {
  if (reference_.empty()) return x;
  return x - reference_.at(static_cast<std::size_t>(k));
}

double QuadraticCost::running(int k, const VectorXd& x, const VectorXd& u) const {
  const VectorXd dx = offset(k, x);
  return dx.dot(Q_ * dx) + u.dot(R_ * u);
}

double QuadraticCost::terminal(const VectorXd& x) const {
  const int N = reference_.empty() ? 0 : static_cast<int>(reference_.size()) - 1;
  const VectorXd dx = offset(N, x);
  return dx.dot(Qf_ * dx);
}

StageDerivatives QuadraticCost::running_derivatives(int k, const VectorXd& x,
                                                    const VectorXd& u) const {
  const VectorXd dx = offset(k, x);
  StageDerivatives d;
  d.l_xx = Q_ + Q_.transpose();
  d.l_uu = R_ + R_.transpose();
  d.l_x = d.l_xx * dx;
  d.l_u = d.l_uu * u;
  d.l_ux = MatrixXd::Zero(R_.rows(), Q_.rows());
  return d;
}

StageDerivatives QuadraticCost::terminal_derivatives(const VectorXd& x) const {
  const int N = reference_.empty() ? 0 : static_cast<int>(reference_.size()) - 1;
  const VectorXd dx = offset(N, x);
  StageDerivatives d;
  d.l_xx = Qf_ + Qf_.transpose();
  d.l_x = d.l_xx * dx;
  return d;
}

RfsCostModel::RfsCostModel(std::vector<rfs::StageCost> stages, bool project_hessian)
    : stages_(std::move(stages)), project_hessian_(project_hessian) {
  if (stages_.empty()) {
    fail(ErrorCode::kDimensionMismatch, "RFS cost needs at least a terminal stage");
  }
}

double RfsCostModel::running(int k, const VectorXd& x, const VectorXd& u) const {
  return stage(k).value(x, u);
}

double RfsCostModel::terminal(const VectorXd& x) const {
  return stages_.back().value(x, VectorXd());
}

StageDerivatives RfsCostModel::running_derivatives(int k, const VectorXd& x,
                                                   const VectorXd& u) const {
  auto d = stage(k).derivatives(x, u, project_hessian_);
  return {std::move(d.l_x), std::move(d.l_u),
          project_hessian_ ? std::move(d.l_xx_psd) : std::move(d.l_xx),
          std::move(d.l_uu), std::move(d.l_ux)};
}

StageDerivatives RfsCostModel::terminal_derivatives(const VectorXd& x) const {
  auto d = stages_.back().derivatives(x, VectorXd(), project_hessian_);
  StageDerivatives out;
  out.l_x = std::move(d.l_x);
  out.l_xx = project_hessian_ ? std::move(d.l_xx_psd) : std::move(d.l_xx);
  return out;
}

double trajectory_cost(const std::vector<VectorXd>& states,
                       const std::vector<VectorXd>& controls,
                       const CostModel& cost) {
  double J = 0.0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    J += cost.running(static_cast<int>(k), states[k], controls[k]);
  }
  return J + cost.terminal(states.back());
}

Trajectory rollout(const VectorXd& x0, const std::vector<VectorXd>& controls,
                   const dynamics::SwarmPlant& plant, const CostModel& cost) {
  if (x0.size() != plant.state_dim()) {
    fail(ErrorCode::kDimensionMismatch, "x0 does not match the plant");
  }
  Trajectory t;
  t.controls = controls;
  t.states.reserve(controls.size() + 1);
  t.states.push_back(x0);
  for (const auto& u : controls) {
    if (u.size() != plant.control_dim() || !u.allFinite()) {
      fail(ErrorCode::kNonFinite, "control sequence must be finite and sized");
    }
    t.states.push_back(plant.A * t.states.back() + plant.B * u);
  }
  t.cost = trajectory_cost(t.states, t.controls, cost);
  return t;
}

namespace {

bool try_backward(const Trajectory& traj, const dynamics::SwarmPlant& plant,
                  const CostModel& cost, double reg, GainSchedule& out) {
  const int N = traj.horizon();
  const MatrixXd& A = plant.A;
  const MatrixXd& B = plant.B;

  out.K.assign(static_cast<std::size_t>(N), MatrixXd());
  out.k.assign(static_cast<std::size_t>(N), VectorXd());
  out.dV.assign(static_cast<std::size_t>(N), 0.0);
  out.expected_decrease = 0.0;
  out.reg = reg;

  const StageDerivatives term = cost.terminal_derivatives(traj.states.back());
  VectorXd Vx = term.l_x;
  MatrixXd Vxx = term.l_xx;

  for (int k = N - 1; k >= 0; --k) {
    const auto idx = static_cast<std::size_t>(k);
    const StageDerivatives d = cost.running_derivatives(k, traj.states[idx], traj.controls[idx]);
    const VectorXd Qx = d.l_x + A.transpose() * Vx;
    const VectorXd Qu = d.l_u + B.transpose() * Vx;
    const MatrixXd VxxA = Vxx * A;
    const MatrixXd Qxx = d.l_xx + A.transpose() * VxxA;
    const MatrixXd Quu = d.l_uu + B.transpose() * Vxx * B;
    const MatrixXd Qux = d.l_ux + B.transpose() * VxxA;

    MatrixXd Quu_reg = 0.5 * (Quu + Quu.transpose());
    Quu_reg.diagonal().array() += reg;
    Eigen::LLT<MatrixXd> llt(Quu_reg);
    if (llt.info() != Eigen::Success) return false;

    MatrixXd K = -llt.solve(Qux);
    VectorXd kff = -llt.solve(Qu);
    if (!K.allFinite() || !kff.allFinite()) return false;

    // With reg = 0 these reduce to V_x = Q_x - KᵀQ_uu k, V_xx = Q_xx - KᵀQ_uu K.
    Vx = Qx + K.transpose() * (Quu * kff) + K.transpose() * Qu + Qux.transpose() * kff;
    Vxx = Qxx + K.transpose() * Quu * K + K.transpose() * Qux + Qux.transpose() * K;
    Vxx = 0.5 * (Vxx + Vxx.transpose());

    out.dV[idx] = -0.5 * kff.dot(Quu * kff);
    out.expected_decrease += kff.dot(Qu) + 0.5 * kff.dot(Quu * kff);
    out.K[idx] = std::move(K);
    out.k[idx] = std::move(kff);
  }
  return true;
}

}  // namespace

GainSchedule backward_pass(const Trajectory& traj,
                           const dynamics::SwarmPlant& plant,
                           const CostModel& cost, double reg,
                           const Options& opts) {
  if (reg < 0.0) fail(ErrorCode::kNonPositiveInput, "regularization must be >= 0");
  if (static_cast<int>(traj.states.size()) != traj.horizon() + 1) {
    fail(ErrorCode::kDimensionMismatch, "trajectory needs N+1 states for N controls");
  }
  GainSchedule gains;
  double r = reg;
  for (int attempt = 0; attempt <= opts.max_reg_escalations; ++attempt) {
    if (try_backward(traj, plant, cost, r, gains)) return gains;
    r = r > 0.0 ? 10.0 * r : opts.reg_first;
  }
  std::ostringstream os;
  os << "Q_uu not positive definite after " << opts.max_reg_escalations
     << " escalations (last shift " << r / 10.0 << ")";
  fail(ErrorCode::kRegularizationExhausted, os.str());
}

Trajectory forward_pass(const Trajectory& traj, const GainSchedule& gains,
                        double step, const dynamics::SwarmPlant& plant,
                        const CostModel& cost) {
  const int N = traj.horizon();
  if (static_cast<int>(gains.K.size()) != N) {
    fail(ErrorCode::kDimensionMismatch, "gain schedule length differs from horizon");
  }
  Trajectory out;
  out.states.reserve(static_cast<std::size_t>(N) + 1);
  out.controls.reserve(static_cast<std::size_t>(N));
  out.states.push_back(traj.states.front());
  for (int k = 0; k < N; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    VectorXd u = traj.controls[idx] + step * gains.k[idx] +
                 gains.K[idx] * (out.states.back() - traj.states[idx]);
    VectorXd x = plant.A * out.states.back() + plant.B * u;
    if (!x.allFinite() || !u.allFinite()) {
      fail(ErrorCode::kNonFinite, "forward pass diverged");
    }
    out.controls.push_back(std::move(u));
    out.states.push_back(std::move(x));
  }
  out.cost = trajectory_cost(out.states, out.controls, cost);
  if (!std::isfinite(out.cost)) fail(ErrorCode::kNonFinite, "forward pass cost");
  return out;
}

Result ilqr_solve(const VectorXd& x0, const std::vector<VectorXd>& U0,
                  const dynamics::SwarmPlant& plant, const CostModel& cost,
                  const Options& opts) {
  Result res;
  res.trajectory = rollout(x0, U0, plant, cost);
  res.cost_history.push_back(res.trajectory.cost);
  const double tiny = std::numeric_limits<double>::min();

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const double J = res.trajectory.cost;
    GainSchedule gains = backward_pass(res.trajectory, plant, cost, opts.reg_init, opts);
    if (std::abs(gains.expected_decrease) <= opts.tol * std::max(std::abs(J), tiny)) {
      res.converged = true;
      res.gains = std::move(gains);
      return res;
    }

    bool accepted = false;
    double step = 1.0;
    for (int b = 0; b <= opts.max_backtracks; ++b, step *= 0.5) {
      Trajectory cand = forward_pass(res.trajectory, gains, step, plant, cost);
      if (cand.cost < J) {
        res.trajectory = std::move(cand);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "no step in {1, ..., 2^-" << opts.max_backtracks
         << "} decreased the cost at iteration " << iter << " (J = " << J << ")";
      fail(ErrorCode::kLineSearchFailed, os.str());
    }
    ++res.iterations;
    res.cost_history.push_back(res.trajectory.cost);
    const double rel = (J - res.trajectory.cost) / std::max(std::abs(res.trajectory.cost), tiny);
    if (rel < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.gains = backward_pass(res.trajectory, plant, cost, opts.reg_init, opts);
  return res;
}

StaticGain extract_static_gain(const GainSchedule& gains, StaticGainMode mode,
                               BlockPartition partition) {
  if (gains.K.empty()) fail(ErrorCode::kDimensionMismatch, "empty gain schedule");
  StaticGain out;
  out.step = 0;
  if (mode == StaticGainMode::kSteadyState) {
    out.steady_state_found = false;
    for (std::size_t k = 0; k + 1 < gains.K.size(); ++k) {
      const double denom = gains.K[k].norm();
      if (denom > 0.0 && (gains.K[k] - gains.K[k + 1]).norm() / denom < 1e-6) {
        out.step = static_cast<int>(k);
        out.steady_state_found = true;
        break;
      }
    }
    if (gains.K.size() == 1) out.steady_state_found = true;
  }
  out.gain = FeedbackGain::dense(-gains.K[static_cast<std::size_t>(out.step)], partition);
  return out;
}

}  // namespace swarm::ilqr

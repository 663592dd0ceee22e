#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "swarm/dynamics.hpp"
#include "swarm/gain.hpp"
#include "swarm/rfscost.hpp"

namespace swarm::ilqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct StageDerivatives {
  VectorXd l_x;
  VectorXd l_u;
  MatrixXd l_xx;
  MatrixXd l_uu;
  MatrixXd l_ux;
};

/// Running cost l(x_k, u_k) for k < N and terminal cost l_f(x_N).
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual double running(int k, const VectorXd& x, const VectorXd& u) const = 0;
  virtual double terminal(const VectorXd& x) const = 0;
  virtual StageDerivatives running_derivatives(int k, const VectorXd& x,
                                               const VectorXd& u) const = 0;
  /// Only l_x and l_xx are used.
  virtual StageDerivatives terminal_derivatives(const VectorXd& x) const = 0;
};

/// Σ (x-r_k)ᵀQ(x-r_k) + uᵀRu with terminal (x-r_N)ᵀQf(x-r_N). References
/// default to zero.
class QuadraticCost final : public CostModel {
 public:
  QuadraticCost(MatrixXd Q, MatrixXd R, MatrixXd Qf,
                std::vector<VectorXd> reference = {});

  double running(int k, const VectorXd& x, const VectorXd& u) const override;
  double terminal(const VectorXd& x) const override;
  StageDerivatives running_derivatives(int k, const VectorXd& x,
                                       const VectorXd& u) const override;
  StageDerivatives terminal_derivatives(const VectorXd& x) const override;

 private:
  VectorXd offset(int k, const VectorXd& x) const;

  MatrixXd Q_, R_, Qf_;
  std::vector<VectorXd> reference_;
};

/// RFS objective over a horizon: one StageCost per step k = 0..N. The
/// terminal cost is the mixture part of stage N (no control term).
class RfsCostModel final : public CostModel {
 public:
  explicit RfsCostModel(std::vector<rfs::StageCost> stages,
                        bool project_hessian = true);

  double running(int k, const VectorXd& x, const VectorXd& u) const override;
  double terminal(const VectorXd& x) const override;
  StageDerivatives running_derivatives(int k, const VectorXd& x,
                                       const VectorXd& u) const override;
  StageDerivatives terminal_derivatives(const VectorXd& x) const override;

  const rfs::StageCost& stage(int k) const { return stages_.at(static_cast<std::size_t>(k)); }
  int horizon() const { return static_cast<int>(stages_.size()) - 1; }

 private:
  std::vector<rfs::StageCost> stages_;
  bool project_hessian_;
};

struct Trajectory {
  std::vector<VectorXd> states;    // N + 1
  std::vector<VectorXd> controls;  // N
  double cost = 0.0;

  int horizon() const { return static_cast<int>(controls.size()); }
};

/// Local policy δu = k_k + K_k δx (ILQR sign convention).
struct GainSchedule {
  std::vector<MatrixXd> K;
  std::vector<VectorXd> k;
  std::vector<double> dV;  // -½ k_kᵀ Q_uu k_k per step
  double reg = 0.0;        // regularization that was finally used

  /// Predicted cost change for a full step: Σ (k_kᵀQ_u + ½ k_kᵀQ_uu k_k).
  double expected_decrease = 0.0;
};

struct Options {
  int max_iter = 100;
  double tol = 1e-6;
  int max_backtracks = 10;    // steps 1, 1/2, ..., 2^-max_backtracks
  double reg_init = 0.0;      // Q_uu shift on the first attempt
  double reg_first = 1e-8;    // first non-zero shift after a failure
  int max_reg_escalations = 8;
};

double trajectory_cost(const std::vector<VectorXd>& states,
                       const std::vector<VectorXd>& controls,
                       const CostModel& cost);

/// Rolls x_{k+1} = A x_k + B u_k from x0 and evaluates the cost.
Trajectory rollout(const VectorXd& x0, const std::vector<VectorXd>& controls,
                   const dynamics::SwarmPlant& plant, const CostModel& cost);

/// Q-function expansion with f_x = A, f_u = B. Q_uu is shifted by `reg`·I;
/// when it is not positive definite the shift is raised (0 → reg_first, then
/// ×10) up to max_reg_escalations times before RegularizationExhausted.
GainSchedule backward_pass(const Trajectory& traj,
                           const dynamics::SwarmPlant& plant,
                           const CostModel& cost, double reg,
                           const Options& opts = {});

/// û_k = u_k + step·k_k + K_k (x̂_k - x_k).
Trajectory forward_pass(const Trajectory& traj, const GainSchedule& gains,
                        double step, const dynamics::SwarmPlant& plant,
                        const CostModel& cost);

struct Result {
  Trajectory trajectory;
  GainSchedule gains;  // backward pass at the returned trajectory
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // initial rollout first
};

Result ilqr_solve(const VectorXd& x0, const std::vector<VectorXd>& U0,
                  const dynamics::SwarmPlant& plant, const CostModel& cost,
                  const Options& opts = {});

enum class StaticGainMode { kTerminal, kSteadyState };

struct StaticGain {
  FeedbackGain gain;
  int step = 0;                // schedule index used
  bool steady_state_found = true;
};

/// Converts K_k to u = -F x form (F = -K_k) with a dense pattern.
StaticGain extract_static_gain(const GainSchedule& gains, StaticGainMode mode,
                               BlockPartition partition);

}  // namespace swarm::ilqr

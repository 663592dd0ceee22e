#pragma once

#include <Eigen/Core>

namespace swarm::dynamics {

using Eigen::MatrixXd;

/// Per-agent linear plant: continuous (Ac, Bc), its zero-order-hold
/// discretization (A, B), position measurement map H and the process /
/// measurement noise covariances.
struct LinearPlant {
  MatrixXd Ac;
  MatrixXd Bc;
  MatrixXd A;
  MatrixXd B;
  MatrixXd H;
  MatrixXd Qn;
  MatrixXd Rn;
  double dt = 0.0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index control_dim() const { return B.cols(); }
  Eigen::Index measurement_dim() const { return H.rows(); }
};

/// Block-diagonal replication of one agent plant.
struct SwarmPlant {
  LinearPlant per_agent;
  int n_agents = 0;
  MatrixXd A;
  MatrixXd B;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index control_dim() const { return B.cols(); }
};

/// n = sqrt(mu / a³). Throws NonPositiveInput unless mu, a > 0.
double orbital_rate(double mu, double a);

struct CwMatrices {
  MatrixXd Ac;  // 6x6, state [x y z xd yd zd]
  MatrixXd Bc;  // 6x3, acceleration input
};

CwMatrices cw_matrices(double n);

/// Discretizes (Ac, Bc) and checks the noise covariances.
LinearPlant make_plant(const MatrixXd& Ac, const MatrixXd& Bc, double dt,
                       const MatrixXd& H, const MatrixXd& Qn,
                       const MatrixXd& Rn);

/// Clohessy-Wiltshire agent with position-only measurements H = [I 0].
LinearPlant cw_plant(double n, double dt, const MatrixXd& Qn,
                     const MatrixXd& Rn);

MatrixXd block_diagonal(const MatrixXd& block, int copies);

SwarmPlant build_swarm_plant(const LinearPlant& per_agent, int n_agents);

}  // namespace swarm::dynamics

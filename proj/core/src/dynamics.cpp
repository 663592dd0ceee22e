#include "swarm/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "swarm/error.hpp"
#include "swarm/mateq.hpp"

namespace swarm::dynamics {

double orbital_rate(double mu, double a) {
  if (!(mu > 0.0) || !(a > 0.0)) {
    fail(ErrorCode::kNonPositiveInput, "mu and a must be positive");
  }
  return std::sqrt(mu / (a * a * a));
}

CwMatrices cw_matrices(double n) {
  MatrixXd Ac = MatrixXd::Zero(6, 6);
  Ac(0, 3) = 1.0;
  Ac(1, 4) = 1.0;
  Ac(2, 5) = 1.0;
  Ac(3, 0) = 3.0 * n * n;
  Ac(3, 4) = 2.0 * n;
  Ac(4, 3) = -2.0 * n;
  Ac(5, 2) = -n * n;

  MatrixXd Bc = MatrixXd::Zero(6, 3);
  Bc.bottomRows(3).setIdentity();
  return {Ac, Bc};
}

namespace {

void check_covariance(const MatrixXd& C, Eigen::Index dim, bool definite,
                      const char* name) {
  if (C.rows() != dim || C.cols() != dim) {
    fail(ErrorCode::kDimensionMismatch, std::string(name) + " has wrong size");
  }
  if ((C - C.transpose()).norm() > 1e-12 * std::max(1.0, C.norm())) {
    fail(ErrorCode::kNotPositiveDefinite, std::string(name) + " is not symmetric");
  }
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(C, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  if (definite ? !(min_eig > 0.0) : min_eig < -1e-12 * (1.0 + C.norm())) {
    fail(ErrorCode::kNotPositiveDefinite,
         std::string(name) + (definite ? " must be positive definite"
                                       : " must be positive semidefinite"));
  }
}

}  // namespace

LinearPlant make_plant(const MatrixXd& Ac, const MatrixXd& Bc, double dt,
                       const MatrixXd& H, const MatrixXd& Qn,
                       const MatrixXd& Rn) {
  auto disc = mateq::zoh_discretize(Ac, Bc, dt);
  if (H.cols() != Ac.rows()) {
    fail(ErrorCode::kDimensionMismatch, "H columns must match state dimension");
  }
  check_covariance(Qn, Ac.rows(), false, "Qn");
  check_covariance(Rn, H.rows(), true, "Rn");
  return LinearPlant{Ac, Bc, std::move(disc.A), std::move(disc.B), H, Qn, Rn, dt};
}

LinearPlant cw_plant(double n, double dt, const MatrixXd& Qn,
                     const MatrixXd& Rn) {
  auto [Ac, Bc] = cw_matrices(n);
  MatrixXd H = MatrixXd::Zero(3, 6);
  H.leftCols(3).setIdentity();
  return make_plant(Ac, Bc, dt, H, Qn, Rn);
}

MatrixXd block_diagonal(const MatrixXd& block, int copies) {
  const Eigen::Index r = block.rows();
  const Eigen::Index c = block.cols();
  MatrixXd out = MatrixXd::Zero(r * copies, c * copies);
  for (int i = 0; i < copies; ++i) out.block(i * r, i * c, r, c) = block;
  return out;
}

SwarmPlant build_swarm_plant(const LinearPlant& per_agent, int n_agents) {
  if (n_agents < 1) fail(ErrorCode::kNonPositiveInput, "n_agents must be >= 1");
  return SwarmPlant{per_agent, n_agents, block_diagonal(per_agent.A, n_agents),
                    block_diagonal(per_agent.B, n_agents)};
}

}  // namespace swarm::dynamics

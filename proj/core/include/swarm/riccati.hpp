#pragma once

#include <Eigen/Core>

namespace swarm::riccati {

using Eigen::MatrixXd;

/// Stabilizing solution of AᵀP + PA - PBR⁻¹BᵀP + Q = 0 (Hamiltonian matrix
/// sign function with determinant scaling).
MatrixXd solve_care(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R);

/// Stabilizing solution of P = AᵀPA - AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q
/// (structure-preserving doubling).
MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R);

}  // namespace swarm::riccati

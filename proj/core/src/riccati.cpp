#include "swarm/riccati.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "swarm/error.hpp"

namespace swarm::riccati {

namespace {

void check_inputs(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                  const MatrixXd& R) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    fail(ErrorCode::kDimensionMismatch, "Riccati data dimensions are inconsistent");
  }
}

MatrixXd symmetrize(const MatrixXd& X) { return 0.5 * (X + X.transpose()); }

// A residual check alone accepts non-stabilizing solutions when some unstable
// mode is uncontrollable.
void require_stable(const MatrixXd& Acl, bool discrete) {
  const Eigen::VectorXcd ev = Eigen::EigenSolver<MatrixXd>(Acl, false).eigenvalues();
  const double margin = discrete ? ev.cwiseAbs().maxCoeff() - 1.0 : ev.real().maxCoeff();
  if (!(margin < 0.0)) {
    fail(ErrorCode::kRiccatiFailed, "Riccati solution is not stabilizing");
  }
}

}  // namespace

MatrixXd solve_care(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R) {
  check_inputs(A, B, Q, R);
  const auto n = A.rows();
  Eigen::LLT<MatrixXd> rllt(R);
  if (rllt.info() != Eigen::Success) fail(ErrorCode::kRiccatiFailed, "R is not PD");
  const MatrixXd G = B * rllt.solve(B.transpose());

  MatrixXd Z(2 * n, 2 * n);
  Z << A, -G, -Q, -A.transpose();

  constexpr int kMaxIter = 100;
  bool converged = false;
  for (int it = 0; it < kMaxIter; ++it) {
    Eigen::PartialPivLU<MatrixXd> lu(Z);
    const double log_det = lu.matrixLU().diagonal().array().abs().log().sum();
    if (!std::isfinite(log_det)) {
      fail(ErrorCode::kRiccatiFailed, "Hamiltonian has eigenvalues on the imaginary axis");
    }
    const double c = std::exp(log_det / static_cast<double>(2 * n));
    const MatrixXd Znext = 0.5 * (Z / c + c * lu.inverse());
    const double change = (Znext - Z).norm();
    Z = Znext;
    if (change <= 1e-13 * std::max(1.0, Z.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged || !Z.allFinite()) {
    fail(ErrorCode::kRiccatiFailed, "sign iteration did not converge");
  }

  // [W12; W22 + I] P = -[W11 + I; W21]
  MatrixXd lhs(2 * n, n), rhs(2 * n, n);
  lhs << Z.topRightCorner(n, n),
      Z.bottomRightCorner(n, n) + MatrixXd::Identity(n, n);
  rhs << Z.topLeftCorner(n, n) + MatrixXd::Identity(n, n), Z.bottomLeftCorner(n, n);
  const MatrixXd P = symmetrize(lhs.colPivHouseholderQr().solve(-rhs));

  const MatrixXd res = A.transpose() * P + P * A - P * G * P + Q;
  if (!P.allFinite() || res.norm() > 1e-7 * std::max(1.0, Q.norm() + P.norm() * (2.0 * A.norm() + G.norm() * P.norm()))) {
    std::ostringstream os;
    os << "CARE residual " << res.norm();
    fail(ErrorCode::kRiccatiFailed, os.str());
  }
  require_stable(A - G * P, false);
  return P;
}

MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R) {
  check_inputs(A, B, Q, R);
  const auto n = A.rows();
  Eigen::LLT<MatrixXd> rllt(R);
  if (rllt.info() != Eigen::Success) fail(ErrorCode::kRiccatiFailed, "R is not PD");

  MatrixXd Ak = A;
  MatrixXd Gk = symmetrize(B * rllt.solve(B.transpose()));
  MatrixXd Hk = symmetrize(Q);
  const MatrixXd I = MatrixXd::Identity(n, n);

  constexpr int kMaxIter = 100;
  bool converged = false;
  for (int it = 0; it < kMaxIter; ++it) {
    Eigen::PartialPivLU<MatrixXd> W(I + Gk * Hk);
    const MatrixXd WA = W.solve(Ak);         // (I + G H)⁻¹ A
    const MatrixXd WG = W.solve(Gk);         // (I + G H)⁻¹ G
    const MatrixXd Hnext = symmetrize(Hk + Ak.transpose() * Hk * WA);
    Gk = symmetrize(Gk + Ak * WG * Ak.transpose());
    Ak = Ak * WA;
    const double change = (Hnext - Hk).norm();
    Hk = Hnext;
    if (!Hk.allFinite()) break;
    if (change <= 1e-14 * std::max(1.0, Hk.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) fail(ErrorCode::kRiccatiFailed, "doubling iteration did not converge");

  const MatrixXd& P = Hk;
  const MatrixXd BtP = B.transpose() * P;
  const MatrixXd res = A.transpose() * P * A - P -
                       (A.transpose() * BtP.transpose()) *
                           (R + BtP * B).ldlt().solve(BtP * A) +
                       Q;
  if (res.norm() > 1e-7 * std::max(1.0, Q.norm() + P.norm() * (1.0 + A.squaredNorm()))) {
    std::ostringstream os;
    os << "DARE residual " << res.norm();
    fail(ErrorCode::kRiccatiFailed, os.str());
  }
  require_stable(A - B * (R + BtP * B).ldlt().solve(BtP * A), true);
  return P;
}

}  // namespace swarm::riccati

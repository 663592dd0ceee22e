#include "swarm/mateq.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "swarm/error.hpp"

namespace swarm::mateq {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using cplx = std::complex<double>;

namespace {

void require_square(const Eigen::Ref<const MatrixXd>& M, const char* name) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    std::ostringstream os;
    os << name << " must be square and non-empty, got " << M.rows() << "x"
       << M.cols();
    fail(ErrorCode::kDimensionMismatch, os.str());
  }
}

void require_finite(const Eigen::Ref<const MatrixXd>& M, const char* name) {
  if (!M.allFinite()) {
    fail(ErrorCode::kNonFinite, std::string(name) + " has non-finite entries");
  }
}

struct Schur {
  MatrixXcd T;
  MatrixXcd U;
};

Schur complex_schur(const Eigen::Ref<const MatrixXd>& A) {
  Eigen::ComplexSchur<MatrixXcd> schur(A.cast<cplx>());
  if (schur.info() != Eigen::Success) {
    fail(ErrorCode::kNonFinite, "complex Schur decomposition did not converge");
  }
  return {schur.matrixT(), schur.matrixU()};
}

// Solves (a·T + b·I) y = rhs in place, T upper triangular.
void solve_upper_shifted(const MatrixXcd& T, cplx a, cplx b,
                         Eigen::Ref<VectorXcd> y) {
  const Eigen::Index n = T.rows();
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    cplx acc = y(i);
    for (Eigen::Index k = i + 1; k < n; ++k) acc -= a * T(i, k) * y(k);
    y(i) = acc / (a * T(i, i) + b);
  }
}

// Solves (a·Tᴴ + b·I) y = rhs in place, T upper triangular (so Tᴴ lower).
void solve_lower_adjoint_shifted(const MatrixXcd& T, cplx a, cplx b,
                                 Eigen::Ref<VectorXcd> y) {
  const Eigen::Index n = T.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    cplx acc = y(i);
    for (Eigen::Index k = 0; k < i; ++k) acc -= a * std::conj(T(k, i)) * y(k);
    y(i) = acc / (a * std::conj(T(i, i)) + b);
  }
}

MatrixXd symmetrize(const MatrixXd& X) { return 0.5 * (X + X.transpose()); }

}  // namespace

StableFactor::StableFactor(const Eigen::Ref<const MatrixXd>& A, Time time,
                           double tol)
    : time_(time) {
  require_square(A, "A");
  require_finite(A, "A");
  Schur s = complex_schur(A);
  T_ = std::move(s.T);
  U_ = std::move(s.U);
  const VectorXcd eig = T_.diagonal();
  if (time_ == Time::kContinuous) {
    margin_ = eig.real().maxCoeff();
    if (margin_ >= -tol) {
      std::ostringstream os;
      os << "max real eigenvalue part " << margin_;
      fail(ErrorCode::kNotHurwitz, os.str());
    }
  } else {
    margin_ = eig.cwiseAbs().maxCoeff();
    if (margin_ >= 1.0 - tol) {
      std::ostringstream os;
      os << "spectral radius " << margin_;
      fail(ErrorCode::kNotSchurStable, os.str());
    }
  }
}

MatrixXd StableFactor::observability(const Eigen::Ref<const MatrixXd>& Q) const {
  const Eigen::Index n = T_.rows();
  if (Q.rows() != n || Q.cols() != n) {
    fail(ErrorCode::kDimensionMismatch, "Q must match A");
  }
  // Y = Uᴴ P U, C = Uᴴ Q U.
  MatrixXcd Y = -(U_.adjoint() * Q.cast<cplx>() * U_);
  if (time_ == Time::kContinuous) {
    // Tᴴ Y + Y T = -C, columns left to right.
    for (Eigen::Index j = 0; j < n; ++j) {
      VectorXcd rhs = Y.col(j);
      for (Eigen::Index l = 0; l < j; ++l) rhs -= Y.col(l) * T_(l, j);
      solve_lower_adjoint_shifted(T_, 1.0, T_(j, j), rhs);
      Y.col(j) = rhs;
    }
  } else {
    // Tᴴ Y T - Y = -C. With r_j = Σ_{l<j} y_l T_lj:
    // (T_jj Tᴴ - I) y_j = -c_j - Tᴴ r_j.
    for (Eigen::Index j = 0; j < n; ++j) {
      VectorXcd r = VectorXcd::Zero(n);
      for (Eigen::Index l = 0; l < j; ++l) r += Y.col(l) * T_(l, j);
      VectorXcd rhs = Y.col(j) - T_.adjoint() * r;
      solve_lower_adjoint_shifted(T_, T_(j, j), -1.0, rhs);
      Y.col(j) = rhs;
    }
  }
  return symmetrize((U_ * Y * U_.adjoint()).real());
}

MatrixXd StableFactor::controllability(
    const Eigen::Ref<const MatrixXd>& S) const {
  const Eigen::Index n = T_.rows();
  if (S.rows() != n || S.cols() != n) {
    fail(ErrorCode::kDimensionMismatch, "S must match A");
  }
  MatrixXcd Y = -(U_.adjoint() * S.cast<cplx>() * U_);
  if (time_ == Time::kContinuous) {
    // T Y + Y Tᴴ = -C, columns right to left.
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      VectorXcd rhs = Y.col(j);
      for (Eigen::Index l = j + 1; l < n; ++l) {
        rhs -= Y.col(l) * std::conj(T_(j, l));
      }
      solve_upper_shifted(T_, 1.0, std::conj(T_(j, j)), rhs);
      Y.col(j) = rhs;
    }
  } else {
    // T Y Tᴴ - Y = -C. With s_j = Σ_{l>j} y_l conj(T_jl):
    // (conj(T_jj) T - I) y_j = -c_j - T s_j.
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      VectorXcd s = VectorXcd::Zero(n);
      for (Eigen::Index l = j + 1; l < n; ++l) s += Y.col(l) * std::conj(T_(j, l));
      VectorXcd rhs = Y.col(j) - T_ * s;
      solve_upper_shifted(T_, std::conj(T_(j, j)), -1.0, rhs);
      Y.col(j) = rhs;
    }
  }
  return symmetrize((U_ * Y * U_.adjoint()).real());
}

bool is_stable(const Eigen::Ref<const MatrixXd>& A, StableFactor::Time time,
               double tol) {
  require_square(A, "A");
  if (!A.allFinite()) return false;
  const Eigen::VectorXcd eig = A.eigenvalues();
  if (time == StableFactor::Time::kContinuous) {
    return eig.real().maxCoeff() < -tol;
  }
  return eig.cwiseAbs().maxCoeff() < 1.0 - tol;
}

MatrixXd solve_continuous_lyapunov(const Eigen::Ref<const MatrixXd>& A,
                                   const Eigen::Ref<const MatrixXd>& Q,
                                   double tol) {
  require_square(A, "A");
  require_square(Q, "Q");
  if (A.rows() != Q.rows()) fail(ErrorCode::kDimensionMismatch, "A and Q differ");
  return StableFactor(A, StableFactor::Time::kContinuous, tol).observability(Q);
}

MatrixXd solve_discrete_lyapunov(const Eigen::Ref<const MatrixXd>& A,
                                 const Eigen::Ref<const MatrixXd>& Q,
                                 double tol) {
  require_square(A, "A");
  require_square(Q, "Q");
  if (A.rows() != Q.rows()) fail(ErrorCode::kDimensionMismatch, "A and Q differ");
  return StableFactor(A, StableFactor::Time::kDiscrete, tol).observability(Q);
}

MatrixXd solve_sylvester(const Eigen::Ref<const MatrixXd>& M,
                         const Eigen::Ref<const MatrixXd>& N,
                         const Eigen::Ref<const MatrixXd>& C, double tol) {
  require_square(M, "M");
  require_square(N, "N");
  if (C.rows() != M.rows() || C.cols() != N.rows()) {
    fail(ErrorCode::kDimensionMismatch, "C must be rows(M) x rows(N)");
  }
  require_finite(M, "M");
  require_finite(N, "N");
  require_finite(C, "C");

  const Schur sm = complex_schur(M);
  const Schur sn = complex_schur(N);
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff() + N.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < sm.T.rows(); ++i) {
    for (Eigen::Index j = 0; j < sn.T.rows(); ++j) {
      if (std::abs(sm.T(i, i) + sn.T(j, j)) <= tol * scale) {
        std::ostringstream os;
        os << "eigenvalues " << sm.T(i, i) << " and " << sn.T(j, j)
           << " sum to zero";
        fail(ErrorCode::kSingularPencil, os.str());
      }
    }
  }

  // Tm Y + Y Tn = Umᴴ C Un, columns left to right.
  MatrixXcd Y = sm.U.adjoint() * C.cast<cplx>() * sn.U;
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    VectorXcd rhs = Y.col(j);
    for (Eigen::Index l = 0; l < j; ++l) rhs -= Y.col(l) * sn.T(l, j);
    solve_upper_shifted(sm.T, 1.0, sn.T(j, j), rhs);
    Y.col(j) = rhs;
  }
  return (sm.U * Y * sn.U.adjoint()).real();
}

Discretized zoh_discretize(const Eigen::Ref<const MatrixXd>& Ac,
                           const Eigen::Ref<const MatrixXd>& Bc, double dt) {
  require_square(Ac, "Ac");
  if (Bc.rows() != Ac.rows()) {
    fail(ErrorCode::kDimensionMismatch, "Bc rows must match Ac");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    fail(ErrorCode::kNonPositiveInput, "dt must be positive and finite");
  }
  const Eigen::Index n = Ac.rows();
  const Eigen::Index m = Bc.cols();
  MatrixXd M = MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = Ac * dt;
  M.topRightCorner(n, m) = Bc * dt;
  const MatrixXd phi = M.exp();
  if (!phi.allFinite()) {
    fail(ErrorCode::kNonFinite, "matrix exponential overflowed");
  }
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

}  // namespace swarm::mateq

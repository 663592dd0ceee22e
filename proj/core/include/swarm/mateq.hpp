#pragma once

#include <complex>

#include <Eigen/Core>

namespace swarm::mateq {

using Eigen::MatrixXd;

inline constexpr double kDefaultStabilityTol = 1e-12;

// Stability checks treat an eigenvalue within `tol` of the stability boundary
// as unstable: continuous-time requires Re(λ) < -tol, discrete-time |λ| < 1-tol.

/// Solves AᵀP + PA = -Q for a Hurwitz A. Result is symmetrized.
MatrixXd solve_continuous_lyapunov(const Eigen::Ref<const MatrixXd>& A,
                                   const Eigen::Ref<const MatrixXd>& Q,
                                   double tol = kDefaultStabilityTol);

/// Solves AᵀPA - P = -Q for a Schur-stable A. Result is symmetrized.
MatrixXd solve_discrete_lyapunov(const Eigen::Ref<const MatrixXd>& A,
                                 const Eigen::Ref<const MatrixXd>& Q,
                                 double tol = kDefaultStabilityTol);

/// Solves MX + XN = C (Bartels-Stewart on complex Schur forms).
/// Throws SingularPencil when some λ_M + λ_N vanishes relative to the
/// magnitude of M and N.
MatrixXd solve_sylvester(const Eigen::Ref<const MatrixXd>& M,
                         const Eigen::Ref<const MatrixXd>& N,
                         const Eigen::Ref<const MatrixXd>& C,
                         double tol = kDefaultStabilityTol);

/// A closed-loop matrix factored once, used for both Gramian equations of a
/// gain evaluation. The "observability" form solves for P, the
/// "controllability" form for L:
///
///   continuous:  AᵀP + PA = -Q          AL + LAᵀ = -S
///   discrete:    AᵀPA - P = -Q          ALAᵀ - L = -S
class StableFactor {
 public:
  enum class Time { kContinuous, kDiscrete };

  /// Throws NotHurwitz / NotSchurStable when A is not stable in `time`.
  StableFactor(const Eigen::Ref<const MatrixXd>& A, Time time,
               double tol = kDefaultStabilityTol);

  MatrixXd observability(const Eigen::Ref<const MatrixXd>& Q) const;
  MatrixXd controllability(const Eigen::Ref<const MatrixXd>& S) const;

  /// max Re(λ) for continuous, max |λ| for discrete.
  double stability_margin_value() const { return margin_; }
  Time time() const { return time_; }

 private:
  Eigen::MatrixXcd T_;
  Eigen::MatrixXcd U_;
  Time time_;
  double margin_ = 0.0;
};

/// True if A is Hurwitz (continuous) or Schur stable (discrete) within tol.
bool is_stable(const Eigen::Ref<const MatrixXd>& A, StableFactor::Time time,
               double tol = kDefaultStabilityTol);

struct Discretized {
  MatrixXd A;
  MatrixXd B;
};

/// Zero-order-hold discretization through the exponential of the augmented
/// matrix [[Ac, Bc], [0, 0]]·dt.
Discretized zoh_discretize(const Eigen::Ref<const MatrixXd>& Ac,
                           const Eigen::Ref<const MatrixXd>& Bc, double dt);

}  // namespace swarm::mateq

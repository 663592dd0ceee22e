#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "swarm/gain.hpp"

namespace swarm::sparse {

using Eigen::MatrixXd;

enum class TimeMode { kContinuous, kDiscrete };

/// LQR problem with disturbance input B2:
///   continuous: ẋ = Ax + Bu + B2 d,  discrete: x⁺ = Ax + Bu + B2 d,
/// and the closed-loop H2 cost J(F) = trace(B2ᵀ P(F) B2) under u = -Fx.
struct SparseLqrProblem {
  MatrixXd A;
  MatrixXd B;
  MatrixXd B2;
  MatrixXd Q;
  MatrixXd R;
  TimeMode time = TimeMode::kDiscrete;
  BlockPartition partition;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index control_dim() const { return B.cols(); }
};

enum class Penalty { kL1, kWeightedL1, kCardinality };

/// Anderson-Moore descent with Armijo step size selection.
struct DescentOptions {
  int max_iter = 500;
  double grad_tol = 1e-4;  // stop when ‖∇‖_F < grad_tol·(1 + ‖F‖_F)
  double armijo_s0 = 1.0;
  double armijo_beta = 0.5;
  double armijo_sigma = 0.01;
  int armijo_max_backtracks = 30;
};

struct AdmmOptions {
  double rho = 100.0;
  double eps_abs = 1e-4;
  int max_iter = 1000;
  Penalty penalty = Penalty::kWeightedL1;
  double reweight_eps = 1e-3;
  int max_reweight = 5;
  DescentOptions fmin;
};

struct PolishOptions {
  DescentOptions descent{.max_iter = 1000, .grad_tol = 1e-5};
  int cg_max_iter = 0;       // 0: number of pattern entries
  double cg_rel_tol = 1e-12;
};

/// Closed-loop quantities of a stabilizing gain.
struct GainEvaluation {
  double J = 0.0;
  MatrixXd P;     // observability Gramian of (Q + FᵀRF)
  MatrixXd L;     // controllability Gramian of B2 B2ᵀ
  MatrixXd grad;  // ∇J(F)
};

bool is_stabilizing(const MatrixXd& F, const SparseLqrProblem& prob);

/// trace(B2ᵀ P B2). Throws Unstable when A - BF is not stable.
double lqr_cost(const FeedbackGain& F, const SparseLqrProblem& prob);
double lqr_cost(const MatrixXd& F, const SparseLqrProblem& prob);

/// J, P, L and the gradient
///   continuous: ∇J = 2(RF - BᵀP) L
///   discrete:   ∇J = 2((R + BᵀPB) F - BᵀPA) L
GainEvaluation evaluate_gain(const MatrixXd& F, const SparseLqrProblem& prob);

/// Algebraic-Riccati optimal gain with a full pattern.
FeedbackGain centralized_gain(const SparseLqrProblem& prob);

struct FminResult {
  MatrixXd F;
  double phi = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool stalled = false;
};

/// Minimizes φ(F) = J(F) + (ρ/2)‖F - U‖²_F with U = G - Λ/ρ.
FminResult f_min_step(const SparseLqrProblem& prob, const MatrixXd& G,
                      const MatrixXd& Lambda, const MatrixXd& F_init, double rho,
                      const DescentOptions& opts = {});

/// Soft threshold with per-entry level a = (γ/ρ)·W_ij.
MatrixXd g_min_shrinkage(const MatrixXd& V, double gamma, double rho,
                         const MatrixXd& W);

/// Hard threshold at b = sqrt(2γ/ρ); |V_ij| == b maps to zero.
MatrixXd g_min_truncate(const MatrixXd& V, double gamma, double rho);

/// W_ij = 1 / (|F_ij| + eps).
MatrixXd update_weights(const MatrixXd& F, double eps);

struct AdmmResult {
  FeedbackGain gain;  // G values on G's pattern
  MatrixXd F;         // last F-minimization iterate
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // some F-minimization missed its tolerance
  std::vector<double> primal_residuals;  // ‖F - G‖_F
  std::vector<double> dual_residuals;    // ‖G - G_prev‖_F
};

AdmmResult admm_sparsify(const SparseLqrProblem& prob, double gamma,
                         const FeedbackGain& F0, const AdmmOptions& opts = {});

struct PolishResult {
  FeedbackGain gain;
  double J_init = 0.0;
  double J = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool stalled = false;
};

/// Minimizes J over gains supported on `pattern`. Each descent direction
/// comes from the pattern-restricted stationarity condition, solved by
/// preconditioned conjugate gradients.
PolishResult polish_structured(const SparseLqrProblem& prob, const Pattern& pattern,
                               const MatrixXd& F_init,
                               const PolishOptions& opts = {});

struct SweepEntry {
  double gamma = 0.0;
  FeedbackGain gain;   // polished
  Eigen::Index nnz = 0;
  double J = 0.0;      // polished trace cost
  double J_admm = 0.0; // before polishing (NaN if the ADMM gain is unstable)
  int admm_iterations = 0;
  bool admm_converged = false;
  bool polish_stalled = false;
  bool failed = false;
  std::string error;
};

/// Warm-started homotopy in γ; γ = 0 starts from centralized_gain.
std::vector<SweepEntry> gamma_sweep(const SparseLqrProblem& prob,
                                    const std::vector<double>& gammas,
                                    const AdmmOptions& admm = {},
                                    const PolishOptions& polish = {});

}  // namespace swarm::sparse

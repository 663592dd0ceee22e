#include "swarm/sparselqr.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "swarm/error.hpp"
#include "swarm/mateq.hpp"
#include "swarm/riccati.hpp"

namespace swarm::sparse {

namespace {

mateq::StableFactor::Time factor_time(TimeMode t) {
  return t == TimeMode::kContinuous ? mateq::StableFactor::Time::kContinuous
                                    : mateq::StableFactor::Time::kDiscrete;
}

void check_problem(const SparseLqrProblem& p) {
  const auto n = p.A.rows();
  if (p.A.cols() != n || p.B.rows() != n || p.B2.rows() != n || p.Q.rows() != n ||
      p.Q.cols() != n || p.R.rows() != p.B.cols() || p.R.cols() != p.B.cols()) {
    fail(ErrorCode::kDimensionMismatch, "sparse LQR problem dimensions are inconsistent");
  }
}

void check_gain(const MatrixXd& F, const SparseLqrProblem& p) {
  if (F.rows() != p.control_dim() || F.cols() != p.state_dim()) {
    std::ostringstream os;
    os << "gain must be " << p.control_dim() << "x" << p.state_dim() << ", got "
       << F.rows() << "x" << F.cols();
    fail(ErrorCode::kDimensionMismatch, os.str());
  }
}

MatrixXd mask(const MatrixXd& X, const Pattern& S) {
  return S.select(X, MatrixXd::Zero(X.rows(), X.cols()));
}

Pattern support(const MatrixXd& X) { return X.array() != 0.0; }

// R̃ and the right-hand side of the stationarity condition R̃ F L = C0:
//   continuous: R̃ = R,          C0 = BᵀPL
//   discrete:   R̃ = R + BᵀPB,   C0 = BᵀPAL
struct Stationarity {
  MatrixXd Rt;
  MatrixXd C0;
};

Stationarity stationarity(const SparseLqrProblem& p, const GainEvaluation& ev) {
  const MatrixXd BtP = p.B.transpose() * ev.P;
  if (p.time == TimeMode::kContinuous) return {p.R, BtP * ev.L};
  MatrixXd Rt = p.R + BtP * p.B;
  return {0.5 * (Rt + Rt.transpose()), BtP * p.A * ev.L};
}

double phi_value(double J, const MatrixXd& F, const MatrixXd& U, double rho) {
  return J + 0.5 * rho * (F - U).squaredNorm();
}

}  // namespace

bool is_stabilizing(const MatrixXd& F, const SparseLqrProblem& prob) {
  check_gain(F, prob);
  return mateq::is_stable(prob.A - prob.B * F, factor_time(prob.time));
}

GainEvaluation evaluate_gain(const MatrixXd& F, const SparseLqrProblem& prob) {
  check_problem(prob);
  check_gain(F, prob);
  const MatrixXd Acl = prob.A - prob.B * F;
  try {
    const mateq::StableFactor factor(Acl, factor_time(prob.time));
    GainEvaluation ev;
    ev.P = factor.observability(prob.Q + F.transpose() * prob.R * F);
    ev.L = factor.controllability(prob.B2 * prob.B2.transpose());
    ev.J = (prob.B2.transpose() * ev.P * prob.B2).trace();
    if (prob.time == TimeMode::kContinuous) {
      ev.grad = 2.0 * (prob.R * F - prob.B.transpose() * ev.P) * ev.L;
    } else {
      const MatrixXd BtP = prob.B.transpose() * ev.P;
      ev.grad = 2.0 * ((prob.R + BtP * prob.B) * F - BtP * prob.A) * ev.L;
    }
    return ev;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNotHurwitz || e.code() == ErrorCode::kNotSchurStable) {
      fail(ErrorCode::kUnstable, e.what());
    }
    throw;
  }
}

double lqr_cost(const MatrixXd& F, const SparseLqrProblem& prob) {
  check_problem(prob);
  check_gain(F, prob);
  try {
    const mateq::StableFactor factor(prob.A - prob.B * F, factor_time(prob.time));
    const MatrixXd P = factor.observability(prob.Q + F.transpose() * prob.R * F);
    return (prob.B2.transpose() * P * prob.B2).trace();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNotHurwitz || e.code() == ErrorCode::kNotSchurStable) {
      fail(ErrorCode::kUnstable, e.what());
    }
    throw;
  }
}

double lqr_cost(const FeedbackGain& F, const SparseLqrProblem& prob) {
  return lqr_cost(F.F, prob);
}

FeedbackGain centralized_gain(const SparseLqrProblem& prob) {
  check_problem(prob);
  MatrixXd F;
  if (prob.time == TimeMode::kContinuous) {
    const MatrixXd P = riccati::solve_care(prob.A, prob.B, prob.Q, prob.R);
    F = prob.R.ldlt().solve(prob.B.transpose() * P);
  } else {
    const MatrixXd P = riccati::solve_dare(prob.A, prob.B, prob.Q, prob.R);
    const MatrixXd BtP = prob.B.transpose() * P;
    F = (prob.R + BtP * prob.B).ldlt().solve(BtP * prob.A);
  }
  if (!is_stabilizing(F, prob)) {
    fail(ErrorCode::kRiccatiFailed, "Riccati gain does not stabilize the plant");
  }
  return FeedbackGain::dense(F, prob.partition);
}

namespace {

// Solves 2 R̃ X L + ρ X = C for symmetric positive definite R̃ and L by
// diagonalizing both sides of the Sylvester operator.
MatrixXd solve_spd_sylvester(const MatrixXd& Rt, const MatrixXd& L, double rho,
                             const MatrixXd& C) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> er(Rt);
  Eigen::SelfAdjointEigenSolver<MatrixXd> el(L);
  MatrixXd Y = er.eigenvectors().transpose() * C * el.eigenvectors();
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      Y(i, j) /= 2.0 * er.eigenvalues()(i) * el.eigenvalues()(j) + rho;
    }
  }
  return er.eigenvectors() * Y * el.eigenvectors().transpose();
}

}  // namespace

FminResult f_min_step(const SparseLqrProblem& prob, const MatrixXd& G,
                      const MatrixXd& Lambda, const MatrixXd& F_init, double rho,
                      const DescentOptions& opts) {
  check_problem(prob);
  check_gain(F_init, prob);
  if (rho < 0.0) fail(ErrorCode::kNonPositiveInput, "rho must be >= 0");
  const MatrixXd U = rho > 0.0 ? MatrixXd(G - Lambda / rho) : MatrixXd(G);

  FminResult res;
  res.F = F_init;
  GainEvaluation ev = evaluate_gain(res.F, prob);
  res.phi = phi_value(ev.J, res.F, U, rho);

  for (; res.iterations < opts.max_iter; ++res.iterations) {
    const MatrixXd grad = ev.grad + rho * (res.F - U);
    res.grad_norm = grad.norm();
    if (res.grad_norm < opts.grad_tol * (1.0 + res.F.norm())) return res;

    // Anderson-Moore: fix (L, P), solve 2R̃F̄L + ρF̄ = 2C0 + ρU for F̄.
    const Stationarity st = stationarity(prob, ev);
    const MatrixXd Fbar = solve_spd_sylvester(st.Rt, ev.L, rho, 2.0 * st.C0 + rho * U);
    const MatrixXd D = Fbar - res.F;
    const double slope = (grad.array() * D.array()).sum();
    if (!(slope < 0.0)) {
      res.stalled = true;
      return res;
    }

    double s = opts.armijo_s0;
    bool accepted = false;
    for (int b = 0; b <= opts.armijo_max_backtracks; ++b, s *= opts.armijo_beta) {
      const MatrixXd Fn = res.F + s * D;
      if (!is_stabilizing(Fn, prob)) continue;
      GainEvaluation evn = evaluate_gain(Fn, prob);
      const double phin = phi_value(evn.J, Fn, U, rho);
      if (phin <= res.phi + opts.armijo_sigma * s * slope) {
        res.F = Fn;
        res.phi = phin;
        ev = std::move(evn);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.stalled = true;
      return res;
    }
  }
  res.grad_norm = (ev.grad + rho * (res.F - U)).norm();
  res.stalled = !(res.grad_norm < opts.grad_tol * (1.0 + res.F.norm()));
  return res;
}

MatrixXd g_min_shrinkage(const MatrixXd& V, double gamma, double rho,
                         const MatrixXd& W) {
  if (W.rows() != V.rows() || W.cols() != V.cols()) {
    fail(ErrorCode::kDimensionMismatch, "weights must match V");
  }
  MatrixXd G(V.rows(), V.cols());
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      const double a = (gamma / rho) * W(i, j);
      const double v = V(i, j);
      G(i, j) = v > a ? v - a : (v < -a ? v + a : 0.0);
    }
  }
  return G;
}

MatrixXd g_min_truncate(const MatrixXd& V, double gamma, double rho) {
  const double b = std::sqrt(2.0 * gamma / rho);
  return (V.array().abs() <= b).select(0.0, V);
}

MatrixXd update_weights(const MatrixXd& F, double eps) {
  return (F.array().abs() + eps).inverse().matrix();
}

AdmmResult admm_sparsify(const SparseLqrProblem& prob, double gamma,
                         const FeedbackGain& F0, const AdmmOptions& opts) {
  check_problem(prob);
  check_gain(F0.F, prob);
  if (gamma < 0.0) fail(ErrorCode::kNonPositiveInput, "gamma must be >= 0");
  if (!(opts.rho > 0.0)) fail(ErrorCode::kNonPositiveInput, "rho must be > 0");
  if (!is_stabilizing(F0.F, prob)) {
    fail(ErrorCode::kNoStabilizingF0, "initial gain does not stabilize the plant");
  }

  const double rho = opts.rho;
  AdmmResult res;
  MatrixXd F = F0.F;
  MatrixXd G = F;
  MatrixXd Lambda = MatrixXd::Zero(F.rows(), F.cols());
  MatrixXd W = opts.penalty == Penalty::kWeightedL1
                   ? update_weights(F, opts.reweight_eps)
                   : MatrixXd::Ones(F.rows(), F.cols());

  const int passes = opts.penalty == Penalty::kWeightedL1 ? std::max(1, opts.max_reweight) : 1;
  Pattern last_pattern;
  for (int pass = 0; pass < passes; ++pass) {
    bool pass_converged = false;
    for (int it = 0; it < opts.max_iter; ++it) {
      const FminResult fm = f_min_step(prob, G, Lambda, F, rho, opts.fmin);
      F = fm.F;
      res.stalled = res.stalled || fm.stalled;

      const MatrixXd V = F + Lambda / rho;
      MatrixXd Gn = opts.penalty == Penalty::kCardinality
                        ? g_min_truncate(V, gamma, rho)
                        : g_min_shrinkage(V, gamma, rho, W);
      Lambda += rho * (F - Gn);
      const double primal = (F - Gn).norm();
      const double dual = (Gn - G).norm();
      G = std::move(Gn);
      res.primal_residuals.push_back(primal);
      res.dual_residuals.push_back(dual);
      ++res.iterations;
      if (primal <= opts.eps_abs && dual <= opts.eps_abs) {
        pass_converged = true;
        break;
      }
    }
    res.converged = pass_converged;
    if (opts.penalty != Penalty::kWeightedL1) break;
    const Pattern pat = support(G);
    if (pass > 0 && pat == last_pattern) break;
    last_pattern = pat;
    W = update_weights(G, opts.reweight_eps);
  }

  res.F = F;
  res.gain = FeedbackGain{G, support(G), prob.partition};
  return res;
}

namespace {

// Preconditioned CG for Π(R̃ X L) = Π(C0) over matrices supported on S.
MatrixXd structured_stationary_point(const MatrixXd& Rt, const MatrixXd& L,
                                     const MatrixXd& C0, const Pattern& S,
                                     const MatrixXd& X0, int max_iter,
                                     double rel_tol) {
  const auto apply = [&](const MatrixXd& X) { return mask(Rt * X * L, S); };
  const MatrixXd precond =
      mask(Rt.diagonal() * L.diagonal().transpose(), S);
  const auto inv_precond = [&](const MatrixXd& X) {
    return S.select(X.array() / precond.array(), 0.0).matrix();
  };

  const MatrixXd b = mask(C0, S);
  const double bnorm = b.norm();
  MatrixXd x = mask(X0, S);
  if (bnorm == 0.0) return MatrixXd::Zero(X0.rows(), X0.cols());
  MatrixXd r = b - apply(x);
  MatrixXd z = inv_precond(r);
  MatrixXd p = z;
  double rz = (r.array() * z.array()).sum();
  for (int it = 0; it < max_iter && r.norm() > rel_tol * bnorm; ++it) {
    const MatrixXd Ap = apply(p);
    const double pAp = (p.array() * Ap.array()).sum();
    if (!(pAp > 0.0)) break;
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    z = inv_precond(r);
    const double rz_next = (r.array() * z.array()).sum();
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return x;
}

}  // namespace

PolishResult polish_structured(const SparseLqrProblem& prob, const Pattern& pattern,
                               const MatrixXd& F_init, const PolishOptions& opts) {
  check_problem(prob);
  check_gain(F_init, prob);
  if (pattern.rows() != F_init.rows() || pattern.cols() != F_init.cols()) {
    fail(ErrorCode::kDimensionMismatch, "pattern must match the gain");
  }
  PolishResult res;
  MatrixXd F = mask(F_init, pattern);
  if (!is_stabilizing(F, prob)) {
    fail(ErrorCode::kPatternDestabilizes,
         "the pattern-conformant initial gain is not stabilizing");
  }
  const bool full = pattern.all();
  const auto& d = opts.descent;
  const int cg_iters = opts.cg_max_iter > 0 ? opts.cg_max_iter
                                            : static_cast<int>(std::max<Eigen::Index>(1, pattern.count()));

  GainEvaluation ev = evaluate_gain(F, prob);
  res.J_init = ev.J;
  for (; res.iterations < d.max_iter; ++res.iterations) {
    const MatrixXd grad = mask(ev.grad, pattern);
    res.grad_norm = grad.norm();
    if (res.grad_norm < d.grad_tol * (1.0 + F.norm())) break;

    const Stationarity st = stationarity(prob, ev);
    MatrixXd Fbar;
    if (full) {
      Fbar = st.Rt.ldlt().solve(st.C0) * ev.L.inverse();
    } else {
      Fbar = structured_stationary_point(st.Rt, ev.L, st.C0, pattern, F, cg_iters,
                                         opts.cg_rel_tol);
    }
    const MatrixXd D = mask(Fbar - F, pattern);
    const double slope = (grad.array() * D.array()).sum();
    if (!(slope < 0.0)) {
      res.stalled = true;
      break;
    }
    double s = d.armijo_s0;
    bool accepted = false;
    for (int b = 0; b <= d.armijo_max_backtracks; ++b, s *= d.armijo_beta) {
      const MatrixXd Fn = F + s * D;
      if (!is_stabilizing(Fn, prob)) continue;
      GainEvaluation evn = evaluate_gain(Fn, prob);
      if (evn.J <= ev.J + d.armijo_sigma * s * slope) {
        F = Fn;
        ev = std::move(evn);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.stalled = true;
      break;
    }
  }
  if (res.iterations >= d.max_iter) {
    res.grad_norm = mask(ev.grad, pattern).norm();
    res.stalled = !(res.grad_norm < d.grad_tol * (1.0 + F.norm()));
  }
  res.J = ev.J;
  res.gain = FeedbackGain{F, pattern, prob.partition};
  return res;
}

std::vector<SweepEntry> gamma_sweep(const SparseLqrProblem& prob,
                                    const std::vector<double>& gammas,
                                    const AdmmOptions& admm,
                                    const PolishOptions& polish) {
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (gammas[i] < 0.0 || (i > 0 && gammas[i] < gammas[i - 1])) {
      fail(ErrorCode::kConfigError, "gamma list must be ascending and non-negative");
    }
  }
  std::vector<SweepEntry> out;
  if (gammas.empty()) return out;
  FeedbackGain warm = centralized_gain(prob);

  for (std::size_t i = 0; i < gammas.size(); ++i) {
    // A repeated γ restarts from its own converged state; reuse the entry.
    if (i > 0 && gammas[i] == gammas[i - 1] && !out.back().failed) {
      out.push_back(out.back());
      continue;
    }
    SweepEntry e;
    e.gamma = gammas[i];
    try {
      const AdmmResult a = admm_sparsify(prob, e.gamma, warm, admm);
      e.admm_iterations = a.iterations;
      e.admm_converged = a.converged;
      e.J_admm = is_stabilizing(a.gain.F, prob) ? lqr_cost(a.gain.F, prob)
                                                 : std::numeric_limits<double>::quiet_NaN();
      MatrixXd init = a.gain.F;
      if (!is_stabilizing(init, prob)) init = mask(a.F, a.gain.pattern);
      const PolishResult p = polish_structured(prob, a.gain.pattern, init, polish);
      e.gain = p.gain;
      e.nnz = p.gain.nnz();
      e.J = p.J;
      e.polish_stalled = p.stalled;
      warm = FeedbackGain::dense(a.F, prob.partition);
    } catch (const Error& err) {
      e.failed = true;
      e.error = err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace swarm::sparse

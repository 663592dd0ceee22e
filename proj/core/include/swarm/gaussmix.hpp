#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "swarm/dynamics.hpp"

namespace swarm::gmix {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GaussianComponent {
  double weight = 0.0;
  VectorXd mean;
  MatrixXd cov;
};

/// Gaussian-mixture intensity. Its integral (total weight) is the expected
/// number of agents.
struct GmIntensity {
  std::vector<GaussianComponent> components;

  double mass() const;
  Eigen::Index dim() const {
    return components.empty() ? 0 : components.front().mean.size();
  }
  std::size_t size() const { return components.size(); }
  bool empty() const { return components.empty(); }
};

inline constexpr double kCovarianceJitter = 1e-12;

/// Cholesky factor and log-normalizer of a covariance. Covariances whose
/// smallest eigenvalue lies in (0, 1e-12] receive a 1e-12·I jitter; negative
/// eigenvalues throw NotPositiveDefinite.
class GaussianKernel {
 public:
  explicit GaussianKernel(const MatrixXd& cov);

  double log_density(const VectorXd& x, const VectorXd& m) const;
  double density(const VectorXd& x, const VectorXd& m) const;

  /// S⁻¹ (x - m)
  VectorXd whiten(const VectorXd& diff) const { return llt_.solve(diff); }
  const MatrixXd& inverse() const { return inverse_; }
  double log_normalizer() const { return log_norm_; }
  Eigen::Index dim() const { return inverse_.rows(); }

 private:
  Eigen::LLT<MatrixXd> llt_;
  MatrixXd inverse_;
  double log_norm_ = 0.0;
};

/// N(x; m, P). Evaluated in the log domain, returned linear.
double eval_gaussian(const VectorXd& x, const VectorXd& m, const MatrixXd& P);

/// ∫ f(x) g(x) dx = Σ_j Σ_i w_g^j w_f^i N(m_g^j; m_f^i, P_g^j + P_f^i).
double mixture_l2_inner(const GmIntensity& f, const GmIntensity& g);

/// ‖f - g‖₂² through the three inner products.
double mixture_l2_distance_sq(const GmIntensity& f, const GmIntensity& g);

/// mean' = A mean + B u, cov' = A cov Aᵀ + Qn, weight unchanged.
GaussianComponent predict_component(const GaussianComponent& c,
                                    const VectorXd& u,
                                    const dynamics::LinearPlant& plant);

}  // namespace swarm::gmix

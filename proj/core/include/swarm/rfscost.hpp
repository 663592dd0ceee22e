#pragma once

#include <vector>

#include <Eigen/Core>

#include "swarm/gaussmix.hpp"

namespace swarm::rfs {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Single-step RFS objective. The current mixture has one component per agent
/// with fixed weights and covariances; only the stacked means are decision
/// variables.
struct RfsObjective {
  gmix::GmIntensity desired;
  MatrixXd R;                         // stacked control weight
  double alpha = 1.0;                 // log cross-term weight
  std::vector<MatrixXd> fixed_covs;   // current component covariances
  std::vector<double> weights;        // current component weights
};

struct CostDerivatives {
  VectorXd l_x;
  VectorXd l_u;
  MatrixXd l_xx;      // raw Hessian of the mixture terms
  MatrixXd l_xx_psd;  // l_xx with negative eigenvalues clipped to zero
  MatrixXd l_uu;
  MatrixXd l_ux;
};

/// Cached kernels for one step. Building it factors every pair covariance
/// once; evaluations then only touch the means.
class StageCost {
 public:
  explicit StageCost(RfsObjective objective);

  Eigen::Index state_dim() const { return n_comp_ * dim_; }
  Eigen::Index control_dim() const { return objective_.R.rows(); }
  Eigen::Index component_dim() const { return dim_; }
  Eigen::Index component_count() const { return n_comp_; }
  const RfsObjective& objective() const { return objective_; }

  struct Terms {
    double control = 0.0;  // uᵀRu
    double ff = 0.0;
    double gg = 0.0;
    double fg = 0.0;
    double log_fg = 0.0;

    /// ‖f - g‖₂²
    double distance() const { return ff + gg - 2.0 * fg; }
  };

  Terms terms(const VectorXd& x, const VectorXd& u) const;

  /// uᵀRu + ff + gg - 2 fg - α log_fg. Pass an empty u for the mixture part.
  double value(const VectorXd& x, const VectorXd& u) const;

  /// Mixture-term derivatives with respect to the stacked means, plus the
  /// control terms.
  CostDerivatives derivatives(const VectorXd& x, const VectorXd& u,
                              bool project_psd = true) const;

 private:
  RfsObjective objective_;
  Eigen::Index n_comp_ = 0;
  Eigen::Index dim_ = 0;
  double gg_ = 0.0;
  std::vector<gmix::GaussianKernel> ff_;  // upper triangle incl. diagonal
  std::vector<gmix::GaussianKernel> fg_;  // [j * n_comp + i]

  const gmix::GaussianKernel& ff_kernel(Eigen::Index i, Eigen::Index j) const;
};

double running_cost(const VectorXd& x, const VectorXd& u, const RfsObjective& obj);

CostDerivatives cost_derivatives(const VectorXd& x, const VectorXd& u,
                                 const RfsObjective& obj);

/// Clips negative eigenvalues of a symmetric matrix to zero.
MatrixXd project_psd(const MatrixXd& H);

/// Stacks a mixture's component means; weights and covariances are left to
/// the objective.
VectorXd stack_means(const gmix::GmIntensity& v);

}  // namespace swarm::rfs

#include "swarm/gaussmix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "swarm/error.hpp"

namespace swarm::gmix {

double GmIntensity::mass() const {
  double total = 0.0;
  for (const auto& c : components) total += c.weight;
  return total;
}

GaussianKernel::GaussianKernel(const MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    fail(ErrorCode::kDimensionMismatch, "covariance must be square");
  }
  MatrixXd S = 0.5 * (cov + cov.transpose());
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(S, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  if (min_eig < 0.0 || !std::isfinite(min_eig)) {
    fail(ErrorCode::kNotPositiveDefinite, "covariance has a negative eigenvalue");
  }
  if (min_eig <= kCovarianceJitter) {
    S.diagonal().array() += kCovarianceJitter;
  }
  llt_.compute(S);
  if (llt_.info() != Eigen::Success) {
    fail(ErrorCode::kNotPositiveDefinite, "Cholesky factorization failed");
  }
  const auto d = static_cast<double>(S.rows());
  const double log_det = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
  log_norm_ = -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
  inverse_ = llt_.solve(MatrixXd::Identity(S.rows(), S.cols()));
}

double GaussianKernel::log_density(const VectorXd& x, const VectorXd& m) const {
  if (x.size() != dim() || m.size() != dim()) {
    fail(ErrorCode::kDimensionMismatch, "state and covariance dimensions differ");
  }
  const VectorXd diff = x - m;
  const VectorXd z = llt_.matrixL().solve(diff);
  return log_norm_ - 0.5 * z.squaredNorm();
}

double GaussianKernel::density(const VectorXd& x, const VectorXd& m) const {
  return std::exp(log_density(x, m));
}

double eval_gaussian(const VectorXd& x, const VectorXd& m, const MatrixXd& P) {
  return GaussianKernel(P).density(x, m);
}

double mixture_l2_inner(const GmIntensity& f, const GmIntensity& g) {
  if (!f.empty() && !g.empty() && f.dim() != g.dim()) {
    fail(ErrorCode::kDimensionMismatch, "mixtures have different state dimension");
  }
  // Terms are summed in sorted order so that inner(f, g) == inner(g, f)
  // bit for bit.
  std::vector<double> terms;
  terms.reserve(f.size() * g.size());
  for (const auto& cg : g.components) {
    for (const auto& cf : f.components) {
      const GaussianKernel k(cg.cov + cf.cov);
      terms.push_back(cg.weight * cf.weight * k.density(cg.mean, cf.mean));
    }
  }
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

double mixture_l2_distance_sq(const GmIntensity& f, const GmIntensity& g) {
  return mixture_l2_inner(f, f) + mixture_l2_inner(g, g) -
         2.0 * mixture_l2_inner(f, g);
}

GaussianComponent predict_component(const GaussianComponent& c,
                                    const VectorXd& u,
                                    const dynamics::LinearPlant& plant) {
  if (c.mean.size() != plant.state_dim() || u.size() != plant.control_dim() ||
      c.cov.rows() != plant.state_dim() || c.cov.cols() != plant.state_dim()) {
    fail(ErrorCode::kDimensionMismatch, "component does not match plant");
  }
  GaussianComponent out;
  out.weight = c.weight;
  out.mean = plant.A * c.mean + plant.B * u;
  out.cov = plant.A * c.cov * plant.A.transpose() + plant.Qn;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

}  // namespace swarm::gmix

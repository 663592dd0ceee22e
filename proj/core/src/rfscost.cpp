#include "swarm/rfscost.hpp"

#include <Eigen/Eigenvalues>

#include "swarm/error.hpp"

namespace swarm::rfs {

namespace {

Eigen::Index triangle_index(Eigen::Index i, Eigen::Index j, Eigen::Index n) {
  // Row-major upper triangle including the diagonal, i <= j.
  return i * n - i * (i - 1) / 2 + (j - i);
}

}  // namespace

StageCost::StageCost(RfsObjective objective) : objective_(std::move(objective)) {
  auto& obj = objective_;
  n_comp_ = static_cast<Eigen::Index>(obj.weights.size());
  if (static_cast<Eigen::Index>(obj.fixed_covs.size()) != n_comp_) {
    fail(ErrorCode::kDimensionMismatch, "one covariance is required per weight");
  }
  if (obj.alpha < 0.0) fail(ErrorCode::kNonPositiveInput, "alpha must be >= 0");
  if (obj.R.rows() != obj.R.cols()) {
    fail(ErrorCode::kDimensionMismatch, "R must be square");
  }
  dim_ = n_comp_ > 0 ? obj.fixed_covs.front().rows() : obj.desired.dim();
  for (const auto& P : obj.fixed_covs) {
    if (P.rows() != dim_ || P.cols() != dim_) {
      fail(ErrorCode::kDimensionMismatch, "component covariances differ in size");
    }
  }
  if (!obj.desired.empty() && obj.desired.dim() != dim_) {
    fail(ErrorCode::kDimensionMismatch, "desired mixture dimension differs");
  }

  ff_.reserve(static_cast<std::size_t>(n_comp_ * (n_comp_ + 1) / 2));
  for (Eigen::Index i = 0; i < n_comp_; ++i) {
    for (Eigen::Index j = i; j < n_comp_; ++j) {
      ff_.emplace_back(obj.fixed_covs[i] + obj.fixed_covs[j]);
    }
  }
  const auto& g = obj.desired.components;
  fg_.reserve(g.size() * static_cast<std::size_t>(n_comp_));
  for (const auto& cg : g) {
    for (Eigen::Index i = 0; i < n_comp_; ++i) {
      fg_.emplace_back(cg.cov + obj.fixed_covs[i]);
    }
  }
  gg_ = gmix::mixture_l2_inner(obj.desired, obj.desired);
}

const gmix::GaussianKernel& StageCost::ff_kernel(Eigen::Index i,
                                                 Eigen::Index j) const {
  return ff_[triangle_index(i, j, n_comp_)];
}

StageCost::Terms StageCost::terms(const VectorXd& x, const VectorXd& u) const {
  if (x.size() != state_dim()) {
    fail(ErrorCode::kDimensionMismatch, "stacked state has wrong length");
  }
  Terms t;
  if (u.size() > 0) {
    if (u.size() != control_dim()) {
      fail(ErrorCode::kDimensionMismatch, "stacked control has wrong length");
    }
    t.control = u.dot(objective_.R * u);
  }
  const auto& w = objective_.weights;
  for (Eigen::Index i = 0; i < n_comp_; ++i) {
    const VectorXd mi = x.segment(i * dim_, dim_);
    t.ff += w[i] * w[i] * std::exp(ff_kernel(i, i).log_normalizer());
    for (Eigen::Index j = i + 1; j < n_comp_; ++j) {
      t.ff += 2.0 * w[i] * w[j] *
              ff_kernel(i, j).density(mi, x.segment(j * dim_, dim_));
    }
  }
  t.gg = gg_;
  const auto& g = objective_.desired.components;
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (Eigen::Index i = 0; i < n_comp_; ++i) {
      const auto& k = fg_[j * n_comp_ + i];
      const double lp = k.log_density(g[j].mean, x.segment(i * dim_, dim_));
      const double ww = g[j].weight * w[i];
      t.fg += ww * std::exp(lp);
      t.log_fg += ww * lp;
    }
  }
  return t;
}

double StageCost::value(const VectorXd& x, const VectorXd& u) const {
  const Terms t = terms(x, u);
  return t.control + t.ff + t.gg - 2.0 * t.fg - objective_.alpha * t.log_fg;
}

CostDerivatives StageCost::derivatives(const VectorXd& x, const VectorXd& u,
                                       bool project) const {
  if (x.size() != state_dim()) {
    fail(ErrorCode::kDimensionMismatch, "stacked state has wrong length");
  }
  const Eigen::Index n = state_dim();
  const auto& w = objective_.weights;
  CostDerivatives d;
  d.l_x = VectorXd::Zero(n);
  d.l_xx = MatrixXd::Zero(n, n);

  // ff: pairs i < j through δ = m_i - m_j; the diagonal terms are constant.
  for (Eigen::Index i = 0; i < n_comp_; ++i) {
    for (Eigen::Index j = i + 1; j < n_comp_; ++j) {
      const auto& k = ff_kernel(i, j);
      const VectorXd delta = x.segment(i * dim_, dim_) - x.segment(j * dim_, dim_);
      const VectorXd y = k.whiten(delta);
      const double c = 2.0 * w[i] * w[j] * std::exp(k.log_normalizer() - 0.5 * delta.dot(y));
      const MatrixXd H = c * (y * y.transpose() - k.inverse());
      d.l_x.segment(i * dim_, dim_) -= c * y;
      d.l_x.segment(j * dim_, dim_) += c * y;
      d.l_xx.block(i * dim_, i * dim_, dim_, dim_) += H;
      d.l_xx.block(j * dim_, j * dim_, dim_, dim_) += H;
      d.l_xx.block(i * dim_, j * dim_, dim_, dim_) -= H;
      d.l_xx.block(j * dim_, i * dim_, dim_, dim_) -= H;
    }
  }

  // -2 fg and -α log fg: δ = m_i - m_g.
  const double alpha = objective_.alpha;
  const auto& g = objective_.desired.components;
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (Eigen::Index i = 0; i < n_comp_; ++i) {
      const auto& k = fg_[j * n_comp_ + i];
      const VectorXd delta = x.segment(i * dim_, dim_) - g[j].mean;
      const VectorXd y = k.whiten(delta);
      const double ww = g[j].weight * w[i];
      const double psi = std::exp(k.log_normalizer() - 0.5 * delta.dot(y));
      d.l_x.segment(i * dim_, dim_) += (2.0 * ww * psi + alpha * ww) * y;
      d.l_xx.block(i * dim_, i * dim_, dim_, dim_) +=
          -2.0 * ww * psi * (y * y.transpose() - k.inverse()) + alpha * ww * k.inverse();
    }
  }
  d.l_xx = 0.5 * (d.l_xx + d.l_xx.transpose());
  d.l_xx_psd = project ? project_psd(d.l_xx) : d.l_xx;

  const MatrixXd& R = objective_.R;
  const MatrixXd Rs = R + R.transpose();
  if (u.size() > 0) {
    if (u.size() != control_dim()) {
      fail(ErrorCode::kDimensionMismatch, "stacked control has wrong length");
    }
    d.l_u = Rs * u;
    d.l_uu = Rs;
    d.l_ux = MatrixXd::Zero(R.rows(), n);
  }
  return d;
}

double running_cost(const VectorXd& x, const VectorXd& u, const RfsObjective& obj) {
  return StageCost(obj).value(x, u);
}

CostDerivatives cost_derivatives(const VectorXd& x, const VectorXd& u,
                                 const RfsObjective& obj) {
  return StageCost(obj).derivatives(x, u, true);
}

MatrixXd project_psd(const MatrixXd& H) {
  const MatrixXd S = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  if (es.info() != Eigen::Success) {
    fail(ErrorCode::kNonFinite, "eigendecomposition failed in PSD projection");
  }
  if (es.eigenvalues().minCoeff() >= 0.0) return S;
  const VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  MatrixXd P = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (P + P.transpose());
}

VectorXd stack_means(const gmix::GmIntensity& v) {
  const Eigen::Index d = v.dim();
  VectorXd x(static_cast<Eigen::Index>(v.size()) * d);
  for (std::size_t i = 0; i < v.size(); ++i) {
    x.segment(static_cast<Eigen::Index>(i) * d, d) = v.components[i].mean;
  }
  return x;
}

}  // namespace swarm::rfs

#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "swarm/rfscost.hpp"

using namespace swarm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

rfs::RfsObjective random_objective(std::mt19937_64& rng, int n_cur, int n_des, int dim,
                                   int udim, double alpha) {
  std::uniform_real_distribution<double> w(0.3, 1.5);
  rfs::RfsObjective obj;
  for (int j = 0; j < n_des; ++j) {
    obj.desired.components.push_back(
        {w(rng), oracle::random_matrix(rng, dim, 1), 0.3 * oracle::random_spd(rng, dim, 0.5)});
  }
  for (int i = 0; i < n_cur; ++i) {
    obj.fixed_covs.push_back(0.3 * oracle::random_spd(rng, dim, 0.5));
    obj.weights.push_back(w(rng));
  }
  obj.R = oracle::random_spd(rng, udim);
  obj.alpha = alpha;
  return obj;
}

}  // namespace

TEST(RfsCost, IdenticalMixturesGiveZero) {
  std::mt19937_64 rng(1);
  auto obj = random_objective(rng, 3, 3, 2, 6, 0.0);
  VectorXd x(6);
  for (int i = 0; i < 3; ++i) {
    obj.fixed_covs[i] = obj.desired.components[i].cov;
    obj.weights[i] = obj.desired.components[i].weight;
    x.segment(2 * i, 2) = obj.desired.components[i].mean;
  }
  EXPECT_NEAR(rfs::running_cost(x, VectorXd::Zero(6), obj), 0.0, 1e-12);
  const auto d = rfs::cost_derivatives(x, VectorXd::Zero(6), obj);
  EXPECT_LT(d.l_x.norm(), 1e-12);
}

TEST(RfsCost, ControlTermSeparates) {
  std::mt19937_64 rng(2);
  const auto obj = random_objective(rng, 3, 4, 2, 6, 1.0);
  const VectorXd x = oracle::random_matrix(rng, 6, 1);
  const VectorXd u = oracle::random_matrix(rng, 6, 1);
  EXPECT_NEAR(rfs::running_cost(x, u, obj) - rfs::running_cost(x, VectorXd::Zero(6), obj),
              u.dot(obj.R * u), 1e-10);
  auto obj_i = obj;
  obj_i.R = MatrixXd::Identity(6, 6);
  const auto d = rfs::cost_derivatives(x, u, obj_i);
  EXPECT_LT((d.l_u - 2.0 * u).norm(), 1e-15);
  EXPECT_LT((d.l_uu - 2.0 * MatrixXd::Identity(6, 6)).norm(), 1e-15);
  EXPECT_TRUE(d.l_ux.isZero(0));
}

TEST(RfsCost, OneDimensionalScriptedValue) {
  rfs::RfsObjective obj;
  obj.desired.components.push_back({1.0, VectorXd::Constant(1, 0.0), MatrixXd::Constant(1, 1, 0.4)});
  obj.desired.components.push_back({1.0, VectorXd::Constant(1, 1.5), MatrixXd::Constant(1, 1, 0.2)});
  obj.fixed_covs = {MatrixXd::Constant(1, 1, 0.3), MatrixXd::Constant(1, 1, 0.6)};
  obj.weights = {1.0, 0.5};
  obj.R = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  obj.alpha = 1.0;
  const VectorXd x = Eigen::Vector2d(0.2, -1.0);
  const VectorXd u = Eigen::Vector2d(0.1, -0.2);
  // Term-by-term evaluation at 30 digits.
  EXPECT_NEAR(rfs::running_cost(x, u, obj), 6.8816817470298599084, 1e-13);
}

TEST(RfsCost, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int dim = 1 + t % 3;
    const auto obj = random_objective(rng, 2 + t % 3, 2 + t % 2, dim, 3, (t % 2) ? 1.0 : 0.3);
    const rfs::StageCost sc(obj);
    const VectorXd x = oracle::random_matrix(rng, sc.state_dim(), 1);
    const VectorXd u = oracle::random_matrix(rng, 3, 1);
    const auto d = sc.derivatives(x, u, false);
    const double h = 1e-5;
    VectorXd fd(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fd(i) = (sc.value(xp, u) - sc.value(xm, u)) / (2 * h);
    }
    worst = std::max(worst, (d.l_x - fd).norm() / std::max(1.0, fd.norm()));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(RfsCost, HessianMatchesDifferencedGradient) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto obj = random_objective(rng, 3, 3, 2, 3, 0.7);
    const rfs::StageCost sc(obj);
    const VectorXd x = oracle::random_matrix(rng, sc.state_dim(), 1);
    const auto d = sc.derivatives(x, VectorXd::Zero(3), true);
    const double h = 1e-5;
    MatrixXd fd(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fd.col(i) = (sc.derivatives(xp, VectorXd::Zero(3), false).l_x -
                   sc.derivatives(xm, VectorXd::Zero(3), false).l_x) / (2 * h);
    }
    EXPECT_LT((d.l_xx - fd).norm() / std::max(1.0, fd.norm()), 1e-5);
    EXPECT_LT((d.l_xx - d.l_xx.transpose()).norm(), 1e-10);
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(d.l_xx_psd).eigenvalues().minCoeff();
    EXPECT_GE(min_eig, -1e-12);
  }
}

TEST(RfsCost, PermutationInvariantWithoutLogTerm) {
  std::mt19937_64 rng(5);
  auto obj = random_objective(rng, 3, 3, 2, 6, 0.0);
  // Equal weights and covariances so relabelling is a symmetry.
  for (auto& P : obj.fixed_covs) P = obj.fixed_covs.front();
  for (auto& w : obj.weights) w = 1.0;
  obj.R = Eigen::VectorXd::LinSpaced(6, 1.0, 2.0).asDiagonal();
  obj.R.block(2, 2, 2, 2) = obj.R.block(0, 0, 2, 2);
  obj.R.block(4, 4, 2, 2) = obj.R.block(0, 0, 2, 2);
  const VectorXd x = oracle::random_matrix(rng, 6, 1);
  const VectorXd u = oracle::random_matrix(rng, 6, 1);
  VectorXd xp(6), up(6);
  const int perm[3] = {2, 0, 1};
  for (int i = 0; i < 3; ++i) {
    xp.segment(2 * i, 2) = x.segment(2 * perm[i], 2);
    up.segment(2 * i, 2) = u.segment(2 * perm[i], 2);
  }
  EXPECT_NEAR(rfs::running_cost(x, u, obj), rfs::running_cost(xp, up, obj), 1e-12);
}

TEST(ProjectPsd, ClipsNegativeEigenvalues) {
  MatrixXd H(2, 2);
  H << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  const MatrixXd P = rfs::project_psd(H);
  MatrixXd expected(2, 2);
  expected << 1.5, 1.5, 1.5, 1.5;
  EXPECT_LT((P - expected).norm(), 1e-14);
}

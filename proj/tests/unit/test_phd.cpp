#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "swarm/dynamics.hpp"
#include "swarm/error.hpp"
#include "swarm/phd.hpp"

using namespace swarm;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using gmix::GaussianComponent;
using gmix::GmIntensity;

namespace {

dynamics::LinearPlant cw(double q = 1e-6, double r = 1e-2) {
  return dynamics::cw_plant(1.1314e-3, 10.0, q * MatrixXd::Identity(6, 6),
                            r * MatrixXd::Identity(3, 3));
}

phd::SensorModel sensor_for(const dynamics::LinearPlant& p, double pd, double clutter) {
  phd::SensorModel s;
  s.pd = pd;
  s.clutter_rate = clutter;
  s.region_lo = Eigen::Vector3d::Constant(-10.0);
  s.region_hi = Eigen::Vector3d::Constant(10.0);
  s.H = p.H;
  s.Rn = p.Rn;
  return s;
}

GmIntensity components(int n, double w = 1.0) {
  GmIntensity v;
  for (int i = 0; i < n; ++i) {
    v.components.push_back({w, VectorXd::Constant(6, 3.0 * i), MatrixXd::Identity(6, 6) * 0.1});
  }
  return v;
}

}  // namespace

TEST(PhdPredict, MassIdentity) {
  const auto plant = cw();
  phd::BirthModel birth;
  birth.birth.components.push_back({0.2, VectorXd::Zero(6), MatrixXd::Identity(6, 6)});
  phd::SpawnTemplate tpl{0.05, VectorXd::Constant(6, 0.1), MatrixXd::Identity(6, 6) * 0.01};
  birth.spawn_templates = {tpl, tpl};
  phd::PhdConfig cfg;
  cfg.ps = 0.99;

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> w(0.0, 2.0);
  GmIntensity v;
  for (int i = 0; i < 12; ++i) {
    v.components.push_back({w(rng), oracle::random_matrix(rng, 6, 1), oracle::random_spd(rng, 6)});
  }
  const std::vector<VectorXd> u(v.size(), VectorXd::Zero(3));
  const auto out = phd::phd_predict(v, u, plant, birth, cfg);
  const double expected = 0.2 + cfg.ps * v.mass() + 2 * 0.05 * v.mass();
  EXPECT_NEAR(out.mass(), expected, 1e-12);
  EXPECT_EQ(out.size(), v.size() * 3 + 1);
}

TEST(PhdPredict, Examples) {
  const auto plant = cw();
  phd::PhdConfig cfg;
  auto v = components(12);
  std::vector<VectorXd> u(12, VectorXd::Zero(3));
  EXPECT_EQ(phd::phd_predict(v, u, plant, {}, cfg).mass(), 12.0);

  cfg.ps = 0.99;
  phd::BirthModel birth;
  birth.birth.components.push_back({0.2, VectorXd::Zero(6), MatrixXd::Identity(6, 6)});
  EXPECT_NEAR(phd::phd_predict(v, u, plant, birth, cfg).mass(), 12.08, 1e-12);

  auto v2 = components(2);
  birth.spawn_templates.push_back({0.1, VectorXd::Zero(6), MatrixXd::Identity(6, 6)});
  std::vector<VectorXd> u2(2, VectorXd::Zero(3));
  EXPECT_EQ(phd::phd_predict(v2, u2, plant, birth, cfg).size(), 2u * 2u + 1u);
  EXPECT_THROW(phd::phd_predict(v2, u, plant, birth, cfg), Error);
}

TEST(PhdUpdate, MissedDetectionOnly) {
  const auto plant = cw();
  const auto s = sensor_for(plant, 0.3, 0.0);
  const auto v = components(3, 0.8);
  const auto out = phd::phd_update(v, {}, s);
  ASSERT_EQ(out.size(), 3u);
  for (const auto& c : out.components) EXPECT_NEAR(c.weight, 0.7 * 0.8, 1e-15);
}

TEST(PhdUpdate, TwoComponentsTwoMeasurementsWeightTable) {
  const auto plant = cw(1e-6, 0.05);
  const auto s = sensor_for(plant, 0.9, 1.0);
  GmIntensity v;
  v.components.push_back({0.8, VectorXd::Zero(6), MatrixXd::Identity(6, 6) * 0.2});
  VectorXd m2 = VectorXd::Zero(6);
  m2.head(3) << 1.0, -0.5, 0.2;
  v.components.push_back({0.6, m2, MatrixXd::Identity(6, 6) * 0.3});
  std::vector<VectorXd> Z{Eigen::Vector3d(0.1, 0.0, -0.1), Eigen::Vector3d(0.9, -0.4, 0.3)};

  const auto out = phd::phd_update(v, Z, s);
  ASSERT_EQ(out.size(), 6u);
  const double kappa = 1.0 / 8000.0;
  for (std::size_t zi = 0; zi < 2; ++zi) {
    double q[2];
    for (int j = 0; j < 2; ++j) {
      const auto& c = v.components[static_cast<std::size_t>(j)];
      const MatrixXd S = s.H * c.cov * s.H.transpose() + s.Rn;
      const VectorXd d = Z[zi] - s.H * c.mean;
      q[j] = 0.9 * c.weight * std::exp(-0.5 * d.dot(S.inverse() * d)) /
             std::sqrt(std::pow(2.0 * std::numbers::pi, 3) * S.determinant());
    }
    double total = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double w = q[j] / (kappa + q[0] + q[1]);
      EXPECT_NEAR(out.components[2 + 2 * zi + static_cast<std::size_t>(j)].weight, w, 1e-12);
      total += out.components[2 + 2 * zi + static_cast<std::size_t>(j)].weight;
    }
    EXPECT_LE(total, 1.0);
  }
  EXPECT_LE(out.mass(), 0.1 * v.mass() + 2.0 + 1e-12);
}

TEST(PhdFilter, MatchesKalmanFilterOver50Steps) {
  const auto plant = cw(1e-6, 1e-2);
  const auto s = sensor_for(plant, 1.0, 0.0);
  phd::PhdConfig cfg;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);

  VectorXd x = VectorXd::Zero(6);
  x.head(3) << 0.5, -0.2, 0.1;
  VectorXd m = VectorXd::Zero(6);
  MatrixXd P = MatrixXd::Identity(6, 6);
  GmIntensity v;
  v.components.push_back({1.0, m, P});

  double worst_m = 0.0, worst_P = 0.0;
  for (int k = 0; k < 50; ++k) {
    const VectorXd u = Eigen::Vector3d(1e-4 * std::sin(k), 0.0, -1e-4);
    x = plant.A * x + plant.B * u;
    VectorXd z = plant.H * x;
    for (int i = 0; i < 3; ++i) z(i) += 0.1 * n(rng);

    // Kalman filter
    m = plant.A * m + plant.B * u;
    P = plant.A * P * plant.A.transpose() + plant.Qn;
    const MatrixXd S = plant.H * P * plant.H.transpose() + plant.Rn;
    const MatrixXd K = P * plant.H.transpose() * S.inverse();
    m = m + K * (z - plant.H * m);
    P = (MatrixXd::Identity(6, 6) - K * plant.H) * P;

    // GM-PHD
    v = phd::phd_predict(v, {u}, plant, {}, cfg);
    v = phd::phd_update(v, {z}, s);
    v = phd::prune_merge(v, cfg);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NEAR(v.components[0].weight, 1.0, 1e-12);
    worst_m = std::max(worst_m, (v.components[0].mean - m).cwiseAbs().maxCoeff());
    worst_P = std::max(worst_P, (v.components[0].cov - P).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst_m, 1e-10);
  EXPECT_LT(worst_P, 1e-10);
}

TEST(PruneMerge, Examples) {
  phd::PhdConfig cfg;
  const auto far = components(4);
  const auto same = phd::prune_merge(far, cfg);
  EXPECT_EQ(same.size(), 4u);
  EXPECT_EQ(same.mass(), far.mass());

  GmIntensity twins;
  twins.components.push_back({0.5, VectorXd::Ones(6), MatrixXd::Identity(6, 6)});
  twins.components.push_back({0.5, VectorXd::Ones(6), MatrixXd::Identity(6, 6)});
  const auto merged = phd::prune_merge(twins, cfg);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_DOUBLE_EQ(merged.components[0].weight, 1.0);
  EXPECT_LT((merged.components[0].mean - VectorXd::Ones(6)).norm(), 1e-15);
  EXPECT_LT((merged.components[0].cov - MatrixXd::Identity(6, 6)).norm(), 1e-15);

  auto three = components(3);
  three.components[1].weight = 1e-9;
  const auto pruned = phd::prune_merge(three, cfg);
  EXPECT_EQ(pruned.size(), 2u);
  EXPECT_NEAR(three.mass() - pruned.mass(), 1e-9, 1e-15);
}

TEST(PruneMerge, IdempotentOnClusteredMixtures) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> w(1e-6, 1.0);
  std::normal_distribution<double> off(0.0, 0.8);
  phd::PhdConfig cfg;
  cfg.max_components = 15;
  for (int t = 0; t < 30; ++t) {
    GmIntensity v;
    for (int i = 0; i < 40; ++i) {
      VectorXd m = VectorXd::Zero(6);
      m(0) = (i % 5) * 2.0 + off(rng);
      m(1) = off(rng);
      v.components.push_back({w(rng), m, MatrixXd::Identity(6, 6) * 0.5});
    }
    const auto once = phd::prune_merge(v, cfg);
    const auto twice = phd::prune_merge(once, cfg);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      EXPECT_EQ(once.components[i].weight, twice.components[i].weight);
      EXPECT_EQ(once.components[i].mean, twice.components[i].mean);
      EXPECT_EQ(once.components[i].cov, twice.components[i].cov);
    }
    EXPECT_LE(once.size(), cfg.max_components);
  }
}

TEST(ExtractStates, RoundingRule) {
  phd::PhdConfig cfg;
  GmIntensity v;
  v.components.push_back({1.0, VectorXd::Ones(6), MatrixXd::Identity(6, 6)});
  EXPECT_EQ(phd::extract_states(v, cfg).size(), 1u);
  v.components[0].weight = 0.2;
  EXPECT_TRUE(phd::extract_states(v, cfg).empty());
  v.components[0].weight = 2.4;
  EXPECT_EQ(phd::extract_states(v, cfg).size(), 2u);
  v.components[0].weight = 2.6;
  EXPECT_EQ(phd::extract_states(v, cfg).size(), 3u);
}

TEST(ExpectedCount, Values) {
  EXPECT_EQ(phd::expected_count({}), 0.0);
  GmIntensity v;
  v.components.push_back({0.5, VectorXd::Ones(1), MatrixXd::Identity(1, 1)});
  v.components.push_back({0.5, VectorXd::Ones(1), MatrixXd::Identity(1, 1)});
  EXPECT_EQ(phd::expected_count(v), 1.0);
  EXPECT_EQ(phd::expected_count(components(12)), 12.0);
}

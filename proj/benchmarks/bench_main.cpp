#include <benchmark/benchmark.h>

#include <random>

#include "swarm/dynamics.hpp"
#include "swarm/mateq.hpp"
#include "swarm/phd.hpp"
#include "swarm/rfscost.hpp"
#include "swarm/sparselqr.hpp"

using namespace swarm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n;
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

MatrixXd spd(std::mt19937_64& rng, Eigen::Index n) {
  const MatrixXd m = random(rng, n, n);
  return m * m.transpose() / static_cast<double>(n) + MatrixXd::Identity(n, n);
}

dynamics::LinearPlant cw() {
  return dynamics::cw_plant(1.1314e-3, 10.0, 1e-12 * MatrixXd::Identity(6, 6),
                            1e-6 * MatrixXd::Identity(3, 3));
}

// The 12-agent sparse LQR problem shape: 72 states, 36 inputs.
sparse::SparseLqrProblem swarm_problem(int agents) {
  const auto plant = dynamics::build_swarm_plant(cw(), agents);
  std::mt19937_64 rng(1);
  const auto n = plant.state_dim(), m = plant.control_dim();
  return {plant.A, plant.B, MatrixXd::Identity(n, n), 1e-3 * spd(rng, n),
          MatrixXd::Identity(m, m), sparse::TimeMode::kDiscrete,
          {agents, 3, 6}};
}

}  // namespace

static void BM_ContinuousLyapunov(benchmark::State& st) {
  const auto n = st.range(0);
  std::mt19937_64 rng(2);
  MatrixXd A = random(rng, n, n);
  A.diagonal().array() -= 2.0 * std::sqrt(static_cast<double>(n));
  const MatrixXd Q = spd(rng, n);
  for (auto _ : st) benchmark::DoNotOptimize(mateq::solve_continuous_lyapunov(A, Q));
}
BENCHMARK(BM_ContinuousLyapunov)->Arg(6)->Arg(24)->Arg(72);

static void BM_DiscreteLyapunov(benchmark::State& st) {
  const auto n = st.range(0);
  std::mt19937_64 rng(3);
  MatrixXd A = random(rng, n, n);
  A *= 0.5 / A.norm();
  const MatrixXd Q = spd(rng, n);
  for (auto _ : st) benchmark::DoNotOptimize(mateq::solve_discrete_lyapunov(A, Q));
}
BENCHMARK(BM_DiscreteLyapunov)->Arg(6)->Arg(24)->Arg(72);

static void BM_EvaluateGain(benchmark::State& st) {
  const auto prob = swarm_problem(static_cast<int>(st.range(0)));
  const MatrixXd F = sparse::centralized_gain(prob).F;
  for (auto _ : st) benchmark::DoNotOptimize(sparse::evaluate_gain(F, prob));
}
BENCHMARK(BM_EvaluateGain)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_FMinStep(benchmark::State& st) {
  const auto prob = swarm_problem(static_cast<int>(st.range(0)));
  const MatrixXd F = sparse::centralized_gain(prob).F;
  const MatrixXd G = sparse::g_min_shrinkage(F, 1e-3, 100.0, MatrixXd::Ones(F.rows(), F.cols()));
  const MatrixXd Lam = MatrixXd::Zero(F.rows(), F.cols());
  for (auto _ : st) benchmark::DoNotOptimize(sparse::f_min_step(prob, G, Lam, F, 100.0));
}
BENCHMARK(BM_FMinStep)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_PhdUpdate(benchmark::State& st) {
  const auto plant = cw();
  const int targets = static_cast<int>(st.range(0));
  std::mt19937_64 rng(4);
  phd::SensorModel s;
  s.pd = 0.95;
  s.clutter_rate = 2.0;
  s.region_lo = VectorXd::Constant(3, -3.0);
  s.region_hi = VectorXd::Constant(3, 3.0);
  s.H = plant.H;
  s.Rn = plant.Rn;
  phd::GmIntensity v;
  std::vector<VectorXd> Z;
  for (int i = 0; i < targets; ++i) {
    const VectorXd m = random(rng, 6, 1);
    v.components.push_back({1.0, m, 1e-2 * MatrixXd::Identity(6, 6)});
    Z.push_back(plant.H * m + 1e-3 * random(rng, 3, 1));
  }
  Z.push_back(VectorXd::Constant(3, 2.5));
  Z.push_back(VectorXd::Constant(3, -2.5));
  phd::PhdConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(phd::prune_merge(phd::phd_update(v, Z, s), cfg));
}
BENCHMARK(BM_PhdUpdate)->Arg(4)->Arg(12)->Arg(48);

static void BM_RfsDerivatives(benchmark::State& st) {
  const int agents = static_cast<int>(st.range(0));
  std::mt19937_64 rng(5);
  rfs::RfsObjective obj;
  VectorXd d(6);
  d << 0.02, 0.02, 0.02, 1e-4, 1e-4, 1e-4;
  const MatrixXd P = d.asDiagonal();
  for (int i = 0; i < agents; ++i) {
    obj.desired.components.push_back({1.0, random(rng, 6, 1), P});
    obj.fixed_covs.push_back(P);
    obj.weights.push_back(1.0);
  }
  obj.R = MatrixXd::Identity(3 * agents, 3 * agents);
  const rfs::StageCost sc(obj);
  const VectorXd x = random(rng, 6 * agents, 1);
  const VectorXd u = VectorXd::Zero(3 * agents);
  for (auto _ : st) benchmark::DoNotOptimize(sc.derivatives(x, u, true));
}
BENCHMARK(BM_RfsDerivatives)->Arg(4)->Arg(12);
BENCHMARK_MAIN();

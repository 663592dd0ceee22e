#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "swarm/error.hpp"
#include "swarm/export.hpp"
#include "swarm/scenario.hpp"
#include "swarm/sim.hpp"

using namespace swarm;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_config(int n_agents = 2, int horizon = 8) {
  ScenarioConfig c;
  c.n_agents = n_agents;
  c.horizon = horizon;
  c.control_weight = 1e13;
  c.formation.position_sigma = c.agent_position_sigma = 0.25;
  c.formation.velocity_sigma = c.agent_velocity_sigma = 0.01;
  c.ilqr.max_iter = 4;
  c.gamma_list = {0.0};
  return c;
}

phd::SensorModel sensor3(double pd, double clutter) {
  phd::SensorModel s;
  s.pd = pd;
  s.clutter_rate = clutter;
  s.region_lo = VectorXd::Constant(3, -3.0);
  s.region_hi = VectorXd::Constant(3, 3.0);
  s.H = MatrixXd::Zero(3, 6);
  s.H.leftCols(3).setIdentity();
  s.Rn = 1e-6 * MatrixXd::Identity(3, 3);
  return s;
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("swarm_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Measurements, CountStatistics) {
  const std::vector<VectorXd> truth(5, VectorXd::Zero(6));
  const auto s = sensor3(0.9, 2.0);
  auto rng = sim::make_stream(7, 2);
  const int scans = 10000;
  double sum = 0.0;
  for (int i = 0; i < scans; ++i) sum += static_cast<double>(sim::generate_measurements(truth, s, rng).size());
  const double mean = sum / scans;
  const double expected = 5 * 0.9 + 2.0;
  const double sd = std::sqrt((5 * 0.9 * 0.1 + 2.0) / scans);
  EXPECT_NEAR(mean, expected, 3.0 * sd);
}

TEST(Measurements, ClutterInsideRegion) {
  const auto s = sensor3(0.0, 20.0);
  auto rng = sim::make_stream(8, 2);
  for (int i = 0; i < 200; ++i) {
    for (const auto& z : sim::generate_measurements({}, s, rng)) {
      EXPECT_TRUE((z.array() >= -3.0).all() && (z.array() <= 3.0).all());
    }
  }
}

TEST(Measurements, DegenerateDetectionProbabilities) {
  std::vector<VectorXd> truth(4, VectorXd::Zero(6));
  auto rng = sim::make_stream(9, 2);
  EXPECT_EQ(sim::generate_measurements(truth, sensor3(1.0, 0.0), rng).size(), 4u);
  EXPECT_TRUE(sim::generate_measurements(truth, sensor3(0.0, 0.0), rng).empty());
}

TEST(Streams, IndependentAndReproducible) {
  auto a = sim::make_stream(1, 0), b = sim::make_stream(1, 0), c = sim::make_stream(1, 1);
  const auto va = a(), vb = b(), vc = c();
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
}

TEST(InformationGraph, Examples) {
  const BlockPartition p{3, 1, 2};
  FeedbackGain g{MatrixXd::Zero(3, 6), Pattern::Constant(3, 6, false), p};
  g.F(0, 0) = 1.0;  // agent 0 uses itself
  g.F(0, 4) = 2.0;  // agent 0 uses agent 2
  g.F(2, 3) = -1.0; // agent 2 uses agent 1
  g.pattern = g.F.array() != 0.0;
  const auto adj = sim::information_graph(g, p);
  Eigen::MatrixXi expected(3, 3);
  expected << 1, 0, 1,
              0, 0, 0,
              0, 1, 0;
  EXPECT_EQ(adj, expected);
  EXPECT_EQ(sim::edge_count(adj), 2);

  const auto full = FeedbackGain::dense(MatrixXd::Ones(3, 6), p);
  EXPECT_EQ(sim::edge_count(sim::information_graph(full, p)), 6);
  EXPECT_THROW(sim::information_graph(full, BlockPartition{2, 1, 2}), Error);
}

TEST(Formation, StarRingsRotate) {
  ScenarioConfig c;
  c.n_agents = 4;
  c.formation.radius = 2.0;
  const auto g0 = sim::desired_formation(c, 0.1, 0.0);
  ASSERT_EQ(g0.components.size(), 4u);
  EXPECT_NEAR(g0.components[0].mean.head(3).norm(), 2.0, 1e-14);
  EXPECT_NEAR(g0.components[1].mean.head(3).norm(), 1.0, 1e-14);
  // Tangential velocity of magnitude spin·radius.
  EXPECT_NEAR(g0.components[0].mean.tail(3).norm(), 0.2, 1e-14);
  EXPECT_NEAR(g0.components[0].mean.head(3).dot(g0.components[0].mean.tail(3)), 0.0, 1e-14);
  const auto g1 = sim::desired_formation(c, 0.1, 5.0);
  EXPECT_NEAR(std::atan2(g1.components[0].mean(1), g1.components[0].mean(0)), 0.5, 1e-12);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(parse_config(R"({"n_agents": 3, "bogus": 1})"), Error);
  EXPECT_THROW(parse_config(R"({"admm": {"rho": 1, "nope": 2}})"), Error);
  try {
    parse_config(R"({"sensor": {"pdd": 0.5}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config(R"({"n_agents": 0})"), Error);
  EXPECT_THROW(parse_config(R"({"gamma_list": [0.1, 0.2]})"), Error);
  EXPECT_THROW(parse_config(R"({"gamma_list": [0, 0.2, 0.1]})"), Error);
  EXPECT_THROW(parse_config(R"({"loop_mode": "telepathy"})"), Error);
  EXPECT_THROW(parse_config("{not json"), Error);
}

TEST(Config, RoundTrip) {
  const auto c = parse_config(R"({"n_agents": 5, "gamma_list": [0, 1e-19, 0.7],
                                  "loop_mode": "phd_estimate", "seed": 99,
                                  "admm": {"penalty": "nnz"}})");
  EXPECT_EQ(c.n_agents, 5);
  EXPECT_EQ(c.loop_mode, LoopMode::kPhdEstimate);
  EXPECT_EQ(c.admm.penalty, sparse::Penalty::kCardinality);
  EXPECT_EQ(c.gamma_list[1], 1e-19);
  EXPECT_EQ(config_to_json(parse_config(config_to_json(c))), config_to_json(c));
}

TEST(Config, ShippedScenariosValidate) {
  const char* dir = std::getenv("SWARM_CONFIG_DIR");
  ASSERT_NE(dir, nullptr);
  int n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(validate(load_config(entry.path()))) << entry.path();
    ++n;
  }
  EXPECT_GT(n, 0);
}

TEST(Export, CsvRoundTripIsBitwise) {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> nd;
  MatrixXd M(7, 5);
  for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = nd(rng) * std::pow(10.0, (i % 9) - 4);
  M(0, 0) = 0.1;
  M(1, 1) = -0.0;
  M(2, 2) = 1e-300;
  const auto dir = temp_dir("csv");
  fs::create_directories(dir);
  write_matrix_csv(M, dir / "m.csv");
  const MatrixXd back = read_matrix_csv(dir / "m.csv");
  ASSERT_EQ(back.rows(), 7);
  ASSERT_EQ(back.cols(), 5);
  EXPECT_EQ(std::memcmp(back.data(), M.data(), sizeof(double) * M.size()), 0);
  fs::remove_all(dir);
}

TEST(Scenario, SingleAgentHasNoEdges) {
  auto c = small_config(1, 6);
  c.gamma_list = {0.0, 1e-8};
  const auto res = sim::run_scenario(c);
  ASSERT_EQ(res.records.size(), 2u);
  for (const auto& r : res.records) {
    ASSERT_FALSE(r.failed) << r.error;
    EXPECT_EQ(r.edges, 0);
    EXPECT_EQ(r.adjacency.rows(), 1);
  }
  EXPECT_EQ(res.records[0].nnz_ratio, 1.0);
  EXPECT_EQ(res.records[0].J_ratio, 0.0);
}

TEST(Scenario, SolverFailureIsFlaggedPerEntry) {
  // A huge penalty leaves a pattern that cannot stabilize the single agent;
  // the entry is flagged and the run still completes.
  auto c = small_config(1, 6);
  c.gamma_list = {0.0, 1e-3};
  const auto res = sim::run_scenario(c);
  ASSERT_EQ(res.records.size(), 2u);
  EXPECT_FALSE(res.records[0].failed);
  if (res.records[1].failed) EXPECT_FALSE(res.records[1].error.empty());
}

TEST(Scenario, ExportsFullGainAndIsDeterministic) {
  auto c = small_config(12, 4);
  c.ilqr.max_iter = 2;
  const auto a = sim::run_scenario(c);
  const auto b = sim::run_scenario(c);
  EXPECT_EQ(summary_json(a), summary_json(b));

  const auto da = temp_dir("det_a"), db = temp_dir("det_b");
  export_results(a, da);
  export_results(b, db);
  const MatrixXd F = read_matrix_csv(da / "gamma_00_gain.csv");
  EXPECT_EQ(F.rows(), 36);
  EXPECT_EQ(F.cols(), 72);
  EXPECT_EQ(std::memcmp(F.data(), a.records[0].gain.F.data(), sizeof(double) * F.size()), 0);
  for (const char* f : {"summary.json", "gamma_00_gain.csv", "gamma_00_pattern.txt",
                        "gamma_00_adjacency.csv", "gamma_00_trajectory.csv"}) {
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
  }
  fs::remove_all(da);
  fs::remove_all(db);

  auto c2 = c;
  c2.seed = 2;
  EXPECT_NE(sim::run_scenario(c2).x0, a.x0);
}

TEST(Scenario, PhdEstimateMatchesTrueStateWithPreciseSensor) {
  auto c = small_config(3, 10);
  c.measurement_sigma = 1e-7;
  c.process_velocity_sigma = 0.0;
  c.sensor.pd = 1.0;
  c.sensor.clutter_rate = 0.0;
  const auto truth = sim::run_scenario(c);
  c.loop_mode = LoopMode::kPhdEstimate;
  const auto est = sim::run_scenario(c);
  const auto& s1 = truth.records[0].rollout.states;
  const auto& s2 = est.records[0].rollout.states;
  ASSERT_EQ(s1.size(), s2.size());
  for (std::size_t k = 0; k < s1.size(); ++k) {
    EXPECT_LT((s1[k] - s2[k]).cwiseAbs().maxCoeff(), 1e-6) << "step " << k;
  }
}

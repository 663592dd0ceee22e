#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "swarm/gain.hpp"
#include "swarm/phd.hpp"
#include "swarm/rfscost.hpp"
#include "swarm/scenario.hpp"
#include "swarm/sparselqr.hpp"

namespace swarm::sim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using Rng = std::mt19937_64;

/// Independent generator for one purpose (init, process, measurement) derived
/// from the scenario seed.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Detects each agent with probability pd (H x + N(0, Rn)), adds
/// Poisson(clutter_rate) uniform clutter over the region, then shuffles.
std::vector<VectorXd> generate_measurements(const std::vector<VectorXd>& true_states,
                                            const phd::SensorModel& sensor, Rng& rng);

/// adjacency(i, j) = 1 iff agent i's control rows use agent j's state columns
/// (edge j → i). Diagonal entries are self-loops.
Eigen::MatrixXi information_graph(const FeedbackGain& F, const BlockPartition& partition);

/// Off-diagonal edge count.
int edge_count(const Eigen::MatrixXi& adjacency);

/// Desired mixture at time t.
gmix::GmIntensity desired_formation(const ScenarioConfig& cfg, double spin_rate, double t);

struct Rollout {
  std::vector<VectorXd> states;    // N + 1 stacked true states
  std::vector<VectorXd> controls;  // N
  double rfs_cost = 0.0;           // RFS objective along the rollout
  double distance_initial = 0.0;   // ‖f - g‖² at step 0
  double distance_final = 0.0;     // ‖f - g‖² at step N
};

struct GammaRecord {
  double gamma = 0.0;
  bool failed = false;
  std::string error;
  FeedbackGain gain;
  long nnz = 0;
  double nnz_ratio = 0.0;
  double J = 0.0;        // trace cost of the polished gain
  double J_ratio = 0.0;  // (J - J_c) / J_c
  double J_admm = 0.0;
  int admm_iterations = 0;
  bool admm_converged = false;
  bool polish_stalled = false;
  Eigen::MatrixXi adjacency;
  int edges = 0;
  Rollout rollout;
  double rollout_cost_ratio = 0.0;  // rollout RFS cost relative to the γ=0 entry
};

struct ScenarioResult {
  ScenarioConfig config;
  double orbital_rate = 0.0;
  double spin_rate = 0.0;
  double lqr_scale = 1.0;  // (Q, R) of the sparse problem were divided by this
  VectorXd x0;

  // Nominal trajectory.
  ilqr::Trajectory nominal;
  int ilqr_iterations = 0;
  bool ilqr_converged = false;
  std::vector<double> ilqr_cost_history;
  double nominal_distance_initial = 0.0;
  double nominal_distance_final = 0.0;

  sparse::SparseLqrProblem problem;  // the sparsified LQR problem

  // Centralized baseline (Riccati gain of the sparse problem, γ = 0 entry).
  FeedbackGain K_c;
  double J_c = 0.0;
  // Terminal ILQR gain, F = -K_{N-1}; J is NaN if it does not stabilize.
  FeedbackGain K_ilqr;
  double J_ilqr = 0.0;

  std::vector<GammaRecord> records;
  double seconds_ilqr = 0.0;
  double seconds_sweep = 0.0;
  double seconds_rollout = 0.0;
};

/// Closed loop u_k = u_ref,k - F (x̂_k - x_ref,k) about the nominal
/// trajectory, with process noise on the true states. x̂ is the true state or
/// the PHD estimate depending on cfg.loop_mode.
Rollout closed_loop(const ScenarioConfig& cfg, const dynamics::SwarmPlant& plant,
                    const ilqr::Trajectory& nominal, const MatrixXd& F,
                    const std::vector<rfs::StageCost>& stages);

ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace swarm::sim

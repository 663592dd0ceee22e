#include "swarm/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "swarm/dynamics.hpp"
#include "swarm/error.hpp"
#include "swarm/ilqr.hpp"
#include "swarm/sparselqr.hpp"

namespace swarm::sim {

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kProcessStream = 1;
constexpr std::uint64_t kMeasurementStream = 2;
constexpr Eigen::Index kAgentDim = 6;
constexpr Eigen::Index kControlDim = 3;
constexpr double kStateWeightFloor = 1e-4;  // relative to the largest eigenvalue

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MatrixXd agent_cov(double pos_sigma, double vel_sigma) {
  Eigen::VectorXd d(kAgentDim);
  d << Eigen::Vector3d::Constant(pos_sigma * pos_sigma),
      Eigen::Vector3d::Constant(vel_sigma * vel_sigma);
  return d.asDiagonal();
}

VectorXd agent_block(const VectorXd& x, int i) {
  return x.segment(i * kAgentDim, kAgentDim);
}

std::vector<VectorXd> split_agents(const VectorXd& x, int n) {
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(agent_block(x, i));
  return out;
}

double sequence_cost(const std::vector<VectorXd>& states,
                     const std::vector<VectorXd>& controls,
                     const std::vector<rfs::StageCost>& stages) {
  double J = 0.0;
  for (std::size_t k = 0; k < controls.size(); ++k) J += stages[k].value(states[k], controls[k]);
  return J + stages.back().value(states.back(), VectorXd());
}

struct Plants {
  dynamics::LinearPlant agent;
  dynamics::SwarmPlant swarm;
};

Plants build_plants(const ScenarioConfig& cfg, double n) {
  const MatrixXd Qn = agent_cov(cfg.process_position_sigma, cfg.process_velocity_sigma);
  const MatrixXd Rn = cfg.measurement_sigma * cfg.measurement_sigma *
                      MatrixXd::Identity(3, 3);
  Plants p;
  p.agent = dynamics::cw_plant(n, cfg.dt, Qn, Rn);
  p.swarm = dynamics::build_swarm_plant(p.agent, cfg.n_agents);
  return p;
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x5eedu};
  return Rng(seq);
}

std::vector<VectorXd> generate_measurements(const std::vector<VectorXd>& true_states,
                                            const phd::SensorModel& sensor, Rng& rng) {
  const auto mdim = sensor.H.rows();
  std::vector<VectorXd> Z;
  std::bernoulli_distribution detect(std::clamp(sensor.pd, 0.0, 1.0));
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::LLT<MatrixXd> noise(sensor.Rn);
  for (const auto& x : true_states) {
    if (!detect(rng)) continue;
    VectorXd e(mdim);
    for (Eigen::Index i = 0; i < mdim; ++i) e(i) = normal(rng);
    Z.push_back(sensor.H * x + noise.matrixL() * e);
  }
  if (sensor.clutter_rate > 0.0) {
    std::poisson_distribution<int> count(sensor.clutter_rate);
    const int nc = count(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 0; c < nc; ++c) {
      VectorXd z(mdim);
      for (Eigen::Index i = 0; i < mdim; ++i) {
        z(i) = sensor.region_lo(i) + unit(rng) * (sensor.region_hi(i) - sensor.region_lo(i));
      }
      Z.push_back(std::move(z));
    }
  }
  std::shuffle(Z.begin(), Z.end(), rng);
  return Z;
}

Eigen::MatrixXi information_graph(const FeedbackGain& F, const BlockPartition& p) {
  if (p.n_agents < 1 || F.F.rows() != p.n_agents * p.control_dim ||
      F.F.cols() != p.n_agents * p.state_dim || F.pattern.rows() != F.F.rows() ||
      F.pattern.cols() != F.F.cols()) {
    fail(ErrorCode::kDimensionMismatch, "gain does not match the block partition");
  }
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(p.n_agents, p.n_agents);
  for (int i = 0; i < p.n_agents; ++i) {
    for (int j = 0; j < p.n_agents; ++j) {
      const auto rows = i * p.control_dim, cols = j * p.state_dim;
      const auto blk = F.F.block(rows, cols, p.control_dim, p.state_dim);
      const auto pat = F.pattern.block(rows, cols, p.control_dim, p.state_dim);
      adj(i, j) = (pat.array() && (blk.array() != 0.0)).any() ? 1 : 0;
    }
  }
  return adj;
}

int edge_count(const Eigen::MatrixXi& adjacency) {
  return adjacency.sum() - adjacency.diagonal().sum();
}

gmix::GmIntensity desired_formation(const ScenarioConfig& cfg, double spin, double t) {
  const auto& f = cfg.formation;
  const MatrixXd P = agent_cov(f.position_sigma, f.velocity_sigma);
  gmix::GmIntensity out;
  if (f.kind == FormationConfig::Kind::kExplicit) {
    for (const auto& m : f.means) {
      out.components.push_back({1.0, Eigen::Map<const VectorXd>(m.data(), 6), P});
    }
    return out;
  }
  // Two interleaved rings, alternating radius r and r/2, rotating about z.
  const int points = f.points > 0 ? f.points : cfg.n_agents;
  for (int k = 0; k < points; ++k) {
    const double rho = (k % 2 == 0) ? f.radius : 0.5 * f.radius;
    const double th = 2.0 * std::numbers::pi * k / points + spin * t;
    VectorXd m(6);
    m << rho * std::cos(th), rho * std::sin(th), 0.0,
        -spin * rho * std::sin(th), spin * rho * std::cos(th), 0.0;
    out.components.push_back({1.0, std::move(m), P});
  }
  return out;
}

Rollout closed_loop(const ScenarioConfig& cfg, const dynamics::SwarmPlant& plant,
                    const ilqr::Trajectory& nominal, const MatrixXd& F,
                    const std::vector<rfs::StageCost>& stages) {
  const int N = nominal.horizon();
  const int na = cfg.n_agents;
  Rng process = make_stream(cfg.seed, kProcessStream);
  Rng meas = make_stream(cfg.seed, kMeasurementStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  const dynamics::LinearPlant& agent = plant.per_agent;
  const Eigen::VectorXd q_sigma = agent.Qn.diagonal().cwiseSqrt();

  Rollout r;
  r.states.reserve(static_cast<std::size_t>(N) + 1);
  r.controls.reserve(static_cast<std::size_t>(N));
  r.states.push_back(nominal.states.front());

  // Estimator state (phd_estimate mode only).
  const MatrixXd P0 = agent_cov(cfg.agent_position_sigma, cfg.agent_velocity_sigma);
  const MatrixXd P0_inv = P0.inverse();
  phd::GmIntensity v_pred;
  for (int i = 0; i < na; ++i) {
    v_pred.components.push_back({1.0, agent_block(r.states.front(), i), P0});
  }
  phd::SensorModel sensor = cfg.sensor;
  sensor.H = agent.H;
  sensor.Rn = agent.Rn;
  const phd::BirthModel birth;
  std::vector<VectorXd> slot_prediction = split_agents(r.states.front(), na);

  for (int k = 0; k < N; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const VectorXd& x = r.states.back();
    const VectorXd& xr = nominal.states[idx];
    VectorXd dx = x - xr;
    phd::GmIntensity v_post;

    if (cfg.loop_mode == LoopMode::kPhdEstimate) {
      const auto Z = generate_measurements(split_agents(x, na), sensor, meas);
      v_post = phd::prune_merge(phd::phd_update(v_pred, Z, sensor), cfg.phd);
      const auto est = phd::extract_states(v_post, cfg.phd);

      // Greedy nearest-neighbour assignment of estimates to agent slots.
      struct Pair { double d2; int slot; std::size_t e; };
      std::vector<Pair> pairs;
      for (int i = 0; i < na; ++i) {
        for (std::size_t e = 0; e < est.size(); ++e) {
          const VectorXd d = est[e].mean - slot_prediction[static_cast<std::size_t>(i)];
          pairs.push_back({d.dot(P0_inv * d), i, e});
        }
      }
      std::stable_sort(pairs.begin(), pairs.end(),
                       [](const Pair& a, const Pair& b) { return a.d2 < b.d2; });
      std::vector<bool> slot_used(static_cast<std::size_t>(na), false);
      std::vector<bool> est_used(est.size(), false);
      dx.setZero();  // unmatched slots get no feedback
      for (const auto& p : pairs) {
        const auto s = static_cast<std::size_t>(p.slot);
        if (slot_used[s] || est_used[p.e]) continue;
        slot_used[s] = est_used[p.e] = true;
        slot_prediction[s] = est[p.e].mean;
        dx.segment(p.slot * kAgentDim, kAgentDim) =
            est[p.e].mean - xr.segment(p.slot * kAgentDim, kAgentDim);
      }
    }

    VectorXd u = nominal.controls[idx] - F * dx;
    VectorXd w(x.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = q_sigma(i % kAgentDim) * normal(process);
    VectorXd xn = plant.A * x + plant.B * u + w;
    if (!xn.allFinite()) fail(ErrorCode::kNonFinite, "closed-loop rollout diverged");

    if (cfg.loop_mode == LoopMode::kPhdEstimate) {
      // Each component is propagated with the control of the nearest slot.
      std::vector<VectorXd> u_comp;
      u_comp.reserve(v_post.size());
      for (const auto& c : v_post.components) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < na; ++i) {
          const double d = (c.mean - slot_prediction[static_cast<std::size_t>(i)]).squaredNorm();
          if (d < best_d) { best_d = d; best = i; }
        }
        u_comp.push_back(u.segment(best * kControlDim, kControlDim));
      }
      v_pred = phd::phd_predict(v_post, u_comp, agent, birth, cfg.phd);
      for (int i = 0; i < na; ++i) {
        auto& s = slot_prediction[static_cast<std::size_t>(i)];
        s = agent.A * s + agent.B * u.segment(i * kControlDim, kControlDim);
      }
    }
    r.controls.push_back(std::move(u));
    r.states.push_back(std::move(xn));
  }

  r.rfs_cost = sequence_cost(r.states, r.controls, stages);
  r.distance_initial = stages.front().terms(r.states.front(), VectorXd()).distance();
  r.distance_final = stages.back().terms(r.states.back(), VectorXd()).distance();
  return r;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  ScenarioResult res;
  res.config = cfg;
  res.orbital_rate = dynamics::orbital_rate(cfg.mu, cfg.semi_major_axis);
  res.spin_rate = cfg.formation.spin_rate < 0.0 ? res.orbital_rate : cfg.formation.spin_rate;
  const Plants plants = build_plants(cfg, res.orbital_rate);
  const auto& plant = plants.swarm;
  const int na = cfg.n_agents;
  const BlockPartition partition{na, kControlDim, kAgentDim};

  // (1) initial means
  Rng init = make_stream(cfg.seed, kInitStream);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  res.x0.resize(na * kAgentDim);
  for (int i = 0; i < na; ++i) {
    for (int a = 0; a < 3; ++a) res.x0(i * kAgentDim + a) = cfg.init_box * unit(init);
    for (int a = 3; a < 6; ++a) res.x0(i * kAgentDim + a) = cfg.init_velocity * unit(init);
  }

  // (2) desired mixture per step and the stage costs
  const MatrixXd P_agent = agent_cov(cfg.agent_position_sigma, cfg.agent_velocity_sigma);
  const MatrixXd R = cfg.control_weight * MatrixXd::Identity(na * kControlDim, na * kControlDim);
  std::vector<rfs::StageCost> stages;
  stages.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
  for (int k = 0; k <= cfg.horizon; ++k) {
    rfs::RfsObjective obj;
    obj.desired = desired_formation(cfg, res.spin_rate, k * cfg.dt);
    obj.R = R;
    obj.alpha = cfg.alpha;
    obj.fixed_covs.assign(static_cast<std::size_t>(na), P_agent);
    obj.weights.assign(static_cast<std::size_t>(na), 1.0);
    stages.emplace_back(std::move(obj));
  }

  // (3) nominal trajectory
  auto t0 = std::chrono::steady_clock::now();
  const ilqr::RfsCostModel cost(stages, true);
  const std::vector<VectorXd> U0(static_cast<std::size_t>(cfg.horizon),
                                 VectorXd::Zero(na * kControlDim));
  ilqr::Result opt = ilqr::ilqr_solve(res.x0, U0, plant, cost, cfg.ilqr);
  res.nominal = opt.trajectory;
  res.ilqr_iterations = opt.iterations;
  res.ilqr_converged = opt.converged;
  res.ilqr_cost_history = opt.cost_history;
  res.nominal_distance_initial = stages.front().terms(res.nominal.states.front(), VectorXd()).distance();
  res.nominal_distance_final = stages.back().terms(res.nominal.states.back(), VectorXd()).distance();
  res.seconds_ilqr = seconds_since(t0);

  // LQR weights for sparsification: PSD Hessian of the terminal cost and
  // l_uu = 2R, both divided by the mean control weight.
  sparse::SparseLqrProblem prob;
  prob.A = plant.A;
  prob.B = plant.B;
  prob.B2 = MatrixXd::Identity(plant.state_dim(), plant.state_dim());
  MatrixXd Q = stages.back().derivatives(res.nominal.states.back(), VectorXd(), true).l_xx_psd;
  Q = 0.5 * (Q + Q.transpose());
  // Every CW mode sits on the unit circle, so a direction clipped to zero by
  // the PSD projection can leave a mode undetectable; a small floor keeps the
  // Riccati problem well posed.
  const double q_max = Eigen::SelfAdjointEigenSolver<MatrixXd>(Q, Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
  Q.diagonal().array() += kStateWeightFloor * q_max;
  const MatrixXd R_lqr = 2.0 * R;
  res.lqr_scale = R_lqr.diagonal().mean();
  prob.Q = Q / res.lqr_scale;
  prob.R = R_lqr / res.lqr_scale;
  prob.time = sparse::TimeMode::kDiscrete;
  prob.partition = partition;
  res.problem = prob;

  const ilqr::StaticGain sg =
      ilqr::extract_static_gain(opt.gains, ilqr::StaticGainMode::kTerminal, partition);
  res.K_ilqr = sg.gain;
  res.J_ilqr = sparse::is_stabilizing(sg.gain.F, prob) ? sparse::lqr_cost(sg.gain, prob)
                                                       : std::numeric_limits<double>::quiet_NaN();

  // (4) sweep
  t0 = std::chrono::steady_clock::now();
  const auto sweep = sparse::gamma_sweep(prob, cfg.gamma_list, cfg.admm, cfg.polish);
  res.seconds_sweep = seconds_since(t0);
  if (sweep.front().failed) {
    fail(ErrorCode::kRiccatiFailed, "centralized entry failed: " + sweep.front().error);
  }
  res.K_c = sweep.front().gain;
  res.J_c = sweep.front().J;
  const double nnz_c = static_cast<double>(res.K_c.nnz());

  // (5)-(6) closed loops and metrics
  t0 = std::chrono::steady_clock::now();
  for (const auto& e : sweep) {
    GammaRecord rec;
    rec.gamma = e.gamma;
    rec.failed = e.failed;
    rec.error = e.error;
    rec.admm_iterations = e.admm_iterations;
    rec.admm_converged = e.admm_converged;
    if (!e.failed) {
      rec.gain = e.gain;
      rec.nnz = static_cast<long>(e.nnz);
      rec.nnz_ratio = static_cast<double>(e.nnz) / nnz_c;
      rec.J = e.J;
      rec.J_ratio = (e.J - res.J_c) / res.J_c;
      rec.J_admm = e.J_admm;
      rec.polish_stalled = e.polish_stalled;
      rec.adjacency = information_graph(e.gain, partition);
      rec.edges = edge_count(rec.adjacency);
      try {
        rec.rollout = closed_loop(cfg, plant, res.nominal, e.gain.F, stages);
      } catch (const Error& err) {
        rec.failed = true;
        rec.error = err.what();
      }
    }
    res.records.push_back(std::move(rec));
  }
  const double base = res.records.front().rollout.rfs_cost;
  for (auto& rec : res.records) {
    if (!rec.failed) rec.rollout_cost_ratio = (rec.rollout.rfs_cost - base) / std::abs(base);
  }
  res.seconds_rollout = seconds_since(t0);
  return res;
}

}  // namespace swarm::sim

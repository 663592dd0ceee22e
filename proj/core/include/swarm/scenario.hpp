#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swarm/ilqr.hpp"
#include "swarm/phd.hpp"
#include "swarm/sparselqr.hpp"

namespace swarm {

enum class LoopMode { kTrueState, kPhdEstimate };

struct FormationConfig {
  enum class Kind { kStar, kExplicit };
  Kind kind = Kind::kStar;
  double radius = 1.0;          // outer ring; inner ring at radius/2
  double spin_rate = -1.0;      // rad/s; negative means the orbital rate
  int points = 0;               // 0: one per agent
  std::vector<std::vector<double>> means;  // explicit 6-vectors
  double position_sigma = 0.05;
  double velocity_sigma = 1e-3;
};

struct ScenarioConfig {
  int n_agents = 12;
  double init_box = 1.0;       // positions uniform in ±init_box per axis
  double init_velocity = 0.0;  // velocities uniform in ±init_velocity
  FormationConfig formation;

  double dt = 10.0;
  int horizon = 240;
  double mu = 3.986004418e14;
  double semi_major_axis = 6.778e6;

  double control_weight = 1.0;   // R = control_weight·I (stacked)
  double alpha = 1.0;
  // Fixed covariance of every current component inside the cost.
  double agent_position_sigma = 0.05;
  double agent_velocity_sigma = 1e-3;

  double process_position_sigma = 0.0;
  double process_velocity_sigma = 1e-7;

  phd::SensorModel sensor;         // H and Rn filled from the plant
  double measurement_sigma = 1e-3;
  phd::PhdConfig phd;

  ilqr::Options ilqr;
  sparse::AdmmOptions admm;
  sparse::PolishOptions polish;
  std::vector<double> gamma_list{0.0};

  std::uint64_t seed = 1;
  LoopMode loop_mode = LoopMode::kTrueState;

  ScenarioConfig();
};

/// Parses JSON text. Unknown keys and invalid values raise ConfigError.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every resolved field.
std::string config_to_json(const ScenarioConfig& cfg, int indent = 2);

void validate(const ScenarioConfig& cfg);

const char* to_string(LoopMode mode);
LoopMode parse_loop_mode(const std::string& s);

}  // namespace swarm

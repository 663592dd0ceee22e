#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "swarm/sim.hpp"

namespace swarm {

/// Writes into out_dir (created if missing):
///   summary.json                     metrics, resolved config, metadata
///   timings.json                     wall-clock seconds (not deterministic)
///   gamma_<i>_trajectory.csv         step,agent,x,y,z,vx,vy,vz,ux,uy,uz
///   gamma_<i>_gain.csv               dense F
///   gamma_<i>_pattern.txt            "row col value" triplets, 0-indexed
///   gamma_<i>_adjacency.csv          agent information graph
/// Floats in CSV/text files carry 17 significant digits.
void export_results(const sim::ScenarioResult& res, const std::filesystem::path& out_dir);

std::string summary_json(const sim::ScenarioResult& res, int indent = 2);

/// 17-significant-digit decimal form of x.
std::string format_double(double x);

void write_matrix_csv(const Eigen::MatrixXd& M, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

}  // namespace swarm

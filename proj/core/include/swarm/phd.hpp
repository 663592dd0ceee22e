#pragma once

#include <vector>

#include <Eigen/Core>

#include "swarm/dynamics.hpp"
#include "swarm/gaussmix.hpp"

namespace swarm::phd {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using gmix::GaussianComponent;
using gmix::GmIntensity;

/// Spawned component from a parent (m, P):
///   weight = scale·w,  mean = A m + offset,  cov = A P Aᵀ + added_cov.
struct SpawnTemplate {
  double scale = 0.0;
  VectorXd offset;
  MatrixXd added_cov;
};

struct BirthModel {
  GmIntensity birth;
  std::vector<SpawnTemplate> spawn_templates;
};

/// Detection probability, Poisson clutter uniform over an axis-aligned box in
/// measurement space, and the linear-Gaussian likelihood (H, Rn).
struct SensorModel {
  double pd = 1.0;
  double clutter_rate = 0.0;
  VectorXd region_lo;
  VectorXd region_hi;
  MatrixXd H;
  MatrixXd Rn;

  /// 1 / volume of the surveillance region.
  double clutter_density() const;
  /// κ(z) = clutter_rate · clutter_density for z inside the region.
  double clutter_intensity() const { return clutter_rate * clutter_density(); }
};

struct PhdConfig {
  double ps = 1.0;
  double prune_threshold = 1e-5;
  double merge_threshold = 4.0;  // Mahalanobis²
  std::size_t max_components = 100;
  double extract_threshold = 0.5;
};

/// Survivors first (index-aligned with `v` and `u_per_component`), then spawned
/// components (parent-major), then births.
GmIntensity phd_predict(const GmIntensity& v,
                        const std::vector<VectorXd>& u_per_component,
                        const dynamics::LinearPlant& plant,
                        const BirthModel& birth, const PhdConfig& cfg);

/// Missed-detection terms first, then one block of |v_pred| components per
/// measurement, in measurement order.
GmIntensity phd_update(const GmIntensity& v_pred, const std::vector<VectorXd>& Z,
                       const SensorModel& sensor);

GmIntensity prune_merge(const GmIntensity& v, const PhdConfig& cfg);

struct ExtractedState {
  VectorXd mean;
  double weight = 0.0;
};

std::vector<ExtractedState> extract_states(const GmIntensity& v,
                                           const PhdConfig& cfg);

double expected_count(const GmIntensity& v);

}  // namespace swarm::phd

#include "swarm/phd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "swarm/error.hpp"

namespace swarm::phd {

double SensorModel::clutter_density() const {
  if (region_lo.size() == 0) return 0.0;
  if (region_lo.size() != region_hi.size()) {
    fail(ErrorCode::kDimensionMismatch, "clutter region bounds differ in size");
  }
  const double volume = (region_hi - region_lo).prod();
  if (!(volume > 0.0)) {
    fail(ErrorCode::kNonPositiveInput, "clutter region has non-positive volume");
  }
  return 1.0 / volume;
}

GmIntensity phd_predict(const GmIntensity& v,
                        const std::vector<VectorXd>& u_per_component,
                        const dynamics::LinearPlant& plant,
                        const BirthModel& birth, const PhdConfig& cfg) {
  if (u_per_component.size() != v.size()) {
    fail(ErrorCode::kDimensionMismatch,
         "one control vector is required per component");
  }
  GmIntensity out;
  out.components.reserve(v.size() * (1 + birth.spawn_templates.size()) +
                         birth.birth.size());

  for (std::size_t i = 0; i < v.size(); ++i) {
    GaussianComponent c = gmix::predict_component(v.components[i],
                                                  u_per_component[i], plant);
    c.weight *= cfg.ps;
    out.components.push_back(std::move(c));
  }

  for (const auto& parent : v.components) {
    for (const auto& tpl : birth.spawn_templates) {
      if (tpl.offset.size() != plant.state_dim() ||
          tpl.added_cov.rows() != plant.state_dim()) {
        fail(ErrorCode::kDimensionMismatch, "spawn template does not match plant");
      }
      GaussianComponent c;
      c.weight = tpl.scale * parent.weight;
      c.mean = plant.A * parent.mean + tpl.offset;
      c.cov = plant.A * parent.cov * plant.A.transpose() + tpl.added_cov;
      c.cov = 0.5 * (c.cov + c.cov.transpose());
      out.components.push_back(std::move(c));
    }
  }

  for (const auto& c : birth.birth.components) {
    if (c.mean.size() != plant.state_dim()) {
      fail(ErrorCode::kDimensionMismatch, "birth component does not match plant");
    }
    out.components.push_back(c);
  }
  return out;
}

namespace {

struct UpdateTerms {
  VectorXd predicted_z;
  gmix::GaussianKernel innovation;
  MatrixXd gain;
  MatrixXd cov;
};

double log_sum_exp(const std::vector<double>& xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

}  // namespace

GmIntensity phd_update(const GmIntensity& v_pred, const std::vector<VectorXd>& Z,
                       const SensorModel& sensor) {
  if (v_pred.empty() && !Z.empty()) {
    // Only clutter can explain the scan.
    return {};
  }
  GmIntensity out;
  out.components.reserve(v_pred.size() * (1 + Z.size()));
  for (const auto& c : v_pred.components) {
    out.components.push_back({(1.0 - sensor.pd) * c.weight, c.mean, c.cov});
  }
  if (Z.empty() || sensor.pd <= 0.0) return out;

  const MatrixXd& H = sensor.H;
  std::vector<UpdateTerms> terms;
  terms.reserve(v_pred.size());
  for (const auto& c : v_pred.components) {
    if (c.mean.size() != H.cols()) {
      fail(ErrorCode::kDimensionMismatch, "component does not match sensor H");
    }
    const MatrixXd S = H * c.cov * H.transpose() + sensor.Rn;
    gmix::GaussianKernel kernel(S);
    const MatrixXd PHt = c.cov * H.transpose();
    MatrixXd K = PHt * kernel.inverse();
    const auto n = c.cov.rows();
    MatrixXd P = (MatrixXd::Identity(n, n) - K * H) * c.cov;
    P = 0.5 * (P + P.transpose());
    terms.push_back({H * c.mean, std::move(kernel), std::move(K), std::move(P)});
  }

  const double log_pd = std::log(sensor.pd);
  const double kappa = sensor.clutter_intensity();
  std::vector<double> log_num(v_pred.size());
  for (const auto& z : Z) {
    if (z.size() != H.rows()) {
      fail(ErrorCode::kDimensionMismatch, "measurement dimension differs from H");
    }
    std::vector<double> denom_terms;
    denom_terms.reserve(v_pred.size() + 1);
    for (std::size_t j = 0; j < v_pred.size(); ++j) {
      const double w = v_pred.components[j].weight;
      log_num[j] = w > 0.0 ? log_pd + std::log(w) +
                                 terms[j].innovation.log_density(z, terms[j].predicted_z)
                           : -std::numeric_limits<double>::infinity();
      denom_terms.push_back(log_num[j]);
    }
    if (kappa > 0.0) denom_terms.push_back(std::log(kappa));
    const double log_denom = log_sum_exp(denom_terms);
    for (std::size_t j = 0; j < v_pred.size(); ++j) {
      const double w = std::isfinite(log_denom) ? std::exp(log_num[j] - log_denom) : 0.0;
      const auto& c = v_pred.components[j];
      out.components.push_back(
          {w, c.mean + terms[j].gain * (z - terms[j].predicted_z), terms[j].cov});
    }
  }
  return out;
}

GmIntensity prune_merge(const GmIntensity& v, const PhdConfig& cfg) {
  std::vector<GaussianComponent> pool;
  for (const auto& c : v.components) {
    if (c.weight >= cfg.prune_threshold) pool.push_back(c);
  }

  // Repeat merge passes until a pass changes nothing; the result is then a
  // fixed point of this routine.
  bool merged_any = true;
  while (merged_any) {
    merged_any = false;
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pool[a].weight > pool[b].weight;
    });
    std::vector<bool> used(pool.size(), false);
    std::vector<GaussianComponent> next;
    for (std::size_t leader : order) {
      if (used[leader]) continue;
      std::vector<std::size_t> cluster;
      for (std::size_t i : order) {
        if (used[i]) continue;
        if (i == leader) {
          cluster.push_back(i);
          continue;
        }
        const VectorXd d = pool[i].mean - pool[leader].mean;
        const double m2 = d.dot(pool[i].cov.ldlt().solve(d));
        if (m2 <= cfg.merge_threshold) cluster.push_back(i);
      }
      for (std::size_t i : cluster) used[i] = true;
      if (cluster.size() == 1) {
        next.push_back(pool[leader]);
        continue;
      }
      merged_any = true;
      GaussianComponent m;
      m.weight = 0.0;
      for (std::size_t i : cluster) m.weight += pool[i].weight;
      m.mean = VectorXd::Zero(pool[leader].mean.size());
      for (std::size_t i : cluster) m.mean += pool[i].weight * pool[i].mean;
      m.mean /= m.weight;
      m.cov = MatrixXd::Zero(m.mean.size(), m.mean.size());
      for (std::size_t i : cluster) {
        const VectorXd d = m.mean - pool[i].mean;
        m.cov += pool[i].weight * (pool[i].cov + d * d.transpose());
      }
      m.cov /= m.weight;
      m.cov = 0.5 * (m.cov + m.cov.transpose());
      next.push_back(std::move(m));
    }
    pool = std::move(next);
  }

  std::stable_sort(pool.begin(), pool.end(),
                   [](const GaussianComponent& a, const GaussianComponent& b) {
                     return a.weight > b.weight;
                   });
  if (pool.size() > cfg.max_components) pool.resize(cfg.max_components);
  return GmIntensity{std::move(pool)};
}

std::vector<ExtractedState> extract_states(const GmIntensity& v,
                                           const PhdConfig& cfg) {
  std::vector<ExtractedState> out;
  for (const auto& c : v.components) {
    if (!(c.weight > cfg.extract_threshold)) continue;
    const auto copies = static_cast<long>(
        std::min(std::round(c.weight), std::ceil(c.weight)));
    for (long k = 0; k < copies; ++k) out.push_back({c.mean, c.weight});
  }
  return out;
}

double expected_count(const GmIntensity& v) { return v.mass(); }

}  // namespace swarm::phd

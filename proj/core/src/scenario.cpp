#include "swarm/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "swarm/error.hpp"

namespace swarm {

using nlohmann::json;

ScenarioConfig::ScenarioConfig() {
  sensor.pd = 1.0;
  sensor.clutter_rate = 0.0;
  sensor.region_lo = Eigen::Vector3d::Constant(-3.0);
  sensor.region_hi = Eigen::Vector3d::Constant(3.0);
}

const char* to_string(LoopMode mode) {
  return mode == LoopMode::kTrueState ? "true_state" : "phd_estimate";
}

LoopMode parse_loop_mode(const std::string& s) {
  if (s == "true_state") return LoopMode::kTrueState;
  if (s == "phd_estimate") return LoopMode::kPhdEstimate;
  fail(ErrorCode::kConfigError, "loop_mode must be true_state or phd_estimate, got '" + s + "'");
}

namespace {

const char* penalty_name(sparse::Penalty p) {
  switch (p) {
    case sparse::Penalty::kL1: return "l1";
    case sparse::Penalty::kWeightedL1: return "weighted_l1";
    case sparse::Penalty::kCardinality: return "nnz";
  }
  return "?";
}

sparse::Penalty parse_penalty(const std::string& s) {
  if (s == "l1") return sparse::Penalty::kL1;
  if (s == "weighted_l1") return sparse::Penalty::kWeightedL1;
  if (s == "nnz") return sparse::Penalty::kCardinality;
  fail(ErrorCode::kConfigError, "admm.penalty must be l1, weighted_l1 or nnz, got '" + s + "'");
}

// Reads fields from one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::kConfigError, where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::kConfigError, where() + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), where() + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        fail(ErrorCode::kConfigError, "unknown key '" + where() + it.key() + "'");
      }
    }
  }

 private:
  std::string where() const { return path_.empty() ? "" : path_ + "."; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kConfigError, what);
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.n_agents >= 1, "n_agents must be >= 1");
  require(c.init_box >= 0.0 && c.init_velocity >= 0.0, "init ranges must be >= 0");
  require(c.dt > 0.0, "dt must be > 0");
  require(c.horizon >= 1, "horizon must be >= 1");
  require(c.mu > 0.0 && c.semi_major_axis > 0.0, "plant constants must be > 0");
  require(c.control_weight > 0.0, "control_weight must be > 0");
  require(c.alpha >= 0.0, "alpha must be >= 0");
  require(c.agent_position_sigma > 0.0 && c.agent_velocity_sigma > 0.0,
          "agent covariance sigmas must be > 0");
  require(c.process_position_sigma >= 0.0 && c.process_velocity_sigma >= 0.0,
          "process noise sigmas must be >= 0");
  require(c.measurement_sigma > 0.0, "measurement_sigma must be > 0");
  require(c.sensor.pd >= 0.0 && c.sensor.pd <= 1.0, "sensor.pd must be in [0, 1]");
  require(c.sensor.clutter_rate >= 0.0, "sensor.clutter_rate must be >= 0");
  require(c.sensor.region_lo.size() == 3 && c.sensor.region_hi.size() == 3,
          "sensor region bounds must have 3 entries");
  require(((c.sensor.region_hi - c.sensor.region_lo).array() > 0.0).all(),
          "sensor region must have positive extent");
  require(c.phd.ps >= 0.0 && c.phd.ps <= 1.0, "phd.ps must be in [0, 1]");
  require(c.phd.max_components >= 1, "phd.max_components must be >= 1");

  const auto& f = c.formation;
  require(f.position_sigma > 0.0 && f.velocity_sigma > 0.0, "formation sigmas must be > 0");
  if (f.kind == FormationConfig::Kind::kStar) {
    require(f.radius > 0.0, "formation.radius must be > 0");
    require(f.points >= 0, "formation.points must be >= 0");
  } else {
    require(!f.means.empty(), "explicit formation needs at least one mean");
    for (const auto& m : f.means) require(m.size() == 6, "formation means must have 6 entries");
  }

  require(c.ilqr.max_iter >= 1 && c.ilqr.tol > 0.0 && c.ilqr.max_backtracks >= 0,
          "invalid ilqr options");
  require(c.admm.rho > 0.0 && c.admm.eps_abs > 0.0 && c.admm.max_iter >= 1,
          "admm needs rho > 0, eps_abs > 0, max_iter >= 1");
  require(c.admm.reweight_eps > 0.0 && c.admm.max_reweight >= 1,
          "admm needs reweight_eps > 0 and max_reweight >= 1");
  require(c.admm.fmin.grad_tol > 0.0 && c.polish.descent.grad_tol > 0.0,
          "descent tolerances must be > 0");

  require(!c.gamma_list.empty() && c.gamma_list.front() == 0.0,
          "gamma_list must start with 0");
  for (std::size_t i = 1; i < c.gamma_list.size(); ++i) {
    require(c.gamma_list[i] >= c.gamma_list[i - 1], "gamma_list must be ascending");
  }
}

ScenarioConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("invalid JSON: ") + e.what());
  }

  ScenarioConfig c;
  Section s(root, "");
  s.get("n_agents", c.n_agents);
  s.get("init_box", c.init_box);
  s.get("init_velocity", c.init_velocity);
  s.get("dt", c.dt);
  s.get("horizon", c.horizon);
  s.get("mu", c.mu);
  s.get("semi_major_axis", c.semi_major_axis);
  s.get("control_weight", c.control_weight);
  s.get("alpha", c.alpha);
  s.get("agent_position_sigma", c.agent_position_sigma);
  s.get("agent_velocity_sigma", c.agent_velocity_sigma);
  s.get("process_position_sigma", c.process_position_sigma);
  s.get("process_velocity_sigma", c.process_velocity_sigma);
  s.get("measurement_sigma", c.measurement_sigma);
  s.get("gamma_list", c.gamma_list);
  s.get("seed", c.seed);
  std::string mode = to_string(c.loop_mode);
  s.get("loop_mode", mode);
  c.loop_mode = parse_loop_mode(mode);

  if (s.has("formation")) {
    Section f = s.sub("formation");
    std::string kind = "star";
    f.get("type", kind);
    if (kind == "star") {
      c.formation.kind = FormationConfig::Kind::kStar;
    } else if (kind == "explicit") {
      c.formation.kind = FormationConfig::Kind::kExplicit;
    } else {
      fail(ErrorCode::kConfigError, "formation.type must be star or explicit");
    }
    f.get("radius", c.formation.radius);
    f.get("spin_rate", c.formation.spin_rate);
    f.get("points", c.formation.points);
    f.get("means", c.formation.means);
    f.get("position_sigma", c.formation.position_sigma);
    f.get("velocity_sigma", c.formation.velocity_sigma);
    f.finish();
  }
  if (s.has("sensor")) {
    Section z = s.sub("sensor");
    z.get("pd", c.sensor.pd);
    z.get("clutter_rate", c.sensor.clutter_rate);
    std::vector<double> lo = from_vector(c.sensor.region_lo);
    std::vector<double> hi = from_vector(c.sensor.region_hi);
    z.get("region_lo", lo);
    z.get("region_hi", hi);
    c.sensor.region_lo = to_vector(lo);
    c.sensor.region_hi = to_vector(hi);
    z.finish();
  }
  if (s.has("phd")) {
    Section p = s.sub("phd");
    p.get("ps", c.phd.ps);
    p.get("prune_threshold", c.phd.prune_threshold);
    p.get("merge_threshold", c.phd.merge_threshold);
    p.get("max_components", c.phd.max_components);
    p.get("extract_threshold", c.phd.extract_threshold);
    p.finish();
  }
  if (s.has("ilqr")) {
    Section p = s.sub("ilqr");
    p.get("max_iter", c.ilqr.max_iter);
    p.get("tol", c.ilqr.tol);
    p.get("max_backtracks", c.ilqr.max_backtracks);
    p.get("reg_init", c.ilqr.reg_init);
    p.get("reg_first", c.ilqr.reg_first);
    p.get("max_reg_escalations", c.ilqr.max_reg_escalations);
    p.finish();
  }
  if (s.has("admm")) {
    Section p = s.sub("admm");
    p.get("rho", c.admm.rho);
    p.get("eps_abs", c.admm.eps_abs);
    p.get("max_iter", c.admm.max_iter);
    std::string pen = penalty_name(c.admm.penalty);
    p.get("penalty", pen);
    c.admm.penalty = parse_penalty(pen);
    p.get("reweight_eps", c.admm.reweight_eps);
    p.get("max_reweight", c.admm.max_reweight);
    p.get("fmin_max_iter", c.admm.fmin.max_iter);
    p.get("fmin_grad_tol", c.admm.fmin.grad_tol);
    p.finish();
  }
  if (s.has("polish")) {
    Section p = s.sub("polish");
    p.get("max_iter", c.polish.descent.max_iter);
    p.get("grad_tol", c.polish.descent.grad_tol);
    p.get("cg_max_iter", c.polish.cg_max_iter);
    p.get("cg_rel_tol", c.polish.cg_rel_tol);
    p.finish();
  }
  s.finish();
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfigError, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ScenarioConfig& c, int indent) {
  json j;
  j["n_agents"] = c.n_agents;
  j["init_box"] = c.init_box;
  j["init_velocity"] = c.init_velocity;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["mu"] = c.mu;
  j["semi_major_axis"] = c.semi_major_axis;
  j["control_weight"] = c.control_weight;
  j["alpha"] = c.alpha;
  j["agent_position_sigma"] = c.agent_position_sigma;
  j["agent_velocity_sigma"] = c.agent_velocity_sigma;
  j["process_position_sigma"] = c.process_position_sigma;
  j["process_velocity_sigma"] = c.process_velocity_sigma;
  j["measurement_sigma"] = c.measurement_sigma;
  j["gamma_list"] = c.gamma_list;
  j["seed"] = c.seed;
  j["loop_mode"] = to_string(c.loop_mode);

  const auto& f = c.formation;
  json jf;
  jf["type"] = f.kind == FormationConfig::Kind::kStar ? "star" : "explicit";
  jf["radius"] = f.radius;
  jf["spin_rate"] = f.spin_rate;
  jf["points"] = f.points;
  jf["means"] = f.means;
  jf["position_sigma"] = f.position_sigma;
  jf["velocity_sigma"] = f.velocity_sigma;
  j["formation"] = jf;

  j["sensor"] = {{"pd", c.sensor.pd},
                 {"clutter_rate", c.sensor.clutter_rate},
                 {"region_lo", from_vector(c.sensor.region_lo)},
                 {"region_hi", from_vector(c.sensor.region_hi)}};
  j["phd"] = {{"ps", c.phd.ps},
              {"prune_threshold", c.phd.prune_threshold},
              {"merge_threshold", c.phd.merge_threshold},
              {"max_components", c.phd.max_components},
              {"extract_threshold", c.phd.extract_threshold}};
  j["ilqr"] = {{"max_iter", c.ilqr.max_iter},
               {"tol", c.ilqr.tol},
               {"max_backtracks", c.ilqr.max_backtracks},
               {"reg_init", c.ilqr.reg_init},
               {"reg_first", c.ilqr.reg_first},
               {"max_reg_escalations", c.ilqr.max_reg_escalations}};
  j["admm"] = {{"rho", c.admm.rho},
               {"eps_abs", c.admm.eps_abs},
               {"max_iter", c.admm.max_iter},
               {"penalty", penalty_name(c.admm.penalty)},
               {"reweight_eps", c.admm.reweight_eps},
               {"max_reweight", c.admm.max_reweight},
               {"fmin_max_iter", c.admm.fmin.max_iter},
               {"fmin_grad_tol", c.admm.fmin.grad_tol}};
  j["polish"] = {{"max_iter", c.polish.descent.max_iter},
                 {"grad_tol", c.polish.descent.grad_tol},
                 {"cg_max_iter", c.polish.cg_max_iter},
                 {"cg_rel_tol", c.polish.cg_rel_tol}};
  return j.dump(indent);
}

}  // namespace swarm

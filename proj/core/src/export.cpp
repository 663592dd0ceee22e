#include "swarm/export.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "swarm/error.hpp"

namespace swarm {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

std::string indexed(std::size_t i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "gamma_%02zu_%s", i, suffix);
  return buf;
}

json nan_to_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json matrix_rows(const Eigen::MatrixXi& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_matrix_csv(const Eigen::MatrixXd& M, const fs::path& path) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
  close_checked(out, path);
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::kIoError, "ragged CSV " + path.string());
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return M;
}

std::string summary_json(const sim::ScenarioResult& res, int indent) {
  json j;
  j["config"] = json::parse(config_to_json(res.config));
  j["metadata"] = {
      {"orbital_rate", res.orbital_rate},
      {"spin_rate", res.spin_rate},
      {"lqr_scale", res.lqr_scale},
      {"disturbance_input", "identity"},
      {"lqr_state_weight", "psd_terminal_hessian + 1e-4*max_eig*I"},
      {"lqr_control_weight", "2R"},
      {"time_mode", "discrete"},
      {"baseline_gain", "riccati_of_sparse_problem"},
      {"ilqr_static_gain", "terminal"},
      {"x0", std::vector<double>(res.x0.data(), res.x0.data() + res.x0.size())},
  };
  j["nominal"] = {
      {"ilqr_iterations", res.ilqr_iterations},
      {"ilqr_converged", res.ilqr_converged},
      {"cost_history", res.ilqr_cost_history},
      {"cost", res.nominal.cost},
      {"distance_initial", res.nominal_distance_initial},
      {"distance_final", res.nominal_distance_final},
  };
  j["baseline"] = {
      {"nnz", res.K_c.nnz()},
      {"J_c", res.J_c},
      {"ilqr_gain_J", nan_to_null(res.J_ilqr)},
  };
  json recs = json::array();
  for (const auto& r : res.records) {
    json e;
    e["gamma"] = r.gamma;
    e["failed"] = r.failed;
    if (r.failed) e["error"] = r.error;
    e["nnz"] = r.nnz;
    e["nnz_ratio"] = r.nnz_ratio;
    e["J"] = r.J;
    e["J_ratio"] = r.J_ratio;
    e["J_admm"] = nan_to_null(r.J_admm);
    e["admm_iterations"] = r.admm_iterations;
    e["admm_converged"] = r.admm_converged;
    e["polish_stalled"] = r.polish_stalled;
    e["edges"] = r.edges;
    if (r.adjacency.size() > 0) e["adjacency"] = matrix_rows(r.adjacency);
    e["rollout"] = {{"rfs_cost", r.rollout.rfs_cost},
                    {"rfs_cost_ratio", r.rollout_cost_ratio},
                    {"distance_initial", r.rollout.distance_initial},
                    {"distance_final", r.rollout.distance_final}};
    recs.push_back(std::move(e));
  }
  j["records"] = std::move(recs);
  return j.dump(indent);
}

void export_results(const sim::ScenarioResult& res, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  {
    const auto p = dir / "summary.json";
    auto out = open_out(p);
    out << summary_json(res) << '\n';
    close_checked(out, p);
  }
  {
    const auto p = dir / "timings.json";
    auto out = open_out(p);
    out << json{{"ilqr", res.seconds_ilqr},
                {"sweep", res.seconds_sweep},
                {"rollout", res.seconds_rollout}}.dump(2)
        << '\n';
    close_checked(out, p);
  }

  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const auto& r = res.records[i];
    if (r.gain.F.size() == 0) continue;
    write_matrix_csv(r.gain.F, dir / indexed(i, "gain.csv"));

    {
      const auto p = dir / indexed(i, "pattern.txt");
      auto out = open_out(p);
      for (Eigen::Index row = 0; row < r.gain.F.rows(); ++row) {
        for (Eigen::Index col = 0; col < r.gain.F.cols(); ++col) {
          if (r.gain.pattern(row, col)) {
            out << row << ' ' << col << ' ' << format_double(r.gain.F(row, col)) << '\n';
          }
        }
      }
      close_checked(out, p);
    }
    {
      const auto p = dir / indexed(i, "adjacency.csv");
      auto out = open_out(p);
      for (Eigen::Index a = 0; a < r.adjacency.rows(); ++a) {
        for (Eigen::Index b = 0; b < r.adjacency.cols(); ++b) {
          if (b) out << ',';
          out << r.adjacency(a, b);
        }
        out << '\n';
      }
      close_checked(out, p);
    }
    if (r.rollout.states.empty()) continue;
    {
      const auto p = dir / indexed(i, "trajectory.csv");
      auto out = open_out(p);
      out << "step,agent,x,y,z,vx,vy,vz,ux,uy,uz\n";
      const auto& st = r.rollout.states;
      const auto& u = r.rollout.controls;
      const int na = r.gain.partition.n_agents;
      for (std::size_t k = 0; k < st.size(); ++k) {
        for (int a = 0; a < na; ++a) {
          out << k << ',' << a;
          for (int c = 0; c < 6; ++c) out << ',' << format_double(st[k](a * 6 + c));
          for (int c = 0; c < 3; ++c) {
            // The final state has no control; the row carries NaN there.
            const double v = k < u.size() ? u[k](a * 3 + c) : std::nan("");
            out << ',' << format_double(v);
          }
          out << '\n';
        }
      }
      close_checked(out, p);
    }
  }
}

}  // namespace swarm

#include "starsim/output.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "starsim/errors.hpp"

namespace starsim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

const char* kSeriesHeader =
    "t,E_L,E_E,E,D,M,mass_residual,bc_residual,R,picard_iters,K_max,weaving_ratio,"
    "rt_margin_min,contraction_last,F_last,H_last,solver_residual,solver_spd,"
    "el_u_sq,el_rho_gamma,el_ut1,el_ut2,el_ut3,el_visc0,el_visc1,el_visc2,"
    "el_drho0,el_drho1,el_drho2,el_d2rho0,el_d2rho1,el_d3rho,"
    "ee_rho0,ee_rho1,ee_rho2,ee_rho3,ee_u0,ee_u1,ee_u2,ee_u3,"
    "d_lag0,d_lag1,d_lag2,d_lag3,d_ut1,d_ut2,d_ut3,d_eul0,d_eul1,d_eul2,d_eul3";

void append_row(std::string& out, const SeriesRow& row) {
  const auto& e = row.energy;
  std::vector<double> cols = {
      row.t,
      e.E_L,
      e.E_E,
      e.E,
      e.D,
      e.ledger.M,
      row.mass_residual,
      row.bc_residual,
      row.R,
      static_cast<double>(row.step.picard_iters),
      e.ledger.K(),
      e.weaving_ratio,
      e.rt_margin_min,
      row.step.contraction_ratios.empty() ? 0.0 : row.step.contraction_ratios.back(),
      row.step.F_iterates.empty() ? 0.0 : row.step.F_iterates.back(),
      row.step.H_iterates.empty() ? 0.0 : row.step.H_iterates.back(),
      row.step.solve.residual_norm,
      row.step.solve.spd_ok ? 1.0 : 0.0,
      e.lag.u_sq,
      e.lag.rho_gamma,
      e.lag.ut_sq[0],
      e.lag.ut_sq[1],
      e.lag.ut_sq[2],
      e.lag.visc[0],
      e.lag.visc[1],
      e.lag.visc[2],
      e.lag.drho[0],
      e.lag.drho[1],
      e.lag.drho[2],
      e.lag.d2rho[0],
      e.lag.d2rho[1],
      e.lag.d3rho,
      e.eul.rho_terms[0],
      e.eul.rho_terms[1],
      e.eul.rho_terms[2],
      e.eul.rho_terms[3],
      e.eul.u_terms[0],
      e.eul.u_terms[1],
      e.eul.u_terms[2],
      e.eul.u_terms[3],
      e.diss.lag[0],
      e.diss.lag[1],
      e.diss.lag[2],
      e.diss.lag[3],
      e.diss.ut[0],
      e.diss.ut[1],
      e.diss.ut[2],
      e.diss.eul[0],
      e.diss.eul[1],
      e.diss.eul[2],
      e.diss.eul[3],
  };
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += format_double(cols[i]);
  }
  out += '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

std::string series_csv_text(const std::vector<SeriesRow>& rows) {
  std::string out = kSeriesHeader;
  out += '\n';
  for (const auto& row : rows) append_row(out, row);
  return out;
}

void emit_series(const std::string& path, const std::vector<SeriesRow>& rows) {
  write_text(path, series_csv_text(rows));
}

std::string snapshot_csv_text(const LagrangianState& state) {
  const DivergenceField div = compute_divergence(state);
  std::string out = "x,rho,u,r,div\n";
  for (int i = 0; i < state.n_cells(); ++i) {
    out += format_double(state.x_nodes[i]);
    out += ',';
    out += format_double(state.rho_cells[i]);
    out += ',';
    out += format_double(state.u_nodes[i]);
    out += ',';
    out += format_double(state.r_nodes[i]);
    out += ',';
    out += format_double(div.div_cells[i]);
    out += '\n';
  }
  return out;
}

void emit_snapshot(const std::string& path, const LagrangianState& state) {
  write_text(path, snapshot_csv_text(state));
  json side;
  side["t"] = state.time;
  side["R"] = state.r_nodes.back();
  side["mass_residual"] = std::fabs(eulerian_mass(state) - 1.0);
  write_text(path + ".json", side.dump(2) + "\n");
}

void emit_summary(const std::string& path, const RunResult& result,
                  const RunManifest& manifest) {
  json j;
  j["schema_version"] = 1;
  j["abort_reason"] = result.abort_reason.empty() ? json(nullptr) : json(result.abort_reason);
  j["steps_taken"] = result.steps_taken;
  j["t_final"] = result.final_state.time;
  j["R_final"] = result.final_state.r_nodes.back();
  j["max_u_inf"] = result.max_u_inf;
  if (!result.series.empty()) {
    const auto& last = result.series.back();
    j["E_final"] = last.energy.E;
    j["E_initial"] = result.series.front().energy.E;
    j["D_final"] = last.energy.D;
    j["M_final"] = last.energy.ledger.M;
    j["mass_residual_final"] = last.mass_residual;
  }
  j["cutoffs"] = {{"x0", result.cutoffs.x0}, {"x1", result.cutoffs.x1},
                  {"x2", result.cutoffs.x2}, {"r0", result.cutoffs.r0},
                  {"r1", result.cutoffs.r1}, {"r2", result.cutoffs.r2},
                  {"d", result.cutoffs.d},
                  {"unit_interior_bound", result.cutoffs.unit_interior_bound}};
  j["version"] = manifest.version;
  write_text(path, j.dump(2) + "\n");
}

void emit_audit(const std::string& path, const std::vector<SeriesRow>& rows) {
  std::string out;
  for (const auto& row : rows) {
    const auto& e = row.energy;
    json j;
    j["t"] = row.t;
    j["E_L"] = e.E_L;
    j["E_E"] = e.E_E;
    j["D"] = e.D;
    j["lagrangian_terms"] = {{"u_sq", e.lag.u_sq},
                             {"rho_gamma", e.lag.rho_gamma},
                             {"ut_sq", e.lag.ut_sq},
                             {"visc", e.lag.visc},
                             {"drho", e.lag.drho},
                             {"d2rho", e.lag.d2rho},
                             {"d3rho", e.lag.d3rho},
                             {"time_orders_u", e.lag.time_orders_u},
                             {"time_orders_rho", e.lag.time_orders_rho}};
    j["eulerian_terms"] = {{"rho", e.eul.rho_terms}, {"u", e.eul.u_terms}};
    j["dissipation"] = {{"lag", e.diss.lag}, {"ut", e.diss.ut}, {"eul", e.diss.eul}};
    j["k_ledger"] = {{"lagrangian", e.ledger.lagrangian},
                     {"eulerian", e.ledger.eulerian},
                     {"K", e.ledger.K()},
                     {"M", e.ledger.M}};
    j["rt_margin_min"] = e.rt_margin_min;
    j["weaving_ratio"] = e.weaving_ratio;
    j["picard"] = {{"iters", row.step.picard_iters},
                   {"contraction_ratios", row.step.contraction_ratios},
                   {"M_iterates", row.step.M_iterates},
                   {"F_iterates", row.step.F_iterates},
                   {"H_iterates", row.step.H_iterates}};
    out += j.dump();
    out += '\n';
  }
  write_text(path, out);
}

void emit_manifest(const std::string& path, const RunManifest& manifest) {
  json j;
  j["schema_version"] = 1;
  j["config"] = json::parse(manifest.config_echo);
  j["version"] = manifest.version;
  j["platform"] = manifest.platform;
  j["started"] = manifest.started;
  j["finished"] = manifest.finished;
  j["abort_reason"] = manifest.abort_reason.empty() ? json(nullptr) : json(manifest.abort_reason);
  write_text(path, j.dump(2) + "\n");
}

DirLock::DirLock(const std::string& dir) {
  fs::create_directories(dir);
  path_ = (fs::path(dir) / ".lock").string();
  FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f)
    throw IoError("output directory '" + dir + "' is locked by another run (.lock exists)");
  std::fclose(f);
}

DirLock::~DirLock() { std::remove(path_.c_str()); }

void write_run_outputs(const std::string& dir, const SimulationConfig& cfg,
                       const RunResult& result, const RunManifest& manifest, bool audit) {
  (void)cfg;
  emit_series((fs::path(dir) / "series.csv").string(), result.series);
  for (std::size_t i = 0; i < result.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%04zu.csv", i);
    emit_snapshot((fs::path(dir) / name).string(), result.snapshots[i]);
  }
  emit_summary((fs::path(dir) / "summary.json").string(), result, manifest);
  emit_manifest((fs::path(dir) / "manifest.json").string(), manifest);
  if (audit) emit_audit((fs::path(dir) / "audit.jsonl").string(), result.series);
}

}  // namespace starsim

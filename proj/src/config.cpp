#include "starsim/config.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "starsim/errors.hpp"

namespace starsim {

using nlohmann::json;

namespace {

void check_anchor_separations(const SimulationConfig& cfg) {
  if (cfg.anchors.auto_mode || cfg.init != SimulationConfig::Init::lane_emden) return;
  StationaryProfile profile = normalize_total_mass(
      lane_emden_solve(cfg.physics, cfg.lane_emden_xi_max, cfg.lane_emden_step));
  const double r0 = profile.r_of_x(cfg.anchors.x0);
  const double r1 = profile.r_of_x(cfg.anchors.x1);
  const double r2 = profile.r_of_x(cfg.anchors.x2);
  const double d = cfg.anchors.d;
  if (!(2.0 * d < r0))
    throw ValidationError("anchor separation condition 2d < r0 violated");
  if (!(3.0 * d < r2 - r1))
    throw ValidationError("anchor separation condition 3d < r2 - r1 violated");
}

SimulationConfig from_json(const json& j, bool deep) {
  SimulationConfig cfg;
  try {
    cfg.physics.gamma = j.value("gamma", cfg.physics.gamma);
    cfg.physics.A = j.value("A", cfg.physics.A);
    cfg.physics.mu = j.value("mu", cfg.physics.mu);
    cfg.n_cells = j.value("n_cells", cfg.n_cells);
    if (j.contains("grading")) {
      const auto& g = j.at("grading");
      const std::string type = g.value("type", "uniform");
      if (type == "uniform")
        cfg.grading.type = Grading::Type::uniform;
      else if (type == "boundary_graded")
        cfg.grading.type = Grading::Type::boundary_graded;
      else
        throw ValidationError("grading.type must be 'uniform' or 'boundary_graded'");
      cfg.grading.power = g.value("power", cfg.grading.power);
    }
    cfg.dt = j.value("dt", cfg.dt);
    cfg.t_end = j.value("t_end", cfg.t_end);
    cfg.picard_tol = j.value("picard_tol", cfg.picard_tol);
    cfg.picard_max = j.value("picard_max", cfg.picard_max);
    if (j.contains("anchors")) {
      const auto& a = j.at("anchors");
      if (a.is_string()) {
        if (a.get<std::string>() != "auto")
          throw ValidationError("anchors must be 'auto' or an object {x0,x1,x2,d}");
      } else {
        cfg.anchors.auto_mode = false;
        cfg.anchors.x0 = a.at("x0").get<double>();
        cfg.anchors.x1 = a.at("x1").get<double>();
        cfg.anchors.x2 = a.at("x2").get<double>();
        cfg.anchors.d = a.at("d").get<double>();
      }
    }
    cfg.output_every = j.value("output_every", cfg.output_every);
    cfg.snapshot_every = j.value("snapshot_every", cfg.snapshot_every);
    cfg.gravity_on = j.value("gravity_on", cfg.gravity_on);
    cfg.pressure_on = j.value("pressure_on", cfg.pressure_on);
    if (j.contains("init")) {
      const std::string mode = j.at("init").get<std::string>();
      if (mode == "lane_emden")
        cfg.init = SimulationConfig::Init::lane_emden;
      else if (mode == "free_expansion")
        cfg.init = SimulationConfig::Init::free_expansion;
      else
        throw ValidationError("init must be 'lane_emden' or 'free_expansion'");
    }
    cfg.perturb_velocity = j.value("perturb_velocity", cfg.perturb_velocity);
    cfg.expansion_rate = j.value("expansion_rate", cfg.expansion_rate);
    cfg.dt_adaptive = j.value("dt_adaptive", cfg.dt_adaptive);
    cfg.dt_min = j.value("dt_min", cfg.dt_min);
    cfg.dt_max = j.value("dt_max", cfg.dt_max);
    cfg.dt_growth = j.value("dt_growth", cfg.dt_growth);
    cfg.dt_safety = j.value("dt_safety", cfg.dt_safety);
    cfg.m_cap = j.value("m_cap", cfg.m_cap);
    cfg.energy_blowup = j.value("energy_blowup", cfg.energy_blowup);
    cfg.lane_emden_step = j.value("lane_emden_step", cfg.lane_emden_step);
    cfg.lane_emden_xi_max = j.value("lane_emden_xi_max", cfg.lane_emden_xi_max);
    cfg.view_samples = j.value("view_samples", cfg.view_samples);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  cfg.validate();
  if (deep) check_anchor_separations(cfg);
  return cfg;
}

}  // namespace

SimulationConfig config_from_json_text(const std::string& text, bool deep) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return from_json(j, deep);
}

SimulationConfig parse_config(const std::string& path, bool deep) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str(), deep);
}

std::string config_to_json(const SimulationConfig& cfg) {
  json j;
  j["gamma"] = cfg.physics.gamma;
  j["A"] = cfg.physics.A;
  j["mu"] = cfg.physics.mu;
  j["n_cells"] = cfg.n_cells;
  j["grading"] = {
      {"type", cfg.grading.type == Grading::Type::uniform ? "uniform" : "boundary_graded"},
      {"power", cfg.grading.power}};
  j["dt"] = cfg.dt;
  j["t_end"] = cfg.t_end;
  j["picard_tol"] = cfg.picard_tol;
  j["picard_max"] = cfg.picard_max;
  if (cfg.anchors.auto_mode)
    j["anchors"] = "auto";
  else
    j["anchors"] = {{"x0", cfg.anchors.x0},
                    {"x1", cfg.anchors.x1},
                    {"x2", cfg.anchors.x2},
                    {"d", cfg.anchors.d}};
  j["output_every"] = cfg.output_every;
  j["snapshot_every"] = cfg.snapshot_every;
  j["gravity_on"] = cfg.gravity_on;
  j["pressure_on"] = cfg.pressure_on;
  j["init"] = cfg.init == SimulationConfig::Init::lane_emden ? "lane_emden" : "free_expansion";
  j["perturb_velocity"] = cfg.perturb_velocity;
  j["expansion_rate"] = cfg.expansion_rate;
  j["dt_adaptive"] = cfg.dt_adaptive;
  j["dt_min"] = cfg.dt_min;
  j["dt_max"] = cfg.dt_max;
  j["dt_growth"] = cfg.dt_growth;
  j["dt_safety"] = cfg.dt_safety;
  j["m_cap"] = cfg.m_cap;
  j["energy_blowup"] = cfg.energy_blowup;
  j["lane_emden_step"] = cfg.lane_emden_step;
  j["lane_emden_xi_max"] = cfg.lane_emden_xi_max;
  j["view_samples"] = cfg.view_samples;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

std::string version_string() { return "starsim 0.1.0"; }

std::string platform_string() {
#if defined(__clang__)
  return std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  return "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#else
  return "unknown";
#endif
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
  return buf;
}

}  // namespace starsim

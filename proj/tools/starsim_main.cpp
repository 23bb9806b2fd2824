#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "starsim/config.hpp"
#include "starsim/errors.hpp"
#include "starsim/output.hpp"
#include "starsim/validation.hpp"

namespace fs = std::filesystem;
using namespace starsim;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string resolve_out_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_absolute()) return p.string();
  const char* root = std::getenv("STARSIM_OUT_ROOT");
  if (root && *root) return (fs::path(root) / p).string();
  return p.string();
}

int cmd_lane_emden(double gamma, double A, double xi_max, double step,
                   const std::string& out_dir) {
  PolytropeConfig cfg{gamma, A, 1.0};
  StationaryProfile profile = lane_emden_solve(cfg, xi_max, step);
  if (profile.support_class == SupportClass::compact)
    profile = normalize_total_mass(profile);

  const std::string dir = resolve_out_dir(out_dir);
  fs::create_directories(dir);

  std::string csv = "xi,theta,r,rho,x_mass\n";
  for (std::size_t i = 0; i < profile.xi.size(); ++i) {
    csv += format_double(profile.xi[i]);
    csv += ',';
    csv += format_double(profile.theta[i]);
    csv += ',';
    csv += format_double(profile.r_table[i]);
    csv += ',';
    csv += format_double(profile.rho_table[i]);
    csv += ',';
    csv += format_double(profile.x_mass_table[i]);
    csv += '\n';
  }
  std::ofstream((fs::path(dir) / "lane_emden.csv")) << csv;

  nlohmann::json j;
  j["gamma"] = gamma;
  j["A"] = A;
  j["support"] = profile.support_class == SupportClass::compact ? "compact" : "infinite";
  if (profile.support_class == SupportClass::compact) {
    j["xi1"] = profile.xi1;
    j["R"] = profile.radius;
    j["rho_c"] = profile.central_density;
    const ExponentFit fit = stationary_exponents(profile, 0.1);
    j["eulerian_exponent"] = fit.eulerian_exp;
    j["lagrangian_exponent"] = fit.lagrangian_exp;
  }
  std::ofstream((fs::path(dir) / "lane_emden.json")) << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool audit) {
  SimulationConfig cfg = parse_config(config_path);
  const std::string dir = resolve_out_dir(out_dir);
  DirLock lock(dir);

  RunManifest manifest;
  manifest.config_echo = config_to_json(cfg);
  manifest.version = version_string();
  manifest.platform = platform_string();
  manifest.started = iso_now();

  RunResult result = run(cfg);

  manifest.finished = iso_now();
  manifest.abort_reason = result.abort_reason;
  write_run_outputs(dir, cfg, result, manifest, audit);

  if (!result.abort_reason.empty()) {
    std::cerr << "run aborted: " << result.abort_reason << "\n";
    return kExitNumerical;
  }
  std::cout << "run complete: t = " << result.final_state.time
            << ", steps = " << result.steps_taken << "\n";
  return 0;
}

int cmd_convergence(const std::string& config_path, int levels, const std::string& oracle,
                    const std::string& out_dir) {
  SimulationConfig base = parse_config(config_path);
  std::vector<int> resolutions;
  int n = base.n_cells;
  for (int i = 0; i < levels; ++i) {
    resolutions.push_back(n);
    n *= 2;
  }
  ConvergenceOracle mode;
  if (oracle == "free_expansion")
    mode = ConvergenceOracle::free_expansion_closed_form;
  else if (oracle == "stationary")
    mode = ConvergenceOracle::stationary_velocity;
  else
    throw ValidationError("oracle must be 'free_expansion' or 'stationary'");

  ConvergenceStudy study = convergence_driver(base, resolutions, mode);

  const std::string dir = resolve_out_dir(out_dir);
  fs::create_directories(dir);
  std::string csv = "n_cells,error\n";
  for (std::size_t i = 0; i < study.resolutions.size(); ++i) {
    csv += std::to_string(study.resolutions[i]);
    csv += ',';
    csv += format_double(study.errors[i]);
    csv += '\n';
  }
  std::ofstream((fs::path(dir) / "convergence.csv")) << csv;
  nlohmann::json j;
  j["resolutions"] = study.resolutions;
  j["errors"] = study.errors;
  j["pairwise_orders"] = study.pairwise_orders;
  j["observed_order"] = study.observed_order;
  std::ofstream((fs::path(dir) / "convergence.json")) << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_mms(const std::string& choice, int n_base, const std::string& out_dir) {
  MmsProblem problem = mms_problem(choice, 1.0);
  nlohmann::json j;
  j["choice"] = choice;
  std::vector<int> ns = {n_base, 2 * n_base, 4 * n_base};
  std::vector<double> errs;
  for (int n : ns) {
    const double h = 1.0 / n;
    errs.push_back(mms_error(problem, n, 0.05 * h * h, 0.01, 1.0));
  }
  j["resolutions"] = ns;
  j["errors"] = errs;
  std::vector<double> orders;
  for (std::size_t i = 1; i < errs.size(); ++i)
    orders.push_back(std::log2(errs[i - 1] / errs[i]));
  j["spatial_orders"] = orders;

  const std::string dir = resolve_out_dir(out_dir);
  fs::create_directories(dir);
  std::string csv = "n_cells,error\n";
  for (std::size_t i = 0; i < ns.size(); ++i) {
    csv += std::to_string(ns[i]);
    csv += ',';
    csv += format_double(errs[i]);
    csv += '\n';
  }
  std::ofstream((fs::path(dir) / ("mms_" + choice + ".csv"))) << csv;
  std::ofstream((fs::path(dir) / ("mms_" + choice + ".json"))) << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& out_dir, int jobs) {
  std::ifstream in(config_path);
  if (!in) throw ParseError("config: cannot open '" + config_path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json base = nlohmann::json::parse(buf.str());

  std::vector<SweepAxis> axes;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--set expects key=v1,v2,...");
    SweepAxis axis;
    axis.key = s.substr(0, eq);
    std::stringstream vs(s.substr(eq + 1));
    std::string tok;
    while (std::getline(vs, tok, ',')) axis.values.push_back(tok);
    if (axis.values.empty()) throw ValidationError("--set needs at least one value");
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw ValidationError("sweep: provide at least one --set axis");

  // cartesian product of overrides
  std::vector<std::map<std::string, std::string>> combos = {{}};
  for (const auto& axis : axes) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& combo : combos)
      for (const auto& v : axis.values) {
        auto c = combo;
        c[axis.key] = v;
        next.push_back(std::move(c));
      }
    combos = std::move(next);
  }

  const std::string root = resolve_out_dir(out_dir);
  fs::create_directories(root);

  auto one = [&](std::size_t idx) -> int {
    nlohmann::json j = base;
    for (const auto& [k, v] : combos[idx]) {
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(v);
      } catch (...) {
        parsed = v;  // plain string
      }
      j[k] = parsed;
    }
    SimulationConfig cfg = config_from_json_text(j.dump());
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", idx);
    const std::string dir = (fs::path(root) / name).string();
    DirLock lock(dir);
    RunManifest manifest;
    manifest.config_echo = config_to_json(cfg);
    manifest.version = version_string();
    manifest.platform = platform_string();
    manifest.started = iso_now();
    RunResult result = run(cfg);
    manifest.finished = iso_now();
    manifest.abort_reason = result.abort_reason;
    write_run_outputs(dir, cfg, result, manifest, false);
    return result.abort_reason.empty() ? 0 : kExitNumerical;
  };

  int rc = 0;
  std::size_t next_job = 0;
  while (next_job < combos.size()) {
    std::vector<std::future<int>> batch;
    for (int k = 0; k < jobs && next_job < combos.size(); ++k, ++next_job)
      batch.push_back(std::async(std::launch::async, one, next_job));
    for (auto& f : batch) rc = std::max(rc, f.get());
  }
  std::cout << "sweep complete: " << combos.size() << " runs\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spherically symmetric viscous self-gravitating gas simulator"};
  app.require_subcommand(1);

  // lane-emden
  double gamma = 5.0 / 3.0, A = 1.0, xi_max = 0.0, step = 1e-4;
  std::string out_dir = "out";
  auto* le = app.add_subcommand("lane-emden", "solve an equilibrium profile");
  le->add_option("--gamma", gamma, "adiabatic exponent")->required();
  le->add_option("--A", A, "entropy constant");
  le->add_option("--xi-max", xi_max, "integration cap (0 = auto)");
  le->add_option("--step", step, "RK4 step");
  le->add_option("--out", out_dir, "output directory");

  // run
  std::string config_path;
  bool audit = false;
  auto* rn = app.add_subcommand("run", "integrate a configured simulation");
  rn->add_option("--config", config_path, "JSON config path")->required();
  rn->add_option("--out", out_dir, "output directory");
  rn->add_flag("--audit", audit, "dump the full energy ledger per output step");

  // convergence
  int levels = 3;
  std::string oracle = "free_expansion";
  auto* cv = app.add_subcommand("convergence", "grid refinement study");
  cv->add_option("--config", config_path, "JSON config path")->required();
  cv->add_option("--levels", levels, "number of doublings");
  cv->add_option("--oracle", oracle, "free_expansion | stationary");
  cv->add_option("--out", out_dir, "output directory");

  // mms
  std::string choice = "smooth";
  int n_base = 100;
  auto* mm = app.add_subcommand("mms", "manufactured-solution order check");
  mm->add_option("--choice", choice, "zero | smooth | degenerate");
  mm->add_option("--n", n_base, "base resolution");
  mm->add_option("--out", out_dir, "output directory");

  // sweep
  std::vector<std::string> sets;
  int jobs = 2;
  auto* sw = app.add_subcommand("sweep", "cartesian parameter sweep");
  sw->add_option("--config", config_path, "JSON config path")->required();
  sw->add_option("--set", sets, "key=v1,v2,... (repeatable)");
  sw->add_option("--jobs", jobs, "parallel runs");
  sw->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (le->parsed()) return cmd_lane_emden(gamma, A, xi_max, step, out_dir);
    if (rn->parsed()) return cmd_run(config_path, out_dir, audit);
    if (cv->parsed()) return cmd_convergence(config_path, levels, oracle, out_dir);
    if (mm->parsed()) return cmd_mms(choice, n_base, out_dir);
    if (sw->parsed()) return cmd_sweep(config_path, sets, out_dir, jobs);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const AnchorsViolateCondr& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const UnknownChoice& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NoFiniteMassSolution& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const SimError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}

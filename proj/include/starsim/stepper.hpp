#pragma once

#include <optional>
#include <string>
#include <vector>

#include "starsim/energy.hpp"
#include "starsim/lagrangian.hpp"
#include "starsim/momentum.hpp"
#include "starsim/polytrope.hpp"

namespace starsim {

struct SimulationConfig {
  PolytropeConfig physics;
  int n_cells = 200;
  Grading grading;
  double dt = 1e-4;
  double t_end = 0.1;
  double picard_tol = 1e-10;
  int picard_max = 50;
  CutoffAnchors anchors;  // auto by default
  int output_every = 10;  // steps between series rows / snapshots
  int snapshot_every = 0; // 0: snapshots only at start and end
  bool gravity_on = true;
  bool pressure_on = true;

  enum class Init { lane_emden, free_expansion };
  Init init = Init::lane_emden;
  double perturb_velocity = 0.0;  // adds perturb_velocity * r to u at t = 0
  double expansion_rate = 0.1;    // free expansion: u0 = rate * r0

  bool dt_adaptive = false;
  double dt_min = 1e-9;
  double dt_max = 1e-2;
  double dt_growth = 1.2;
  double dt_safety = 1e-2;  // dt <= safety / (1 + M)

  double m_cap = 1e4;            // abort when M exceeds this
  double energy_blowup = 10.0;   // abort when E > blowup * E(0)
  double lane_emden_step = 1e-4;
  double lane_emden_xi_max = 0.0;
  int view_samples = 0;  // 0: 4 * n_cells + 1
  unsigned seed = 20210615;

  void validate() const;
};

struct StepReport {
  int picard_iters = 0;
  std::vector<double> contraction_ratios;
  std::vector<double> M_iterates;
  std::vector<double> F_iterates;  // u-part energy per iterate (zeroth temporal order)
  std::vector<double> H_iterates;  // rho-part energy per iterate
  double dt = 0.0;
  bool accepted = false;
  SolveReport solve;
  double last_change = 0.0;
};

// One implicit step by fixed-point iteration: momentum solve with frozen
// coefficients, exponential density update, radius reconstruction, repeated
// from the committed state until the combined sup-change falls below tol.
StepReport picard_step(LagrangianState& state, const SimulationConfig& cfg,
                       const CutoffPair& cutoffs);

// dt_next = clamp(dt * growth, dt_min, min(dt_max, safety / (1 + M))),
// halved after a rejected (diverged) step. Throws DtUnderflow below dt_min.
double dt_controller(double dt, const SimulationConfig& cfg, double M_current,
                     bool last_step_diverged);

struct SeriesRow {
  double t = 0.0;
  EnergyReport energy;
  StepReport step;
  double mass_residual = 0.0;  // |eulerian_mass - 1|
  double bc_residual = 0.0;    // last-row linear residual of the solve
  double R = 0.0;
};

struct RunResult {
  std::vector<SeriesRow> series;
  std::vector<LagrangianState> snapshots;
  std::vector<double> snapshot_times;
  LagrangianState final_state;
  CutoffPair cutoffs;
  std::string abort_reason;  // empty on clean completion
  int steps_taken = 0;
  double max_u_inf = 0.0;  // sup over all steps of ||u||_inf
};

LagrangianState initial_state(const SimulationConfig& cfg);

RunResult run(const SimulationConfig& cfg);

}  // namespace starsim

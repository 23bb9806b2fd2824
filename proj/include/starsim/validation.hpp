#pragma once

#include <functional>
#include <string>
#include <vector>

#include "starsim/stepper.hpp"

namespace starsim {

// Manufactured problem for the linear momentum solve: analytic coefficient
// fields, exact solution, and the source obtained by substituting the exact
// solution into the equation by hand (closed forms in the implementation).
struct MmsProblem {
  std::string name;
  std::function<double(double)> rho_of_x;
  std::function<double(double)> r_of_x;
  std::function<double(double, double)> u_exact;  // (t, x)
  std::function<double(double, double)> source;   // (t, x)
};

MmsProblem mms_problem(const std::string& choice, double mu);

// Marches the implicit solver on the manufactured problem; returns the final
// velocity field.
std::vector<double> mms_solution(const MmsProblem& problem, int n_cells, double dt,
                                 double t_end, double mu);

// Sup-norm error of the march against the exact solution at t_end.
double mms_error(const MmsProblem& problem, int n_cells, double dt, double t_end,
                 double mu);

struct BcResidual {
  double absolute = 0.0;
  double pressure_relative = 0.0;
  double face_density = 0.0;  // extrapolated, clamped at zero
};

// Dynamic-condition residual |mu rho r^2 D_x u - p| at the vacuum face, with
// face values extrapolated from the outermost cells. Zero for states whose
// density vanishes toward the face; flags corrupted boundary data.
BcResidual bc_residual(const LagrangianState& state, const PolytropeConfig& cfg);

// Fitted decay exponent of rho against (1 - x) over the 8..24 cells nearest
// the boundary, excluding the last cell.
double vacuum_exponent(const LagrangianState& state);
std::vector<double> vacuum_exponent_track(const std::vector<LagrangianState>& snapshots);

// Fitted decay exponent of rho against (R - r) over the same cells.
double eulerian_surface_exponent(const LagrangianState& state);

enum class ConvergenceOracle { free_expansion_closed_form, stationary_velocity };

struct ConvergenceStudy {
  std::vector<int> resolutions;
  std::vector<double> errors;
  std::vector<double> pairwise_orders;
  double observed_order = 0.0;  // least-squares slope of log err vs log h
};

ConvergenceStudy convergence_driver(const SimulationConfig& base,
                                    const std::vector<int>& resolutions,
                                    ConvergenceOracle oracle);

// Temporal order for the free-expansion configuration by Richardson
// differences between consecutive dt runs on a fixed grid (cancels the
// dt-independent spatial error).
double temporal_order_free_expansion(const SimulationConfig& base,
                                     const std::vector<double>& dts);

// Relative sup-norm error of (rho, r) against the closed-form free expansion
// rho0/(1+ct)^3, r0(1+ct).
double free_expansion_error(const LagrangianState& initial, const LagrangianState& final_state,
                            double rate);

}  // namespace starsim

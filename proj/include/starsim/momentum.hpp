#pragma once

#include <utility>
#include <vector>

#include "starsim/lagrangian.hpp"
#include "starsim/polytrope.hpp"

namespace starsim {

class CutoffPair;

// Coefficient fields frozen for one linear momentum solve:
//   D_t u = mu D_x(rho r^4 D_x u) - 2 mu u / (rho r^2) - r^2 D_x p - 4 pi x / r^2
// with u(0) = 0 and the viscous flux mu rho r^4 D_x u pinned to r^2 p at x=1.
struct FrozenCoefficients {
  std::vector<double> x_nodes;
  std::vector<double> rho_cells;
  std::vector<double> r_nodes;
  std::vector<double> pressure_cells;
  double mu = 1.0;
  double face_pressure = 0.0;  // p at the vacuum face, 0 unless manufactured
  bool pressure_on = true;
  bool gravity_on = true;
  // A pressureless unconstrained cloud carries a nonzero viscous flux through
  // the face (the traction condition degenerates there); when set, the face
  // node follows the interior by the rigid-flow extrapolation
  // u_N = (r_N / r_{N-1}) u_{N-1}, which is exact for u proportional to r.
  bool ballistic_face = false;
  std::vector<double> extra_source;  // optional nodal source (manufactured tests)

  int n_cells() const { return static_cast<int>(rho_cells.size()); }
  double dx(int i) const { return x_nodes[i + 1] - x_nodes[i]; }
  double x_center(int i) const { return 0.5 * (x_nodes[i] + x_nodes[i + 1]); }
  double cell_radius(int i) const;
  double dual_width(int i) const;

  static FrozenCoefficients from_state(const LagrangianState& state,
                                       const PolytropeConfig& cfg,
                                       bool pressure_on = true, bool gravity_on = true);
};

// Symmetric tridiagonal implicit-Euler operator in the mass inner product.
// Row i reads: diag*u_i + sub*u_{i-1} + super*u_{i+1} = rhs; row 0 is the
// Dirichlet identity row.
struct TridiagonalOperator {
  std::vector<double> sub, diag, super;
  std::vector<double> reaction_diag;  // w_i * 2 mu / (rho r^2), included in diag
  std::vector<double> dual_width;
  std::vector<double> forcing;  // nodal f (pressure + gravity + extra source)
  bool slave_last_row = false;  // ballistic face: u_N = (r_N/r_{N-1}) u_{N-1}
  double dt = 0.0;

  std::vector<double> rhs(const std::vector<double>& u_prev) const;
  std::vector<double> apply(const std::vector<double>& u) const;
};

struct SolveReport {
  double residual_norm = 0.0;    // ||T u - rhs||_inf / scale
  bool spd_ok = true;            // all elimination pivots positive
  double bc_row_residual = 0.0;  // last-row imbalance of the returned solution
  double bc_scale = 0.0;         // local pressure scale at the boundary
};

TridiagonalOperator assemble(const FrozenCoefficients& coeffs, double dt);

std::pair<std::vector<double>, SolveReport> solve(const FrozenCoefficients& coeffs,
                                                  const std::vector<double>& u_prev,
                                                  double dt);

// mu sum chi rho r^4 |D_x u|^2 dx + sum chi w 2 mu u^2/(rho r^2); the quadratic
// form of the viscous operator, shared between the solver energy identity and
// the dissipation diagnostics. chi = nullptr means weight 1.
double viscous_energy_form(const FrozenCoefficients& coeffs, const std::vector<double>& u,
                           const CutoffPair* chi);

// (1/2)(||u+||^2 - ||u-||^2) + dt [a(u+,u+) - (f,u+) - boundary work]; equals
// -(1/2)||u+ - u-||^2 for the implicit step, so it is <= 0 up to rounding.
double discrete_energy_identity(const std::vector<double>& u_prev,
                                const std::vector<double>& u_next,
                                const FrozenCoefficients& coeffs, double dt);

}  // namespace starsim

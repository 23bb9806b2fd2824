#pragma once

#include <algorithm>
#include <vector>

#include "starsim/polytrope.hpp"

namespace starsim {

struct Grading {
  enum class Type { uniform, boundary_graded } type = Type::uniform;
  double power = 2.0;  // graded map x(s) = 1 - (1-s)^power
};

// Width of the band of cells next to the vacuum face where the density has
// fractional-power structure; boundary reconstructions act on this band.
inline int vacuum_zone_cells(int n_cells) { return std::min(16, n_cells / 4); }

struct DivergenceField {
  std::vector<double> div_cells;  // rho r^2 D_x u + 2u/r per cell
};

// Staggered mass-grid state: density at cell centers, velocity and radius at
// nodes. The discrete Jacobian law (r_{i+1}^3 - r_i^3)/3 = dx_i / rho_i is
// maintained exactly by radius_update.
struct LagrangianState {
  std::vector<double> x_nodes;    // N+1 nodes, 0 = x_0 < ... < x_N = 1
  std::vector<double> rho_cells;  // N, positive
  std::vector<double> u_nodes;    // N+1, u[0] = 0
  std::vector<double> r_nodes;    // N+1, increasing, r[0] = 0
  double time = 0.0;

  struct HistoryLevel {
    double t;
    std::vector<double> u;
    std::vector<double> rho;
  };
  std::vector<HistoryLevel> history;  // newest first, capped at 3 levels

  int n_cells() const { return static_cast<int>(rho_cells.size()); }
  double dx(int i) const { return x_nodes[i + 1] - x_nodes[i]; }
  double x_center(int i) const { return 0.5 * (x_nodes[i] + x_nodes[i + 1]); }

  // Radius at which difference quotients across cell i are exact for the
  // Jacobian law: r_tilde^2 = (r_i^2 + r_i r_{i+1} + r_{i+1}^2) / 3.
  double cell_radius(int i) const;
  // u interpolated (linearly in r) to cell_radius(i).
  double cell_velocity(int i) const;

  double dual_width(int i) const;  // node control-volume width in x
  void push_history();             // records (t, u, rho), keeps 3 levels
};

// Initial state from a normalized stationary profile: u = 0, rho sampled at
// mass-cell centers, r reconstructed.
LagrangianState from_profile(const StationaryProfile& profile, int n_cells,
                             const Grading& grading = {});

// r_i = (3 sum_{j<i} dx_j / rho_j)^(1/3); exact quadrature of D_x r = 1/(rho r^2).
void radius_update(LagrangianState& state);

DivergenceField compute_divergence(const LagrangianState& state);

// rho <- rho * exp(-dt * div) per cell; positivity is preserved exactly.
void density_update(LagrangianState& state, const DivergenceField& div, double dt);

// Eulerian resampling of (rho, u) onto a uniform radius grid.
struct EulerianView {
  std::vector<double> r, rho, u;
  std::vector<double> x_mass;  // exact mass coordinate of each sample
  double h = 0.0;
  double mass_integral() const;  // trapezoid of rho r^2 dr
};

EulerianView eulerian_view(const LagrangianState& state, double r_max, int n_samples);

// Exact mass coordinate of radius r (piecewise closed form in r^3).
double mass_coordinate(const LagrangianState& state, double r);

// Eulerian quadrature of int rho r^2 dr with shell-wise constant density;
// equals sum dx_i up to rounding when the Jacobian law holds.
double eulerian_mass(const LagrangianState& state);

struct MomentumIntegralResidual {
  std::vector<double> cell_residual;  // cells with x_center >= x_min only, rest 0
  double sup_norm = 0.0;
  double l2_norm = 0.0;
};

// Residual of the x-integrated momentum balance
//   -rho r^2 D_x u + p/mu + (1/mu) int_1^x {D_t u / r^2 + 4 pi y / r^4
//     + 2 mu u / (rho r^4) - 2 mu D_x u / r} dy
// evaluated at cell centers with x >= x_min. Needs one history level for D_t u.
MomentumIntegralResidual integrated_momentum_residual(const LagrangianState& state,
                                                      const PolytropeConfig& cfg,
                                                      double x_min = 0.0);

}  // namespace starsim

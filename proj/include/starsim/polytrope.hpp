#pragma once

#include <vector>

#include "starsim/numerics.hpp"

namespace starsim {

struct PolytropeConfig {
  double gamma = 5.0 / 3.0;  // adiabatic exponent, > 1
  double A = 1.0;            // entropy constant in p = A rho^gamma
  double mu = 1.0;           // viscosity coefficient

  double pressure(double rho) const;
  double polytropic_index() const { return 1.0 / (gamma - 1.0); }
  void validate() const;  // throws ValidationError on bad ranges
};

enum class SupportClass { compact, infinite, none };

// Equilibrium gaseous sphere. Units put the mass coordinate
// x = int_0^r rho s^2 ds on [0,1] once normalized (total mass 4pi).
struct StationaryProfile {
  double gamma = 0.0;
  double A = 0.0;
  double central_density = 0.0;
  double radius = 0.0;  // finite iff compact
  SupportClass support_class = SupportClass::none;

  double xi1 = 0.0;           // first zero of theta (compact only)
  double dtheta_at_xi1 = 0.0;
  double alpha = 0.0;         // length scale, r = alpha * xi

  std::vector<double> xi, theta, dtheta;  // Lane-Emden table, uniform xi grid
  std::vector<double> r_table, rho_table, x_mass_table;

  double total_mass() const;  // int rho s^2 ds; 1 after normalization
  bool is_normalized(double tol = 1e-8) const;

  // Density against the mass coordinate. Interpolates theta^{n+1} (the
  // pressure variable, linear in 1-x at the surface) so the vacuum boundary
  // is resolved cleanly.
  double rho_of_x(double x) const;
  double r_of_x(double x) const;

  Pchip q_of_x;  // theta^{n+1} against x
  Pchip radius_of_x;
};

// Integrates the index-n Lane-Emden equation (n = 1/(gamma-1)) by fixed-step
// RK4 with a series start, detects the first zero when present, and attaches
// the physical profile with central density 1 (call normalize_total_mass to
// fix the mass). xi_max = 0 picks a default per support class.
StationaryProfile lane_emden_solve(const PolytropeConfig& cfg, double xi_max = 0.0,
                                   double step = 1e-4);

// Rescales the central density (A held fixed) through the Lane-Emden homology
// so that int rho s^2 ds = 1.
StationaryProfile normalize_total_mass(const StationaryProfile& profile);

struct ExponentFit {
  double eulerian_exp = 0.0;    // rho ~ (R-r)^e near the surface
  double lagrangian_exp = 0.0;  // rho ~ (1-x)^e near x = 1
};

// Log-log least-squares decay exponents over the outermost `window` fraction
// of the star.
ExponentFit stationary_exponents(const StationaryProfile& profile, double window);

}  // namespace starsim

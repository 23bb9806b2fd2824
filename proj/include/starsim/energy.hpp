#pragma once

#include <array>
#include <vector>

#include "starsim/lagrangian.hpp"
#include "starsim/polytrope.hpp"

namespace starsim {

struct CutoffAnchors {
  bool auto_mode = true;
  double x0 = 0.0, x1 = 0.0, x2 = 0.0, d = 0.0;  // used when auto_mode = false
};

// Complementary C^2 quintic-smoothstep weights: chi ramps up in the mass
// coordinate (0 below x0, 1 above x1), zeta ramps down in radius (1 below
// r1+d, 0 above r2-d). chi + zeta >= 1 across the domain.
class CutoffPair {
 public:
  double x0 = 0, x1 = 0, x2 = 0;
  double r0 = 0, r1 = 0, r2 = 0;
  double d = 0;
  bool unit_interior_bound = false;  // whether 1/(r0-d) <= 1 held (recorded only)

  double chi(double x) const;
  double chi_prime(double x) const;
  double zeta(double r) const;
  double zeta_prime(double r) const;
  double zeta_support_end() const { return r2 - d; }
};

// Validates the anchor separations (0 < 2d < r0 and 0 < 3d < r2-r1 of the
// admissibility conditions; the unit bound 1/(r0-d) <= 1 is recorded, not
// enforced, since mass-normalized stars of radius ~1 cannot satisfy it) and
// builds the pair. Anchors are given in mass coordinates and mapped to radii
// through the state's exact r(x).
CutoffPair build_cutoffs(const LagrangianState& state, const CutoffAnchors& anchors);

double radius_at_mass(const LagrangianState& state, double x);  // exact piecewise map

// ---- Lagrangian energy ------------------------------------------------

struct EnergyBreakdown {
  double u_sq = 0;                 // (1/2) int chi u^2
  double rho_gamma = 0;            // A/(gamma-1) int chi rho^(gamma-1)
  std::array<double, 3> ut_sq{};   // (1/2) int chi |D_t^j u|^2, j = 1..3
  std::array<double, 3> visc{};    // (mu/2) int chi {rho r^4 |D_t^j D_x u|^2 + 2|D_t^j u|^2/(rho r^2)}, j = 0..2
  std::array<double, 3> drho{};    // int chi rho^(2g-2) r^4 |D_t^j D_x rho|^2, j = 0..2
  std::array<double, 2> d2rho{};   // (1/2) int chi rho^(4g-2) r^8 |D_t^j D_x^2 rho|^2, j = 0..1
  double d3rho = 0;                // (1/2) int chi rho^(8g-2) r^12 |D_x^3 rho|^2
  int time_orders_u = 0;           // highest D_t^j u present (absent orders stay 0)
  int time_orders_rho = 0;
  double total() const;
  // sum over terms with temporal order <= jmax; order-j estimates divide by
  // dt^j and amplify startup transients, so monitors compare at the order
  // available from the initial data
  double total_through(int jmax) const;
};

EnergyBreakdown energy_lagrangian(const LagrangianState& state, const CutoffPair& cutoffs,
                                  const PolytropeConfig& cfg);

// ---- Eulerian energy ---------------------------------------------------

// Per derivative order m = 0..3; radial identities are exact through m = 2,
// m = 3 uses the radial surrogate |d_r^3 f|^2.
struct EulerianBreakdown {
  std::array<double, 4> rho_terms{};
  std::array<double, 4> u_terms{};
  double total() const;
};

EulerianBreakdown energy_eulerian(const EulerianView& view, const CutoffPair& cutoffs,
                                  const PolytropeConfig& cfg);

// ---- Dissipation ---------------------------------------------------------

struct DissipationBreakdown {
  std::array<double, 4> lag{};   // mu int chi {rho r^4 |D_t^j D_x u|^2 + 2|D_t^j u|^2/(rho r^2)}, j=0..3
  std::array<double, 3> ut{};    // int chi |D_t^j u|^2, j=1..3
  std::array<double, 4> eul{};   // mu int zeta |grad d^m u|^2 dV, m=0..3 (surrogate above m=1)
  int time_orders = 0;
  double total() const;
};

DissipationBreakdown dissipation(const LagrangianState& state, const EulerianView& view,
                                 const CutoffPair& cutoffs, const PolytropeConfig& cfg);

// ---- Sup-norm ledger and M -----------------------------------------------

struct KLedger {
  // order: rho, |u/r|, |div| (=|D_t rho/rho|), |rho r^2 D_x u|,
  //        |rho r^2 D_t D_x u|, |D_t u / r|, |rho^(2g-1) r^2 D_x rho|
  std::array<double, 7> lagrangian{};
  // order: rho, |u|, |d_r u|, |d_t rho / rho|, |d_r rho / rho|, |d_t u|
  std::array<double, 6> eulerian{};
  double M = 0.0;  // sup over all cells of |div|
  double K() const;
};

KLedger k_ledger_and_M(const LagrangianState& state, const CutoffPair& cutoffs,
                       const PolytropeConfig& cfg);

// ---- Pointwise continuity-equation inequality ------------------------------

struct RtMargin {
  std::vector<double> margin_cells;  // 3*(rho r^4 |D_x u|^2 + 2u^2/(rho r^2)) - div^2/rho, chi-weighted
  double min_margin = 0.0;
  double lhs = 0.0;   // int chi rho^{-3} |D_t rho|^2
  double rhs3 = 0.0;  // 3 int chi (rho r^4 |D_x u|^2 + 2u^2/(rho r^2))
};

RtMargin rt_inequality_check(const LagrangianState& state, const CutoffPair& cutoffs);

// ---- Energy-inequality feasibility monitor ---------------------------------

struct EiFeasibility {
  bool feasible = false;
  double C1 = 0.0, C2 = 0.0;
  double violation_fraction = 1.0;
};

// Searches for C1, C2 >= 0 with dE/dt + D/2 <= C1 E + C2 E^2 at >= 95% of
// samples (finite-difference dE/dt). Throws SeriesTooShort below 10 samples.
EiFeasibility energy_inequality_monitor(const std::vector<double>& times,
                                        const std::vector<double>& energies,
                                        const std::vector<double>& dissipations);

// ---- Pressure-form identity -------------------------------------------------

struct PressureFormIdentity {
  double direct = 0.0;          // int chi rho^(2g-2) r^4 |D_x rho|^2
  double pressure_route = 0.0;  // (1/(A g)^2) int chi r^4 |D_x p|^2
  double residual = 0.0;
};

// Both routes share the difference stencil; evaluated over cells with
// x_center <= 1 - boundary_margin, where difference quotients of the
// fractional-power density profile are second-order.
PressureFormIdentity pressure_form_identity(const LagrangianState& state,
                                            const CutoffPair& cutoffs,
                                            const PolytropeConfig& cfg,
                                            double boundary_margin = 0.02);

// ---- Aggregate report --------------------------------------------------------

struct EnergyReport {
  EnergyBreakdown lag;
  EulerianBreakdown eul;
  DissipationBreakdown diss;
  KLedger ledger;
  double rt_margin_min = 0.0;
  double E_L = 0.0, E_E = 0.0, E = 0.0, D = 0.0;
  double E_comparable = 0.0;  // temporal orders <= 1 only; see total_through
  double weaving_ratio = 0.0;  // K / (E^(1/2) + E)
};

EnergyReport evaluate_energies(const LagrangianState& state, const CutoffPair& cutoffs,
                               const PolytropeConfig& cfg, int view_samples = 0);

}  // namespace starsim

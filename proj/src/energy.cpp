#include "starsim/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "starsim/errors.hpp"
#include "starsim/momentum.hpp"

namespace starsim {

namespace {
constexpr double kFourPi = 4.0 * M_PI;

double smoothstep5(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double smoothstep5_prime(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = t * (1.0 - t);
  return 30.0 * a * a;
}
}  // namespace

double CutoffPair::chi(double x) const { return smoothstep5((x - x0) / (x1 - x0)); }
double CutoffPair::chi_prime(double x) const {
  return smoothstep5_prime((x - x0) / (x1 - x0)) / (x1 - x0);
}
double CutoffPair::zeta(double r) const {
  const double lo = r1 + d, hi = r2 - d;
  return 1.0 - smoothstep5((r - lo) / (hi - lo));
}
double CutoffPair::zeta_prime(double r) const {
  const double lo = r1 + d, hi = r2 - d;
  return -smoothstep5_prime((r - lo) / (hi - lo)) / (hi - lo);
}

double radius_at_mass(const LagrangianState& state, double x) {
  x = std::clamp(x, 0.0, 1.0);
  const auto& xn = state.x_nodes;
  const auto it = std::upper_bound(xn.begin(), xn.end(), x);
  int i = static_cast<int>(it - xn.begin()) - 1;
  i = std::clamp(i, 0, state.n_cells() - 1);
  const double r3 = state.r_nodes[i] * state.r_nodes[i] * state.r_nodes[i] +
                    3.0 * (x - xn[i]) / state.rho_cells[i];
  return std::cbrt(r3);
}

CutoffPair build_cutoffs(const LagrangianState& state, const CutoffAnchors& anchors) {
  CutoffPair c;
  if (anchors.auto_mode) {
    const double rho_c = state.rho_cells.front();
    double x1 = 0.5;
    for (int i = 0; i < state.n_cells(); ++i) {
      if (state.rho_cells[i] <= 0.6 * rho_c) {
        x1 = state.x_center(i);
        break;
      }
    }
    c.x0 = 0.5 * x1;
    c.x1 = x1;
    c.x2 = 0.5 * (1.0 + x1);
    c.r0 = radius_at_mass(state, c.x0);
    c.r1 = radius_at_mass(state, c.x1);
    c.r2 = radius_at_mass(state, c.x2);
    c.d = std::min(c.r0 / 4.0, (c.r2 - c.r1) / 6.0);
  } else {
    c.x0 = anchors.x0;
    c.x1 = anchors.x1;
    c.x2 = anchors.x2;
    c.d = anchors.d;
    if (!(0.0 < c.x0 && c.x0 < c.x1 && c.x1 < c.x2 && c.x2 < 1.0))
      throw AnchorsViolateCondr("anchors must satisfy 0 < x0 < x1 < x2 < 1");
    c.r0 = radius_at_mass(state, c.x0);
    c.r1 = radius_at_mass(state, c.x1);
    c.r2 = radius_at_mass(state, c.x2);
  }
  if (!(c.d > 0.0 && 2.0 * c.d < c.r0))
    throw AnchorsViolateCondr("anchor condition 0 < 2d < r0 violated");
  if (!(3.0 * c.d < c.r2 - c.r1))
    throw AnchorsViolateCondr("anchor condition 0 < 3d < r2 - r1 violated");
  c.unit_interior_bound = 1.0 / (c.r0 - c.d) <= 1.0;
  return c;
}

// ---------------------------------------------------------------------------
// Temporal derivative fields
// ---------------------------------------------------------------------------

namespace {

struct TimeDerivatives {
  // dtu[j-1]: nodal D_t^j u; dtrho[j-1]: cell D_t^j rho
  std::vector<std::vector<double>> dtu, dtrho;
  int orders_u = 0, orders_rho = 0;
};

// D_t u from the momentum equation applied to the instantaneous fields;
// higher orders from Newton divided differences over the history ring.
TimeDerivatives time_derivatives(const LagrangianState& state, const PolytropeConfig& cfg) {
  TimeDerivatives td;
  const int n = state.n_cells();

  FrozenCoefficients coeffs = FrozenCoefficients::from_state(state, cfg);
  TridiagonalOperator op = assemble(coeffs, 1.0);
  std::vector<double> au = op.apply(state.u_nodes);
  std::vector<double> dtu1(n + 1, 0.0);
  for (int i = 1; i <= n; ++i)
    dtu1[i] = op.forcing[i] - (au[i] - op.dual_width[i] * state.u_nodes[i]) / op.dual_width[i];
  td.dtu.push_back(std::move(dtu1));
  td.orders_u = 1;

  DivergenceField div = compute_divergence(state);
  std::vector<double> dtrho1(n);
  for (int i = 0; i < n; ++i) dtrho1[i] = -state.rho_cells[i] * div.div_cells[i];
  td.dtrho.push_back(std::move(dtrho1));
  td.orders_rho = 1;

  const int levels = 1 + static_cast<int>(state.history.size());
  for (int order = 2; order <= 3; ++order) {
    if (levels < order + 1) break;
    std::vector<double> times;
    std::vector<std::vector<double>> us, rhos;
    times.push_back(state.time);
    us.push_back(state.u_nodes);
    rhos.push_back(state.rho_cells);
    for (const auto& lv : state.history) {
      times.push_back(lv.t);
      us.push_back(lv.u);
      rhos.push_back(lv.rho);
    }
    td.dtu.push_back(divided_difference_derivative(times, us, order));
    td.dtrho.push_back(divided_difference_derivative(times, rhos, order));
    td.orders_u = order;
    td.orders_rho = order;
  }
  return td;
}

std::vector<double> cell_centers(const LagrangianState& st) {
  std::vector<double> xc(st.n_cells());
  for (int i = 0; i < st.n_cells(); ++i) xc[i] = st.x_center(i);
  return xc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lagrangian energy
// ---------------------------------------------------------------------------

double EnergyBreakdown::total() const {
  double t = u_sq + rho_gamma + d3rho;
  for (double v : ut_sq) t += v;
  for (double v : visc) t += v;
  for (double v : drho) t += v;
  for (double v : d2rho) t += v;
  return t;
}

double EnergyBreakdown::total_through(int jmax) const {
  double t = u_sq + rho_gamma + d3rho;
  for (int j = 1; j <= 3; ++j)
    if (j <= jmax) t += ut_sq[j - 1];
  for (int j = 0; j <= 2; ++j)
    if (j <= jmax) t += visc[j] + drho[j];
  for (int j = 0; j <= 1; ++j)
    if (j <= jmax) t += d2rho[j];
  return t;
}

EnergyBreakdown energy_lagrangian(const LagrangianState& state, const CutoffPair& cutoffs,
                                  const PolytropeConfig& cfg) {
  const int n = state.n_cells();
  const double gamma = cfg.gamma, A = cfg.A;
  EnergyBreakdown out;

  const TimeDerivatives td = time_derivatives(state, cfg);
  out.time_orders_u = td.orders_u;
  out.time_orders_rho = td.orders_rho;

  const std::vector<double> xc = cell_centers(state);
  const std::vector<double> drho_dx = derivative_nonuniform(xc, state.rho_cells);
  const std::vector<double> d2rho_dx = derivative_nonuniform(xc, drho_dx);
  const std::vector<double> d3rho_dx = derivative_nonuniform(xc, d2rho_dx);

  FrozenCoefficients coeffs = FrozenCoefficients::from_state(state, cfg);

  for (int i = 0; i < n; ++i) {
    const double w = cutoffs.chi(xc[i]) * state.dx(i);
    if (w == 0.0) continue;
    const double rho = state.rho_cells[i];
    const double rt = state.cell_radius(i);
    const double r2 = rt * rt, r4 = r2 * r2, r8 = r4 * r4, r12 = r8 * r4;
    const double uc = state.cell_velocity(i);

    out.u_sq += 0.5 * w * uc * uc;
    out.rho_gamma += w * A / (gamma - 1.0) * std::pow(rho, gamma - 1.0);
    out.d2rho[0] += 0.5 * w * std::pow(rho, 4.0 * gamma - 2.0) * r8 * d2rho_dx[i] * d2rho_dx[i];
    out.d3rho += 0.5 * w * std::pow(rho, 8.0 * gamma - 2.0) * r12 * d3rho_dx[i] * d3rho_dx[i];
  }

  // First-derivative rho term through the pressure variable,
  // rho^(2g-2)|D_x rho|^2 = |D_x p|^2 / (A g)^2: p ~ (1-x) is regular at the
  // vacuum face where differences of the fractional-power rho are not. The
  // rho-weighted route survives independently in pressure_form_identity.
  {
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) p[i] = cfg.pressure(state.rho_cells[i]);
    const std::vector<double> dp = derivative_nonuniform(xc, p);
    const double ag = A * gamma;
    for (int i = 0; i < n; ++i) {
      const double w = cutoffs.chi(xc[i]) * state.dx(i);
      if (w == 0.0) continue;
      const double rt = state.cell_radius(i);
      const double r4 = rt * rt * rt * rt;
      out.drho[0] += w * r4 * dp[i] * dp[i] / (ag * ag);
    }
  }

  // velocity parts: D_t^j u (nodal) terms and the viscous H-norm form
  for (int j = 0; j <= 2; ++j) {
    const std::vector<double>* uj = nullptr;
    if (j == 0)
      uj = &state.u_nodes;
    else if (j <= td.orders_u)
      uj = &td.dtu[j - 1];
    if (!uj) continue;
    out.visc[j] = 0.5 * viscous_energy_form(coeffs, *uj, &cutoffs);
  }
  for (int j = 1; j <= 3; ++j) {
    if (j > td.orders_u) continue;
    const auto& uj = td.dtu[j - 1];
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = cutoffs.chi(state.x_nodes[i]) * state.dual_width(i);
      acc += 0.5 * w * uj[i] * uj[i];
    }
    out.ut_sq[j - 1] = acc;
  }

  // D_t^j D_x rho terms, j = 1, 2
  for (int j = 1; j <= 2; ++j) {
    if (j > td.orders_rho) continue;
    const std::vector<double> d = derivative_nonuniform(xc, td.dtrho[j - 1]);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = cutoffs.chi(xc[i]) * state.dx(i);
      if (w == 0.0) continue;
      const double rt = state.cell_radius(i);
      const double r4 = rt * rt * rt * rt;
      acc += w * std::pow(state.rho_cells[i], 2.0 * gamma - 2.0) * r4 * d[i] * d[i];
    }
    out.drho[j] = acc;
  }
  // D_t D_x^2 rho
  if (td.orders_rho >= 1) {
    const std::vector<double> d1 = derivative_nonuniform(xc, td.dtrho[0]);
    const std::vector<double> d2 = derivative_nonuniform(xc, d1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = cutoffs.chi(xc[i]) * state.dx(i);
      if (w == 0.0) continue;
      const double rt = state.cell_radius(i);
      const double r8 = std::pow(rt, 8.0);
      acc += 0.5 * w * std::pow(state.rho_cells[i], 4.0 * gamma - 2.0) * r8 * d2[i] * d2[i];
    }
    out.d2rho[1] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eulerian energy
// ---------------------------------------------------------------------------

namespace {

// central differences on the uniform view grid with parity ghosts at r=0
struct ViewDerivs {
  std::vector<double> d1, d2, d3, d4;
};

ViewDerivs view_derivatives(const std::vector<double>& f, double h, bool even) {
  const int n = static_cast<int>(f.size());
  const double sign = even ? 1.0 : -1.0;
  auto at = [&](int j) {
    if (j >= 0) return f[std::min(j, n - 1)];
    return sign * f[-j];
  };
  ViewDerivs out;
  out.d1.resize(n);
  out.d2.resize(n);
  out.d3.resize(n);
  out.d4.resize(n);
  for (int j = 0; j < n; ++j) {
    out.d1[j] = (at(j + 1) - at(j - 1)) / (2 * h);
    out.d2[j] = (at(j + 1) - 2 * at(j) + at(j - 1)) / (h * h);
    out.d3[j] = (-0.5 * at(j - 2) + at(j - 1) - at(j + 1) + 0.5 * at(j + 2)) / (h * h * h);
    out.d4[j] = (at(j - 2) - 4 * at(j - 1) + 6 * at(j) - 4 * at(j + 1) + at(j + 2)) /
                (h * h * h * h);
  }
  return out;
}

}  // namespace

double EulerianBreakdown::total() const {
  double t = 0.0;
  for (double v : rho_terms) t += v;
  for (double v : u_terms) t += v;
  return t;
}

EulerianBreakdown energy_eulerian(const EulerianView& view, const CutoffPair& cutoffs,
                                  const PolytropeConfig& cfg) {
  if (view.r.empty() || view.r.back() < cutoffs.zeta_support_end() - 1e-12)
    throw ViewTooShort("energy_eulerian: view does not cover supp(zeta)");
  const int n = static_cast<int>(view.r.size());
  const double h = view.h;
  const ViewDerivs dr = view_derivatives(view.rho, h, true);
  const ViewDerivs du = view_derivatives(view.u, h, false);

  EulerianBreakdown out;
  for (int j = 0; j < n; ++j) {
    const double r = view.r[j];
    const double z = cutoffs.zeta(r);
    if (z == 0.0) continue;
    const double rho = view.rho[j];
    if (rho <= 0.0) continue;
    const double vol = kFourPi * r * r * h * (j == 0 || j == n - 1 ? 0.5 : 1.0);
    const double wrho = cfg.A * cfg.gamma * std::pow(rho, cfg.gamma - 2.0);

    // radial identities, exact through second order for symmetric fields
    const double u = view.u[j];
    const double u_over_r = (j == 0) ? du.d1[0] : u / r;
    const double shear = (j == 0) ? 0.0 : (du.d1[j] - u_over_r) / r;
    const double rho_r_over_r = (j == 0) ? dr.d2[0] : dr.d1[j] / r;

    const double s_rho[4] = {rho * rho, dr.d1[j] * dr.d1[j],
                             dr.d2[j] * dr.d2[j] + 2.0 * rho_r_over_r * rho_r_over_r,
                             dr.d3[j] * dr.d3[j]};
    const double s_u[4] = {u * u, du.d1[j] * du.d1[j] + 2.0 * u_over_r * u_over_r,
                           du.d2[j] * du.d2[j] + 6.0 * shear * shear,
                           du.d3[j] * du.d3[j]};
    for (int m = 0; m < 4; ++m) {
      out.rho_terms[m] += 0.5 * z * wrho * s_rho[m] * vol;
      out.u_terms[m] += 0.5 * z * rho * s_u[m] * vol;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dissipation
// ---------------------------------------------------------------------------

double DissipationBreakdown::total() const {
  double t = 0.0;
  for (double v : lag) t += v;
  for (double v : ut) t += v;
  for (double v : eul) t += v;
  return t;
}

DissipationBreakdown dissipation(const LagrangianState& state, const EulerianView& view,
                                 const CutoffPair& cutoffs, const PolytropeConfig& cfg) {
  const int n = state.n_cells();
  const double mu = cfg.mu;
  DissipationBreakdown out;

  const TimeDerivatives td = time_derivatives(state, cfg);
  out.time_orders = td.orders_u;
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(state, cfg);

  for (int j = 0; j <= 3; ++j) {
    const std::vector<double>* uj = nullptr;
    if (j == 0)
      uj = &state.u_nodes;
    else if (j <= td.orders_u)
      uj = &td.dtu[j - 1];
    if (!uj) continue;
    out.lag[j] = viscous_energy_form(coeffs, *uj, &cutoffs);
    if (j >= 1) {
      double acc = 0.0;
      for (int i = 0; i <= n; ++i)
        acc += cutoffs.chi(state.x_nodes[i]) * state.dual_width(i) * (*uj)[i] * (*uj)[i];
      out.ut[j - 1] = acc;
    }
  }

  // Eulerian gradient sums: |grad u|^2 and |grad grad u|^2 exact radial
  // identities, higher orders by the d_r surrogate
  if (!view.r.empty() && view.r.back() >= cutoffs.zeta_support_end() - 1e-12) {
    const int m = static_cast<int>(view.r.size());
    const ViewDerivs du = view_derivatives(view.u, view.h, false);
    for (int j = 0; j < m; ++j) {
      const double r = view.r[j];
      const double z = cutoffs.zeta(r);
      if (z == 0.0) continue;
      const double vol = kFourPi * r * r * view.h * (j == 0 || j == m - 1 ? 0.5 : 1.0);
      const double u = view.u[j];
      const double u_over_r = (j == 0) ? du.d1[0] : u / r;
      const double shear = (j == 0) ? 0.0 : (du.d1[j] - u_over_r) / r;
      const double g[4] = {du.d1[j] * du.d1[j] + 2.0 * u_over_r * u_over_r,
                           du.d2[j] * du.d2[j] + 6.0 * shear * shear,
                           du.d3[j] * du.d3[j], du.d4[j] * du.d4[j]};
      for (int k = 0; k < 4; ++k) out.eul[k] += mu * z * g[k] * vol;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ledger, M, rt margin
// ---------------------------------------------------------------------------

double KLedger::K() const {
  double k = 0.0;
  for (double v : lagrangian) k = std::max(k, v);
  for (double v : eulerian) k = std::max(k, v);
  return k;
}

KLedger k_ledger_and_M(const LagrangianState& state, const CutoffPair& cutoffs,
                       const PolytropeConfig& cfg) {
  const int n = state.n_cells();
  const double gamma = cfg.gamma;
  KLedger led;

  const TimeDerivatives td = time_derivatives(state, cfg);
  const DivergenceField div = compute_divergence(state);
  const std::vector<double> xc = cell_centers(state);
  const std::vector<double> drho_dx = derivative_nonuniform(xc, state.rho_cells);
  const std::vector<double> dtu_dx_cells = [&] {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
      v[i] = (td.dtu[0][i + 1] - td.dtu[0][i]) / state.dx(i);
    return v;
  }();

  const double r_cap = cutoffs.zeta_support_end();

  for (int i = 0; i < n; ++i) {
    led.M = std::max(led.M, std::fabs(div.div_cells[i]));
    const double rho = state.rho_cells[i];
    const double rt = state.cell_radius(i);
    const double r2 = rt * rt;
    const double dxu = (state.u_nodes[i + 1] - state.u_nodes[i]) / state.dx(i);
    const double dr_u = rho * r2 * dxu;           // = d_r u
    const double dr_rho = rho * r2 * drho_dx[i];  // = d_r rho
    const double uc = state.cell_velocity(i);
    const double dtrho = td.dtrho[0][i];
    const double dtu_c = 0.5 * (td.dtu[0][i] + td.dtu[0][i + 1]);

    if (xc[i] >= cutoffs.x0) {
      led.lagrangian[0] = std::max(led.lagrangian[0], rho);
      led.lagrangian[1] = std::max(led.lagrangian[1], std::fabs(uc / rt));
      led.lagrangian[2] = std::max(led.lagrangian[2], std::fabs(div.div_cells[i]));
      led.lagrangian[3] = std::max(led.lagrangian[3], std::fabs(dr_u));
      led.lagrangian[4] = std::max(led.lagrangian[4], std::fabs(rho * r2 * dtu_dx_cells[i]));
      led.lagrangian[5] = std::max(led.lagrangian[5], std::fabs(dtu_c / rt));
      led.lagrangian[6] =
          std::max(led.lagrangian[6], std::pow(rho, 2.0 * gamma - 1.0) * r2 *
                                          std::fabs(drho_dx[i]) / rho);
    }
    if (rt <= r_cap) {
      led.eulerian[0] = std::max(led.eulerian[0], rho);
      led.eulerian[1] = std::max(led.eulerian[1], std::fabs(uc));
      led.eulerian[2] = std::max(led.eulerian[2], std::fabs(dr_u));
      led.eulerian[3] = std::max(led.eulerian[3], std::fabs((dtrho - uc * dr_rho) / rho));
      led.eulerian[4] = std::max(led.eulerian[4], std::fabs(dr_rho / rho));
      led.eulerian[5] = std::max(led.eulerian[5], std::fabs(dtu_c - uc * dr_u));
    }
  }
  return led;
}

RtMargin rt_inequality_check(const LagrangianState& state, const CutoffPair& cutoffs) {
  const int n = state.n_cells();
  const DivergenceField div = compute_divergence(state);
  RtMargin out;
  out.margin_cells.resize(n);
  out.min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double chi = cutoffs.chi(state.x_center(i));
    const double rho = state.rho_cells[i];
    const double rt = state.cell_radius(i);
    const double dxu = (state.u_nodes[i + 1] - state.u_nodes[i]) / state.dx(i);
    const double uc = state.cell_velocity(i);
    const double h_density =
        rho * std::pow(rt, 4.0) * dxu * dxu + 2.0 * uc * uc / (rho * rt * rt);
    const double lhs_density = div.div_cells[i] * div.div_cells[i] / rho;
    out.margin_cells[i] = 3.0 * h_density - lhs_density;
    out.min_margin = std::min(out.min_margin, out.margin_cells[i]);
    out.lhs += chi * lhs_density * state.dx(i);
    out.rhs3 += chi * 3.0 * h_density * state.dx(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Energy-inequality feasibility
// ---------------------------------------------------------------------------

EiFeasibility energy_inequality_monitor(const std::vector<double>& times,
                                        const std::vector<double>& energies,
                                        const std::vector<double>& dissipations) {
  const std::size_t n = times.size();
  if (n < 10 || energies.size() != n || dissipations.size() != n)
    throw SeriesTooShort("energy_inequality_monitor: need >= 10 aligned samples");

  std::vector<double> g(n), e(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == n ? k : k + 1;
    const double dEdt = (energies[b] - energies[a]) / (times[b] - times[a]);
    g[k] = dEdt + 0.5 * dissipations[k];
    e[k] = std::max(energies[k], 0.0);
  }

  const double allowed = 0.05;
  auto violation_fraction = [&](double c1, double c2) {
    std::size_t bad = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (g[k] > c1 * e[k] + c2 * e[k] * e[k] + 1e-14) ++bad;
    return static_cast<double>(bad) / static_cast<double>(n);
  };

  // required c2 at fixed c1, taking the violation quantile into account
  auto c2_for = [&](double c1) {
    std::vector<double> need;
    need.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      if (e[k] <= 0.0) continue;  // zero-energy samples cannot be covered by C2
      need.push_back((g[k] - c1 * e[k]) / (e[k] * e[k]));
    }
    if (need.empty()) return 0.0;
    std::sort(need.begin(), need.end());
    const std::size_t idx =
        static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1;
    const double q = idx < need.size() ? need[idx] : need.back();
    return std::max(q, 0.0);
  };

  EiFeasibility best;
  best.violation_fraction = 1.0;
  double e_scale = 0.0;
  for (double v : e) e_scale = std::max(e_scale, v);
  if (e_scale <= 0.0) e_scale = 1.0;

  std::vector<double> c1_grid = {0.0};
  for (double c1 = 1e-6; c1 <= 1e6; c1 *= 10.0) c1_grid.push_back(c1);
  double best_cost = std::numeric_limits<double>::infinity();
  for (double c1 : c1_grid) {
    const double c2 = c2_for(c1);
    const double vf = violation_fraction(c1, c2);
    const double cost = c1 * e_scale + c2 * e_scale * e_scale;
    if (vf <= allowed && cost < best_cost) {
      best_cost = cost;
      best = {true, c1, c2, vf};
    }
    if (!best.feasible && vf < best.violation_fraction) best = {false, c1, c2, vf};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Pressure-form identity
// ---------------------------------------------------------------------------

PressureFormIdentity pressure_form_identity(const LagrangianState& state,
                                            const CutoffPair& cutoffs,
                                            const PolytropeConfig& cfg,
                                            double boundary_margin) {
  const int n = state.n_cells();
  const double gamma = cfg.gamma, A = cfg.A;
  const std::vector<double> xc = cell_centers(state);
  std::vector<double> p(n);
  for (int i = 0; i < n; ++i) p[i] = cfg.pressure(state.rho_cells[i]);
  const std::vector<double> drho = derivative_nonuniform(xc, state.rho_cells);
  const std::vector<double> dp = derivative_nonuniform(xc, p);

  PressureFormIdentity out;
  for (int i = 0; i < n; ++i) {
    if (xc[i] > 1.0 - boundary_margin) continue;
    const double w = cutoffs.chi(xc[i]) * state.dx(i);
    if (w == 0.0) continue;
    const double rt = state.cell_radius(i);
    const double r4 = rt * rt * rt * rt;
    out.direct += w * std::pow(state.rho_cells[i], 2.0 * gamma - 2.0) * r4 * drho[i] * drho[i];
    out.pressure_route += w * r4 * dp[i] * dp[i] / ((A * gamma) * (A * gamma));
  }
  out.residual = std::fabs(out.direct - out.pressure_route);
  return out;
}

// ---------------------------------------------------------------------------
// Aggregate
// ---------------------------------------------------------------------------

EnergyReport evaluate_energies(const LagrangianState& state, const CutoffPair& cutoffs,
                               const PolytropeConfig& cfg, int view_samples) {
  EnergyReport rep;
  if (view_samples <= 0) view_samples = 4 * state.n_cells() + 1;
  const EulerianView view = eulerian_view(state, cutoffs.zeta_support_end(), view_samples);
  rep.lag = energy_lagrangian(state, cutoffs, cfg);
  rep.eul = energy_eulerian(view, cutoffs, cfg);
  rep.diss = dissipation(state, view, cutoffs, cfg);
  rep.ledger = k_ledger_and_M(state, cutoffs, cfg);
  rep.rt_margin_min = rt_inequality_check(state, cutoffs).min_margin;
  rep.E_L = rep.lag.total();
  rep.E_E = rep.eul.total();
  rep.E = rep.E_L + rep.E_E;
  rep.E_comparable = rep.lag.total_through(1) + rep.E_E;
  rep.D = rep.diss.total();
  const double denom = std::sqrt(rep.E) + rep.E;
  rep.weaving_ratio = denom > 0.0 ? rep.ledger.K() / denom : 0.0;
  return rep;
}

}  // namespace starsim

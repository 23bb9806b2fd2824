#include "starsim/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "starsim/errors.hpp"

namespace starsim {

namespace {
constexpr double kFourPi = 4.0 * M_PI;
}

double LagrangianState::cell_radius(int i) const {
  const double a = r_nodes[i], b = r_nodes[i + 1];
  return std::sqrt((a * a + a * b + b * b) / 3.0);
}

double LagrangianState::cell_velocity(int i) const {
  const double a = r_nodes[i], b = r_nodes[i + 1];
  const double rt = cell_radius(i);
  const double w = (rt - a) / (b - a);
  return (1.0 - w) * u_nodes[i] + w * u_nodes[i + 1];
}

double LagrangianState::dual_width(int i) const {
  const int n = n_cells();
  if (i == 0) return 0.5 * dx(0);
  if (i == n) return 0.5 * dx(n - 1);
  return 0.5 * (dx(i - 1) + dx(i));
}

void LagrangianState::push_history() {
  history.insert(history.begin(), HistoryLevel{time, u_nodes, rho_cells});
  if (history.size() > 3) history.resize(3);
}

LagrangianState from_profile(const StationaryProfile& profile, int n_cells,
                             const Grading& grading) {
  if (n_cells < 16) throw ValidationError("from_profile: n_cells must be >= 16");
  if (!profile.is_normalized())
    throw ProfileNotNormalized("from_profile: profile mass differs from 1 by more than 1e-8");

  LagrangianState st;
  st.x_nodes.resize(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) {
    const double s = static_cast<double>(i) / n_cells;
    st.x_nodes[i] = grading.type == Grading::Type::uniform
                        ? s
                        : 1.0 - std::pow(1.0 - s, grading.power);
  }
  st.x_nodes.front() = 0.0;
  st.x_nodes.back() = 1.0;

  // Cell densities are the harmonic (mass) averages taken from the profile's
  // radius map, rho_i = dx_i / int_cell dy/rho. This absorbs the integrable
  // 1/rho singularity at the vacuum face, keeps the discrete radius map exact
  // against the profile, and agrees with the midpoint sample at O(h^2) where
  // the profile is smooth.
  st.rho_cells.resize(n_cells);
  double r3_left = 0.0;
  for (int i = 0; i < n_cells; ++i) {
    const double r_right = profile.r_of_x(st.x_nodes[i + 1]);
    const double r3_right = r_right * r_right * r_right;
    st.rho_cells[i] = 3.0 * st.dx(i) / (r3_right - r3_left);
    r3_left = r3_right;
  }
  st.u_nodes.assign(n_cells + 1, 0.0);
  st.r_nodes.assign(n_cells + 1, 0.0);
  radius_update(st);
  return st;
}

void radius_update(LagrangianState& state) {
  const int n = state.n_cells();
  state.r_nodes.assign(n + 1, 0.0);
  double r3 = 0.0;
  for (int i = 0; i < n; ++i) {
    r3 += 3.0 * state.dx(i) / state.rho_cells[i];
    state.r_nodes[i + 1] = std::cbrt(r3);
  }
}

DivergenceField compute_divergence(const LagrangianState& state) {
  const int n = state.n_cells();
  DivergenceField f;
  f.div_cells.resize(n);
  for (int i = 0; i < n; ++i) {
    const double rt = state.cell_radius(i);
    const double dxu = (state.u_nodes[i + 1] - state.u_nodes[i]) / state.dx(i);
    f.div_cells[i] =
        state.rho_cells[i] * rt * rt * dxu + 2.0 * state.cell_velocity(i) / rt;
  }
  return f;
}

void density_update(LagrangianState& state, const DivergenceField& div, double dt) {
  if (!(dt > 0.0)) throw ValidationError("density_update: dt must be positive");
  const int n = state.n_cells();
  for (int i = 0; i < n; ++i) {
    // floor at the smallest normal so positivity survives IEEE underflow
    state.rho_cells[i] = std::max(state.rho_cells[i] * std::exp(-dt * div.div_cells[i]),
                                  std::numeric_limits<double>::min());
  }
}

double mass_coordinate(const LagrangianState& state, double r) {
  const auto& rn = state.r_nodes;
  if (r <= 0.0) return 0.0;
  if (r >= rn.back()) return 1.0;
  const auto it = std::upper_bound(rn.begin(), rn.end(), r);
  const int i = static_cast<int>(it - rn.begin()) - 1;
  // within a cell, x - x_i = rho_i (r^3 - r_i^3) / 3 exactly
  return state.x_nodes[i] + state.rho_cells[i] * (r * r * r - rn[i] * rn[i] * rn[i]) / 3.0;
}

double eulerian_mass(const LagrangianState& state) {
  double m = 0.0;
  for (int i = 0; i < state.n_cells(); ++i) {
    const double a = state.r_nodes[i], b = state.r_nodes[i + 1];
    m += state.rho_cells[i] * (b * b * b - a * a * a) / 3.0;
  }
  return m;
}

double EulerianView::mass_integral() const {
  std::vector<double> f(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) f[i] = rho[i] * r[i] * r[i];
  return trapezoid(r, f);
}

EulerianView eulerian_view(const LagrangianState& state, double r_max, int n_samples) {
  if (n_samples < 2) throw ValidationError("eulerian_view: need at least 2 samples");
  const double R = state.r_nodes.back();

  // interpolants: rho against cell radii with an even reflection through r=0,
  // u against node radii with an odd reflection
  const int n = state.n_cells();
  std::vector<double> rr, dd;
  rr.reserve(n + 1);
  dd.reserve(n + 1);
  rr.push_back(-state.cell_radius(0));
  dd.push_back(state.rho_cells[0]);
  for (int i = 0; i < n; ++i) {
    rr.push_back(state.cell_radius(i));
    dd.push_back(state.rho_cells[i]);
  }
  Pchip rho_interp(rr, dd);

  std::vector<double> ru, uu;
  ru.reserve(n + 2);
  uu.reserve(n + 2);
  ru.push_back(-state.r_nodes[1]);
  uu.push_back(-state.u_nodes[1]);
  for (int i = 0; i <= n; ++i) {
    ru.push_back(state.r_nodes[i]);
    uu.push_back(state.u_nodes[i]);
  }
  Pchip u_interp(ru, uu);

  EulerianView v;
  v.h = r_max / (n_samples - 1);
  v.r.resize(n_samples);
  v.rho.resize(n_samples);
  v.u.resize(n_samples);
  v.x_mass.resize(n_samples);
  for (int j = 0; j < n_samples; ++j) {
    const double r = j * v.h;
    v.r[j] = r;
    if (r > R) {  // vacuum outside the star
      v.rho[j] = 0.0;
      v.u[j] = 0.0;
      v.x_mass[j] = 1.0;
      continue;
    }
    v.rho[j] = std::max(rho_interp(std::min(r, rr.back())), 0.0);
    v.u[j] = u_interp(r);
    v.x_mass[j] = mass_coordinate(state, r);
  }
  return v;
}

MomentumIntegralResidual integrated_momentum_residual(const LagrangianState& state,
                                                      const PolytropeConfig& cfg,
                                                      double x_min) {
  if (state.history.empty())
    throw HistoryMissing("integrated_momentum_residual: needs one history level");
  const int n = state.n_cells();
  const double mu = cfg.mu;

  // D_t u at nodes by backward difference against the newest history level
  const auto& prev = state.history.front();
  const double dt = state.time - prev.t;
  std::vector<double> dtu(n + 1, 0.0);
  if (dt > 0.0)
    for (int i = 0; i <= n; ++i) dtu[i] = (state.u_nodes[i] - prev.u[i]) / dt;

  // integrand of the tail integral, at cell centers
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    const double rt = state.cell_radius(i);
    const double rho = state.rho_cells[i];
    const double uc = state.cell_velocity(i);
    const double dxu = (state.u_nodes[i + 1] - state.u_nodes[i]) / state.dx(i);
    const double dtu_c = 0.5 * (dtu[i] + dtu[i + 1]);
    const double r2 = rt * rt, r4 = r2 * r2;
    g[i] = dtu_c / r2 + kFourPi * state.x_center(i) / r4 + 2.0 * mu * uc / (rho * r4) -
           2.0 * mu * dxu / rt;
  }

  MomentumIntegralResidual out;
  out.cell_residual.assign(n, 0.0);
  // accumulate int_{x_c,i}^{1} g dy backward: half cell at i plus full cells beyond
  double tail = 0.0;
  double sum_sq = 0.0, measure = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    const double half = g[i] * 0.5 * state.dx(i);
    const double integral_from_center = tail + half;  // int_{x_c,i}^1 g dy
    tail += g[i] * state.dx(i);
    if (state.x_center(i) < x_min) continue;
    const double rt = state.cell_radius(i);
    const double dxu = (state.u_nodes[i + 1] - state.u_nodes[i]) / state.dx(i);
    const double p = cfg.pressure(state.rho_cells[i]);
    const double res = -state.rho_cells[i] * rt * rt * dxu + p / mu -
                       integral_from_center / mu;
    out.cell_residual[i] = res;
    out.sup_norm = std::max(out.sup_norm, std::fabs(res));
    sum_sq += res * res * state.dx(i);
    measure += state.dx(i);
  }
  out.l2_norm = measure > 0.0 ? std::sqrt(sum_sq) : 0.0;
  return out;
}

}  // namespace starsim

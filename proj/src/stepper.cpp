#include "starsim/stepper.hpp"

#include <algorithm>
#include <cmath>

#include "starsim/errors.hpp"

namespace starsim {

void SimulationConfig::validate() const {
  physics.validate();
  if (n_cells < 16) throw ValidationError("n_cells must be >= 16");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (t_end < 0.0) throw ValidationError("t_end must be nonnegative");
  if (!(picard_tol > 0.0)) throw ValidationError("picard_tol must be positive");
  if (picard_max < 1) throw ValidationError("picard_max must be >= 1");
  if (output_every < 1) throw ValidationError("output_every must be >= 1");
  if (init == Init::lane_emden) {
    if (physics.gamma < 1.2 - 1e-12)
      throw ValidationError(
          "gamma in (1, 6/5): no stationary solutions with finite total mass");
    if (physics.gamma > 2.0 + 1e-12)
      throw ValidationError("gamma above 2 is outside the compact equilibrium range");
  }
  if (!anchors.auto_mode) {
    if (!(0.0 < anchors.x0 && anchors.x0 < anchors.x1 && anchors.x1 < anchors.x2 &&
          anchors.x2 < 1.0))
      throw ValidationError("anchors must satisfy 0 < x0 < x1 < x2 < 1");
    if (!(anchors.d > 0.0)) throw ValidationError("anchor d must be positive");
  }
}

namespace {

// Zeroth-temporal-order u-part energy of the iterate: Lagrangian chi-weighted
// L2 and H-norm plus the Eulerian zeta-weighted twins, all evaluated as mass
// integrals (dr = dx / (rho r^2)).
double u_part_energy(const LagrangianState& ref, const std::vector<double>& rho_coeff,
                     const std::vector<double>& u, const CutoffPair& cutoffs, double mu) {
  const int n = ref.n_cells();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double xc = ref.x_center(i);
    const double chi = cutoffs.chi(xc);
    const double rt = ref.cell_radius(i);
    const double zeta = cutoffs.zeta(rt);
    const double dx = ref.dx(i);
    const double uc = 0.5 * (u[i] + u[i + 1]);
    const double dxu = (u[i + 1] - u[i]) / dx;
    const double rho = rho_coeff[i];
    const double r2 = rt * rt, r4 = r2 * r2;
    const double h_density = rho * r4 * dxu * dxu + 2.0 * uc * uc / (rho * r2);
    acc += chi * dx * (0.5 * uc * uc + 0.5 * mu * h_density);
    if (zeta > 0.0) {
      const double dr_u = rho * r2 * dxu;
      acc += zeta * dx * (0.5 * uc * uc +
                          0.5 * mu * (dr_u * dr_u + 2.0 * uc * uc / r2) / rho);
    }
  }
  return acc;
}

// rho-part energy of the iterate: spatial orders of the boundary energy plus
// the zeta-weighted interior density terms.
double rho_part_energy(const LagrangianState& ref, const std::vector<double>& rho,
                       const CutoffPair& cutoffs, const PolytropeConfig& phys) {
  const int n = ref.n_cells();
  const double gamma = phys.gamma;
  std::vector<double> xc(n);
  for (int i = 0; i < n; ++i) xc[i] = ref.x_center(i);
  const std::vector<double> d1 = derivative_nonuniform(xc, rho);
  const std::vector<double> d2 = derivative_nonuniform(xc, d1);
  const std::vector<double> d3 = derivative_nonuniform(xc, d2);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double chi = cutoffs.chi(xc[i]);
    const double rt = ref.cell_radius(i);
    const double zeta = cutoffs.zeta(rt);
    const double dx = ref.dx(i);
    const double r2 = rt * rt, r4 = r2 * r2, r8 = r4 * r4;
    acc += chi * dx *
           (std::pow(rho[i], gamma - 1.0) / (gamma - 1.0) +
            0.5 * std::pow(rho[i], 2.0 * gamma - 2.0) * r4 * d1[i] * d1[i] +
            0.5 * std::pow(rho[i], 4.0 * gamma - 2.0) * r8 * d2[i] * d2[i] +
            0.5 * std::pow(rho[i], 8.0 * gamma - 2.0) * r8 * r4 * d3[i] * d3[i]);
    if (zeta > 0.0) {
      const double dr_rho = rho[i] * r2 * d1[i];
      acc += 0.5 * zeta * dx * std::pow(rho[i], gamma - 2.0) *
             (rho[i] * rho[i] + dr_rho * dr_rho) / rho[i];
    }
  }
  return acc;
}

}  // namespace

StepReport picard_step(LagrangianState& state, const SimulationConfig& cfg,
                       const CutoffPair& cutoffs) {
  if (!(cfg.dt > 0.0)) throw ValidationError("picard_step: dt must be positive");
  const double dt = cfg.dt;
  const int n = state.n_cells();

  StepReport rep;
  rep.dt = dt;

  // iterate 0 = committed state
  std::vector<double> rho_k = state.rho_cells;
  std::vector<double> r_k = state.r_nodes;
  std::vector<double> u_k = state.u_nodes;
  rep.F_iterates.push_back(
      u_part_energy(state, rho_k, u_k, cutoffs, cfg.physics.mu));
  rep.H_iterates.push_back(rho_part_energy(state, rho_k, cutoffs, cfg.physics));

  double prev_change = -1.0;
  int rising = 0;
  for (int k = 0; k < cfg.picard_max; ++k) {
    // frozen-coefficient solve from the committed velocity
    LagrangianState coeff_state = state;
    coeff_state.rho_cells = rho_k;
    coeff_state.r_nodes = r_k;
    FrozenCoefficients coeffs = FrozenCoefficients::from_state(
        coeff_state, cfg.physics, cfg.pressure_on, cfg.gravity_on);
    coeffs.ballistic_face = !cfg.pressure_on;
    auto [u_next, solve_rep] = solve(coeffs, state.u_nodes, dt);
    rep.solve = solve_rep;

    // exponential density update from the committed density, divergence taken
    // with the frozen coefficients and the fresh velocity
    coeff_state.u_nodes = u_next;
    const DivergenceField div = compute_divergence(coeff_state);
    std::vector<double> rho_next(n);
    double m_it = 0.0;
    for (int i = 0; i < n; ++i) {
      rho_next[i] = state.rho_cells[i] * std::exp(-dt * div.div_cells[i]);
      m_it = std::max(m_it, std::fabs(div.div_cells[i]));
    }
    rep.M_iterates.push_back(m_it);
    if (!std::isfinite(m_it)) throw NonFinite("picard_step: non-finite divergence");

    LagrangianState next_state = state;
    next_state.rho_cells = rho_next;
    radius_update(next_state);

    double du = 0.0, drho = 0.0;
    for (int i = 0; i <= n; ++i) du = std::max(du, std::fabs(u_next[i] - u_k[i]));
    for (int i = 0; i < n; ++i)
      drho = std::max(drho, std::fabs(rho_next[i] - rho_k[i]) / rho_k[i]);
    const double change = du + drho;

    rho_k = std::move(rho_next);
    r_k = next_state.r_nodes;
    u_k = std::move(u_next);
    rep.picard_iters = k + 1;
    rep.F_iterates.push_back(u_part_energy(state, coeffs.rho_cells, u_k, cutoffs, cfg.physics.mu));
    rep.H_iterates.push_back(rho_part_energy(state, rho_k, cutoffs, cfg.physics));

    if (prev_change > 0.0) {
      const double ratio = change / prev_change;
      rep.contraction_ratios.push_back(ratio);
      rising = ratio > 1.0 ? rising + 1 : 0;
      if (rising >= 3)
        throw PicardDiverged("picard_step: contraction ratio above 1 for 3 iterates");
    }
    prev_change = change;
    rep.last_change = change;

    if (change <= cfg.picard_tol) {
      state.push_history();
      state.rho_cells = std::move(rho_k);
      state.r_nodes = std::move(r_k);
      state.u_nodes = std::move(u_k);
      state.time += dt;
      rep.accepted = true;
      return rep;
    }
  }
  throw PicardDiverged("picard_step: no fixed point within picard_max iterates");
}

double dt_controller(double dt, const SimulationConfig& cfg, double M_current,
                     bool last_step_diverged) {
  double next = last_step_diverged ? 0.5 * dt : dt * cfg.dt_growth;
  next = std::min(next, cfg.dt_max);
  next = std::min(next, cfg.dt_safety / (1.0 + M_current));
  if (next < cfg.dt_min)
    throw DtUnderflow("dt_controller: dt fell below dt_min");
  return next;
}

LagrangianState initial_state(const SimulationConfig& cfg) {
  StationaryProfile profile = normalize_total_mass(
      lane_emden_solve(cfg.physics, cfg.lane_emden_xi_max, cfg.lane_emden_step));
  LagrangianState st = from_profile(profile, cfg.n_cells, cfg.grading);
  if (cfg.init == SimulationConfig::Init::free_expansion) {
    for (int i = 0; i <= cfg.n_cells; ++i) st.u_nodes[i] = cfg.expansion_rate * st.r_nodes[i];
  }
  if (cfg.perturb_velocity != 0.0) {
    for (int i = 0; i <= cfg.n_cells; ++i) st.u_nodes[i] += cfg.perturb_velocity * st.r_nodes[i];
  }
  st.u_nodes[0] = 0.0;
  return st;
}

RunResult run(const SimulationConfig& cfg) {
  cfg.validate();
  RunResult out;
  LagrangianState state = initial_state(cfg);
  out.cutoffs = build_cutoffs(state, cfg.anchors);

  const int view_n = cfg.view_samples > 0 ? cfg.view_samples : 4 * cfg.n_cells + 1;

  auto record = [&](const StepReport& step) {
    SeriesRow row;
    row.t = state.time;
    row.energy = evaluate_energies(state, out.cutoffs, cfg.physics, view_n);
    row.step = step;
    row.mass_residual = std::fabs(eulerian_mass(state) - 1.0);
    row.bc_residual = step.solve.bc_row_residual;
    row.R = state.r_nodes.back();
    out.series.push_back(std::move(row));
  };
  auto snapshot = [&] {
    out.snapshots.push_back(state);
    out.snapshot_times.push_back(state.time);
  };

  record(StepReport{});
  snapshot();
  const double E0 = out.series.front().energy.E_comparable;

  double dt = cfg.dt;
  int step_index = 0;
  while (state.time < cfg.t_end - 1e-15) {
    SimulationConfig step_cfg = cfg;
    step_cfg.dt = std::min(dt, cfg.t_end - state.time);
    bool diverged = false;
    StepReport rep;
    try {
      rep = picard_step(state, step_cfg, out.cutoffs);
    } catch (const PicardDiverged&) {
      diverged = true;
    } catch (const NonFinite&) {
      out.abort_reason = "non_finite";
      break;
    }
    if (diverged) {
      if (!cfg.dt_adaptive) {
        out.abort_reason = "picard_diverged";
        break;
      }
      try {
        dt = dt_controller(dt, cfg, 0.0, true);
      } catch (const DtUnderflow&) {
        out.abort_reason = "dt_underflow";
        break;
      }
      continue;
    }
    ++step_index;
    out.steps_taken = step_index;
    for (double u : state.u_nodes) out.max_u_inf = std::max(out.max_u_inf, std::fabs(u));

    const double M_now =
        rep.M_iterates.empty() ? 0.0 : rep.M_iterates.back();
    if (M_now > cfg.m_cap) {
      record(rep);
      out.abort_reason = "M_exceeded";
      break;
    }

    const bool at_end = state.time >= cfg.t_end - 1e-15;
    if (step_index % cfg.output_every == 0 || at_end) {
      record(rep);
      if (!std::isfinite(out.series.back().energy.E)) {
        out.abort_reason = "non_finite";
        break;
      }
      if (out.series.back().energy.E_comparable > cfg.energy_blowup * E0) {
        out.abort_reason = "energy_blowup";
        break;
      }
    }
    if (cfg.snapshot_every > 0 && step_index % cfg.snapshot_every == 0 && !at_end)
      snapshot();

    if (cfg.dt_adaptive) {
      try {
        dt = dt_controller(dt, cfg, M_now, false);
      } catch (const DtUnderflow&) {
        out.abort_reason = "dt_underflow";
        break;
      }
    }
  }
  snapshot();
  out.final_state = state;
  return out;
}

}  // namespace starsim

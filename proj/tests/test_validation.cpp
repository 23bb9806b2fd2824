#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "starsim/errors.hpp"
#include "starsim/validation.hpp"

using namespace starsim;

namespace {

SimulationConfig free_expansion_config(int n) {
  SimulationConfig cfg;
  cfg.physics = {5.0 / 3.0, 1.0, 1.0};
  cfg.n_cells = n;
  cfg.init = SimulationConfig::Init::free_expansion;
  cfg.pressure_on = false;
  cfg.gravity_on = false;
  cfg.expansion_rate = 0.1;
  cfg.dt = 1e-3;
  cfg.t_end = 0.1;
  cfg.output_every = 100;
  return cfg;
}

}  // namespace

TEST_CASE("manufactured problems") {
  SUBCASE("unknown choice is rejected") {
    CHECK_THROWS_AS(mms_problem("bogus", 1.0), UnknownChoice);
  }
  SUBCASE("zero solution gives zero source and zero error") {
    MmsProblem p = mms_problem("zero", 1.0);
    CHECK(p.source(0.3, 0.5) == 0.0);
    CHECK(mms_error(p, 64, 1e-3, 0.01, 1.0) == 0.0);
  }
  SUBCASE("smooth problem converges at second order in space") {
    MmsProblem p = mms_problem("smooth", 1.0);
    double err[3];
    int k = 0;
    for (int n : {50, 100, 200}) {
      const double h = 1.0 / n;
      err[k++] = mms_error(p, n, 0.02 * h * h, 5e-3, 1.0);
    }
    const double order1 = std::log2(err[0] / err[1]);
    const double order2 = std::log2(err[1] / err[2]);
    CHECK(order1 > 1.9);
    CHECK(order2 > 1.9);
  }
  SUBCASE("degenerate problem converges at first order or better") {
    MmsProblem p = mms_problem("degenerate", 1.0);
    double err[3];
    int k = 0;
    for (int n : {50, 100, 200}) {
      const double h = 1.0 / n;
      err[k++] = mms_error(p, n, 0.02 * h * h, 5e-3, 1.0);
    }
    CHECK(std::log2(err[0] / err[1]) > 1.0);
    CHECK(std::log2(err[1] / err[2]) > 1.0);
  }
  SUBCASE("temporal order is first order") {
    // Richardson differences between solutions cancel the fixed spatial error
    MmsProblem p = mms_problem("smooth", 1.0);
    const auto u1 = mms_solution(p, 400, 4e-3, 0.04, 1.0);
    const auto u2 = mms_solution(p, 400, 2e-3, 0.04, 1.0);
    const auto u3 = mms_solution(p, 400, 1e-3, 0.04, 1.0);
    double d12 = 0.0, d23 = 0.0;
    for (int i = 0; i <= 400; ++i) {
      d12 = std::max(d12, std::fabs(u1[i] - u2[i]));
      d23 = std::max(d23, std::fabs(u2[i] - u3[i]));
    }
    CHECK(std::log2(d12 / d23) > 0.9);
    CHECK(std::log2(d12 / d23) < 1.2);
  }
}

TEST_CASE("bc residual") {
  PolytropeConfig cfg{5.0 / 3.0, 1.0, 1.0};
  StationaryProfile profile = normalize_total_mass(lane_emden_solve(cfg, 0.0, 1e-4));
  LagrangianState st = from_profile(profile, 200);

  SUBCASE("vacuum state with zero velocity has zero residual") {
    BcResidual r = bc_residual(st, cfg);
    CHECK(r.face_density == 0.0);
    CHECK(r.absolute == 0.0);
  }
  SUBCASE("corrupted last cell flags a nonzero residual") {
    LagrangianState bad = st;
    bad.rho_cells[199] = 10.0 * bad.rho_cells[198];  // no longer vacuum-like
    BcResidual r = bc_residual(bad, cfg);
    CHECK(r.face_density > 0.0);
    CHECK(r.pressure_relative > 1.0);
  }
}

TEST_CASE("vacuum exponent") {
  SUBCASE("exact power law is recovered") {
    LagrangianState st;
    const int n = 400;
    st.x_nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) st.x_nodes[i] = static_cast<double>(i) / n;
    st.rho_cells.resize(n);
    for (int i = 0; i < n; ++i) st.rho_cells[i] = std::pow(1.0 - st.x_center(i), 0.6);
    st.u_nodes.assign(n + 1, 0.0);
    radius_update(st);
    CHECK(std::fabs(vacuum_exponent(st) - 0.6) < 0.01);
  }
  SUBCASE("stationary gamma=5/3 star tracks 1/gamma") {
    PolytropeConfig cfg{5.0 / 3.0, 1.0, 1.0};
    StationaryProfile profile = normalize_total_mass(lane_emden_solve(cfg, 0.0, 1e-4));
    LagrangianState st = from_profile(profile, 400);
    CHECK(std::fabs(vacuum_exponent(st) - 0.6) < 0.06);
  }
  SUBCASE("free expansion keeps the exponent constant") {
    RunResult rr = run(free_expansion_config(200));
    std::vector<double> exps = vacuum_exponent_track(rr.snapshots);
    REQUIRE(exps.size() >= 2);
    for (double e : exps) CHECK(std::fabs(e - exps.front()) < 1e-6);
  }
}

TEST_CASE("convergence driver") {
  SUBCASE("free-expansion study reports deterministic errors") {
    SimulationConfig cfg = free_expansion_config(64);
    cfg.t_end = 0.05;
    ConvergenceStudy a = convergence_driver(cfg, {64, 128},
                                            ConvergenceOracle::free_expansion_closed_form);
    ConvergenceStudy b = convergence_driver(cfg, {64, 128},
                                            ConvergenceOracle::free_expansion_closed_form);
    CHECK(a.errors == b.errors);  // determinism
    for (double e : a.errors) CHECK(e > 0.0);
  }
  SUBCASE("resolutions must increase") {
    SimulationConfig cfg = free_expansion_config(64);
    CHECK_THROWS_AS(convergence_driver(cfg, {64, 64},
                                       ConvergenceOracle::free_expansion_closed_form),
                    ValidationError);
  }
  SUBCASE("stationary velocity study decays under refinement") {
    SimulationConfig cfg;
    cfg.physics = {5.0 / 3.0, 1.0, 1.0};
    cfg.n_cells = 100;
    cfg.grading = {Grading::Type::boundary_graded, 2.0};
    cfg.dt = 1e-4;
    cfg.t_end = 5e-3;
    cfg.output_every = 50;
    ConvergenceStudy s =
        convergence_driver(cfg, {100, 200}, ConvergenceOracle::stationary_velocity);
    CHECK(s.errors[1] < s.errors[0]);
  }
}

TEST_CASE("temporal order of the free expansion") {
  SimulationConfig cfg = free_expansion_config(128);
  cfg.t_end = 0.1;
  const double order = temporal_order_free_expansion(cfg, {4e-3, 2e-3, 1e-3});
  CHECK(order > 0.9);
  CHECK(order < 1.5);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "starsim/energy.hpp"
#include "starsim/errors.hpp"
#include "starsim/momentum.hpp"

using namespace starsim;

namespace {

PolytropeConfig physics() { return {5.0 / 3.0, 1.0, 1.0}; }

LagrangianState star_state(int n) {
  StationaryProfile profile = normalize_total_mass(lane_emden_solve(physics(), 0.0, 1e-4));
  return from_profile(profile, n);
}

std::vector<double> smooth_random_u(const LagrangianState& st, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  const int n = st.n_cells();
  std::vector<double> u(n + 1, 0.0);
  for (int k = 1; k <= 4; ++k) {
    const double a = amp(rng);
    for (int i = 1; i <= n; ++i) u[i] += a * std::sin(k * M_PI * st.x_nodes[i] * 0.997);
  }
  return u;
}

}  // namespace

TEST_CASE("mu = 0 with forcing off is the identity map") {
  LagrangianState st = star_state(64);
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics(), false, false);
  coeffs.mu = 0.0;
  std::vector<double> u = smooth_random_u(st, 3);
  auto [u_next, rep] = solve(coeffs, u, 0.1);
  for (int i = 1; i <= 64; ++i) CHECK(u_next[i] == doctest::Approx(u[i]).epsilon(1e-14));
  CHECK(u_next[0] == 0.0);
}

TEST_CASE("elimination pivots stay positive for a range of dt") {
  LagrangianState st = star_state(128);
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics());
  for (double dt : {1e-6, 1e-3, 1.0, 1e3}) {
    auto [u, rep] = solve(coeffs, std::vector<double>(129, 0.0), dt);
    CHECK(rep.spd_ok);
  }
}

TEST_CASE("interior stencil rows sum to w/dt without reaction") {
  LagrangianState st = star_state(64);
  const double dt = 3e-3;
  TridiagonalOperator op = assemble(FrozenCoefficients::from_state(st, physics()), dt);
  // rows with both neighbors coupled; row 1 has its Dirichlet leg removed
  for (int i = 2; i < 64; ++i) {
    const double row_sum = op.sub[i] + op.diag[i] - op.reaction_diag[i] + op.super[i];
    CHECK(row_sum == doctest::Approx(op.dual_width[i] / dt).epsilon(1e-12));
  }
}

TEST_CASE("zero data stays zero without forcing") {
  LagrangianState st = star_state(64);
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics(), false, false);
  auto [u, rep] = solve(coeffs, std::vector<double>(65, 0.0), 1e-2);
  for (double v : u) CHECK(v == 0.0);
}

TEST_CASE("linear solve residual meets the tolerance") {
  LagrangianState st = star_state(256);
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics());
  auto [u, rep] = solve(coeffs, smooth_random_u(st, 11), 1e-4);
  CHECK(rep.residual_norm <= 1e-12);
  CHECK(rep.bc_row_residual <= 1e-12 * std::max(1.0, rep.bc_scale));
}

TEST_CASE("nonpositive density coefficients are rejected") {
  LagrangianState st = star_state(64);
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics());
  coeffs.rho_cells[10] = 0.0;
  CHECK_THROWS_AS(solve(coeffs, std::vector<double>(65, 0.0), 1e-3), SingularSystem);
}

TEST_CASE("non-finite input data is reported") {
  LagrangianState st = star_state(64);
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics());
  std::vector<double> u(65, 0.0);
  u[30] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve(coeffs, u, 1e-3), NonFinite);
}

TEST_CASE("one hydrostatic step leaves u at the truncation level") {
  // boundary-graded mesh: the flat mesh carries a fractional-order vacuum
  // face term that caps the decay rate near 2.4 per halving
  auto u_inf_after_one_step = [](int n) {
    StationaryProfile profile =
        normalize_total_mass(lane_emden_solve(physics(), 0.0, 1e-4));
    LagrangianState st =
        from_profile(profile, n, {Grading::Type::boundary_graded, 2.0});
    FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics());
    auto [u, rep] = solve(coeffs, std::vector<double>(n + 1, 0.0), 1e-4);
    double m = 0.0;
    for (double v : u) m = std::max(m, std::fabs(v));
    return m;
  };
  const double e100 = u_inf_after_one_step(100);
  const double e400 = u_inf_after_one_step(400);
  CHECK(e400 < e100);
  // the single-step impulse is dominated by the vacuum-zone cells and decays
  // at a fractional order; the run-level balance check lives in the
  // acceptance suite
  CHECK(e100 / e400 > 5.0);
}

TEST_CASE("L2 norm is non-increasing for zero forcing at any dt") {
  LagrangianState st = star_state(100);
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics(), false, false);
  for (double dt : {1e-3, 1e-1, 10.0}) {
    std::vector<double> u = smooth_random_u(st, 17);
    auto norm = [&](const std::vector<double>& v) {
      double s = 0.0;
      for (int i = 0; i <= 100; ++i) s += st.dual_width(i) * v[i] * v[i];
      return std::sqrt(s);
    };
    for (int k = 0; k < 50; ++k) {
      const double before = norm(u);
      auto [u_next, rep] = solve(coeffs, u, dt);
      u = std::move(u_next);
      CHECK(norm(u) <= before * (1.0 + 1e-14));
    }
  }
}

TEST_CASE("discrete energy identity") {
  LagrangianState st = star_state(128);

  SUBCASE("imbalance is the negative squared increment") {
    FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics(), false, false);
    std::vector<double> u = smooth_random_u(st, 23);
    for (double dt : {1e-4, 1e-3, 1e-2}) {
      auto [u_next, rep] = solve(coeffs, u, dt);
      const double imbalance = discrete_energy_identity(u, u_next, coeffs, dt);
      CHECK(imbalance <= 1e-13);
      double half_sq = 0.0;
      for (int i = 0; i <= 128; ++i) {
        const double d = u_next[i] - u[i];
        half_sq += 0.5 * st.dual_width(i) * d * d;
      }
      CHECK(imbalance == doctest::Approx(-half_sq).epsilon(1e-6).scale(1.0));
    }
  }
  SUBCASE("imbalance shrinks quadratically with dt") {
    FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics(), false, false);
    std::vector<double> u = smooth_random_u(st, 29);
    auto imb = [&](double dt) {
      auto [u_next, rep] = solve(coeffs, u, dt);
      return std::fabs(discrete_energy_identity(u, u_next, coeffs, dt));
    };
    CHECK(imb(1e-3) / imb(1e-4) > 20.0);
  }
  SUBCASE("manufactured equilibrium forcing gives zero imbalance") {
    // forcing chosen so u_prev is a fixed point of the implicit step
    FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics(), false, false);
    std::vector<double> u = smooth_random_u(st, 31);
    const double dt = 1e-2;
    TridiagonalOperator op = assemble(coeffs, dt);
    std::vector<double> au = op.apply(u);
    coeffs.extra_source.assign(129, 0.0);
    for (int i = 1; i <= 128; ++i)
      coeffs.extra_source[i] = (au[i] - op.dual_width[i] * u[i] / dt) / op.dual_width[i];
    auto [u_next, rep] = solve(coeffs, u, dt);
    for (int i = 0; i <= 128; ++i)
      CHECK(u_next[i] == doctest::Approx(u[i]).epsilon(1e-9).scale(1.0));
    const double imbalance = discrete_energy_identity(u, u_next, coeffs, dt);
    CHECK(std::fabs(imbalance) <= 1e-10);
  }
}

TEST_CASE("viscous energy form matches the operator quadratic form") {
  LagrangianState st = star_state(64);
  FrozenCoefficients coeffs = FrozenCoefficients::from_state(st, physics());
  std::vector<double> u = smooth_random_u(st, 37);
  const double dt = 1.0;
  TridiagonalOperator op = assemble(coeffs, dt);
  std::vector<double> au = op.apply(u);
  double quad = 0.0;
  for (int i = 1; i <= 64; ++i) quad += u[i] * (au[i] - op.dual_width[i] * u[i] / dt);
  CHECK(quad == doctest::Approx(viscous_energy_form(coeffs, u, nullptr)).epsilon(1e-12));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "starsim/errors.hpp"
#include "starsim/polytrope.hpp"

using namespace starsim;

TEST_CASE("n=1 solution matches sin(xi)/xi") {
  PolytropeConfig cfg{2.0, 1.0, 1.0};
  StationaryProfile p = lane_emden_solve(cfg, 0.0, 1e-3);
  REQUIRE(p.support_class == SupportClass::compact);
  CHECK(std::fabs(p.xi1 - M_PI) < 1e-6);
  double sup = 0.0;
  for (std::size_t i = 1; i < p.xi.size(); ++i)
    sup = std::max(sup, std::fabs(p.theta[i] - std::sin(p.xi[i]) / p.xi[i]));
  CHECK(sup <= 1e-8);
}

TEST_CASE("n=5 solution matches (1 + xi^2/3)^(-1/2) with infinite support") {
  PolytropeConfig cfg{1.2, 1.0, 1.0};
  StationaryProfile p = lane_emden_solve(cfg, 20.0, 1e-3);
  CHECK(p.support_class == SupportClass::infinite);
  double sup = 0.0;
  for (std::size_t i = 0; i < p.xi.size(); ++i)
    sup = std::max(sup, std::fabs(p.theta[i] - 1.0 / std::sqrt(1.0 + p.xi[i] * p.xi[i] / 3.0)));
  CHECK(sup <= 1e-8);
}

TEST_CASE("gamma=5/3 first zero against the high-resolution oracle") {
  PolytropeConfig cfg{5.0 / 3.0, 1.0, 1.0};
  StationaryProfile p = lane_emden_solve(cfg, 0.0, 1e-4);
  CHECK(std::fabs(p.xi1 - oracles::kXi1_n15) < 1e-6);
}

TEST_CASE("no finite-mass equilibria below gamma = 6/5") {
  PolytropeConfig cfg{1.1, 1.0, 1.0};
  CHECK_THROWS_AS(lane_emden_solve(cfg), NoFiniteMassSolution);
}

TEST_CASE("integration cap before the first zero is reported") {
  PolytropeConfig cfg{5.0 / 3.0, 1.0, 1.0};
  CHECK_THROWS_AS(lane_emden_solve(cfg, 1.0, 1e-3), IntegrationFailure);
}

TEST_CASE("mass normalization") {
  PolytropeConfig cfg{5.0 / 3.0, 1.0, 1.0};
  StationaryProfile p = normalize_total_mass(lane_emden_solve(cfg, 0.0, 1e-4));

  SUBCASE("residual forced to rounding") {
    CHECK(std::fabs(p.total_mass() - 1.0) <= 1e-10);
  }
  SUBCASE("idempotent") {
    StationaryProfile q = normalize_total_mass(p);
    CHECK(std::fabs(q.central_density - p.central_density) <= 1e-12 * p.central_density);
    CHECK(std::fabs(q.radius - p.radius) <= 1e-12 * p.radius);
  }
  SUBCASE("central density matches the bisection oracle") {
    CHECK(std::fabs(p.central_density - oracles::kRhoC_g53_A1) <=
          1e-6 * oracles::kRhoC_g53_A1);
    CHECK(std::fabs(p.radius - oracles::kRadius_g53_A1) <= 1e-6 * oracles::kRadius_g53_A1);
  }
  SUBCASE("not compact is rejected") {
    PolytropeConfig inf_cfg{1.2, 1.0, 1.0};
    StationaryProfile q = lane_emden_solve(inf_cfg, 20.0, 1e-3);
    CHECK_THROWS_AS(normalize_total_mass(q), NotCompact);
  }
}

TEST_CASE("exponent fit recovers an exact power law") {
  // synthetic profile rho = (R - r)^1.5 with its own mass table
  StationaryProfile p;
  p.gamma = 5.0 / 3.0;
  p.A = 1.0;
  p.support_class = SupportClass::compact;
  p.radius = 1.0;
  const int n = 4000;
  double mass = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = static_cast<double>(i) / n;
    const double rho = std::pow(1.0 - r, 1.5);
    if (i > 0) {
      const double rp = static_cast<double>(i - 1) / n;
      const double rhop = std::pow(1.0 - rp, 1.5);
      mass += 0.5 * (rho * r * r + rhop * rp * rp) / n;
    }
    p.r_table.push_back(r);
    p.rho_table.push_back(rho);
    p.x_mass_table.push_back(mass);
  }
  ExponentFit fit = stationary_exponents(p, 0.05);
  CHECK(std::fabs(fit.eulerian_exp - 1.5) < 0.01);
}

TEST_CASE("gamma=5/3 decay exponents near the surface") {
  PolytropeConfig cfg{5.0 / 3.0, 1.0, 1.0};
  StationaryProfile p = normalize_total_mass(lane_emden_solve(cfg, 0.0, 1e-4));
  ExponentFit fit = stationary_exponents(p, 0.02);
  CHECK(std::fabs(fit.eulerian_exp - 1.5) < 0.075);   // 1/(gamma-1), 5%
  CHECK(std::fabs(fit.lagrangian_exp - 0.6) < 0.03);  // 1/gamma, 5%
}

TEST_CASE("window with too few samples is rejected") {
  PolytropeConfig cfg{5.0 / 3.0, 1.0, 1.0};
  StationaryProfile p = normalize_total_mass(lane_emden_solve(cfg, 0.0, 1e-2));
  // shrink the table to starve the window
  CHECK_THROWS_AS(stationary_exponents(p, 1e-4), InsufficientPoints);
}

TEST_CASE("first zero converges at fourth order under step refinement") {
  PolytropeConfig cfg{5.0 / 3.0, 1.0, 1.0};
  auto xi1_at = [&](double step) { return lane_emden_solve(cfg, 0.0, step).xi1; };
  const double ref = xi1_at(5e-4);
  const double e1 = std::fabs(xi1_at(8e-3) - ref);
  const double e2 = std::fabs(xi1_at(4e-3) - ref);
  CHECK(e1 / e2 > 10.0);  // ~16 for clean fourth order
}

TEST_CASE("first zero has a negative slope for compact gammas") {
  for (double gamma : {1.4, 5.0 / 3.0, 1.9}) {
    PolytropeConfig cfg{gamma, 1.0, 1.0};
    StationaryProfile p = lane_emden_solve(cfg, 0.0, 1e-3);
    CHECK(p.xi1 > 0.0);
    CHECK(p.dtheta_at_xi1 < 0.0);
  }
}

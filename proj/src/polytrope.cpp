#include "starsim/polytrope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "starsim/errors.hpp"

namespace starsim {

namespace {
constexpr double kFourPi = 4.0 * M_PI;
}

double PolytropeConfig::pressure(double rho) const { return A * std::pow(rho, gamma); }

void PolytropeConfig::validate() const {
  if (!(gamma > 1.0)) throw ValidationError("gamma must exceed 1");
  if (!(A > 0.0)) throw ValidationError("entropy constant A must be positive");
  if (!(mu > 0.0)) throw ValidationError("viscosity mu must be positive");
}

double StationaryProfile::total_mass() const {
  return x_mass_table.empty() ? 0.0 : x_mass_table.back();
}

bool StationaryProfile::is_normalized(double tol) const {
  return support_class == SupportClass::compact && std::fabs(total_mass() - 1.0) <= tol;
}

namespace {

struct OdeSample {
  double xi, theta, dtheta;
};

// theta'' = -theta^n - 2 theta'/xi; the enclosed mass obeys m = -xi^2 theta'.
class LaneEmdenIntegrator {
 public:
  LaneEmdenIntegrator(double n, double step) : n_(n), h_(step) {}

  // series start removes the 0/0 at xi = 0
  OdeSample series(double xi) const {
    const double x2 = xi * xi;
    return {xi, 1.0 - x2 / 6.0 + n_ * x2 * x2 / 120.0,
            -xi / 3.0 + n_ * xi * x2 / 30.0};
  }

  OdeSample step(const OdeSample& s) const { return rk4(s, h_); }

  OdeSample rk4(const OdeSample& s, double h) const {
    auto f = [this](double xi, double th, double dth, double& k_th, double& k_dth) {
      k_th = dth;
      const double src = th > 0.0 ? std::pow(th, n_) : 0.0;
      k_dth = -src - 2.0 * dth / xi;
    };
    double k1t, k1d, k2t, k2d, k3t, k3d, k4t, k4d;
    f(s.xi, s.theta, s.dtheta, k1t, k1d);
    f(s.xi + h / 2, s.theta + h / 2 * k1t, s.dtheta + h / 2 * k1d, k2t, k2d);
    f(s.xi + h / 2, s.theta + h / 2 * k2t, s.dtheta + h / 2 * k2d, k3t, k3d);
    f(s.xi + h, s.theta + h * k3t, s.dtheta + h * k3d, k4t, k4d);
    return {s.xi + h, s.theta + h / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t),
            s.dtheta + h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)};
  }

  // bisection from the last positive sample to |hi - lo| <= 1e-12
  OdeSample locate_zero(const OdeSample& below) const {
    double lo = below.xi;
    OdeSample at_lo = below;
    double hi = lo + h_;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      OdeSample s = at_lo;
      const double hh = (mid - s.xi) / 8.0;
      for (int k = 0; k < 8; ++k) s = rk4(s, hh);
      if (s.theta > 0.0) {
        lo = mid;
        at_lo = s;
      } else {
        hi = mid;
      }
    }
    return {0.5 * (lo + hi), 0.0, at_lo.dtheta};
  }

 private:
  double n_, h_;
};

// Physical tables from (xi, theta, dtheta) at the profile's current
// central density, plus the interpolants used by rho_of_x / r_of_x.
void attach_physical_tables(StationaryProfile& p) {
  const double n = 1.0 / (p.gamma - 1.0);
  p.alpha = std::sqrt((n + 1.0) * p.A * std::pow(p.central_density, p.gamma - 2.0) / kFourPi);
  const std::size_t m = p.xi.size();
  p.r_table.assign(m, 0.0);
  p.rho_table.assign(m, 0.0);
  p.x_mass_table.assign(m, 0.0);
  const double a3 = p.alpha * p.alpha * p.alpha;
  for (std::size_t i = 0; i < m; ++i) {
    p.r_table[i] = p.alpha * p.xi[i];
    p.rho_table[i] = p.central_density * std::pow(std::max(p.theta[i], 0.0), n);
    p.x_mass_table[i] =
        p.central_density * a3 * std::max(-p.xi[i] * p.xi[i] * p.dtheta[i], 0.0) + 0.0;
  }
  if (p.support_class == SupportClass::compact) p.radius = p.alpha * p.xi1;

  std::vector<double> xs, qs, rs;
  xs.reserve(m);
  qs.reserve(m);
  rs.reserve(m);
  double last_x = -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (p.x_mass_table[i] <= last_x) continue;  // drop non-increasing abscissae
    last_x = p.x_mass_table[i];
    xs.push_back(p.x_mass_table[i]);
    qs.push_back(std::pow(std::max(p.theta[i], 0.0), n + 1.0));
    rs.push_back(p.r_table[i]);
  }
  p.q_of_x = Pchip(xs, qs);
  p.radius_of_x = Pchip(xs, rs);
}

}  // namespace

StationaryProfile lane_emden_solve(const PolytropeConfig& cfg, double xi_max, double step) {
  cfg.validate();
  if (!(step > 0.0)) throw ValidationError("lane_emden_solve: step must be positive");
  if (xi_max < 0.0) throw ValidationError("lane_emden_solve: xi_max must be nonnegative");
  const double gamma = cfg.gamma;
  if (gamma < 1.2 - 1e-12)
    throw NoFiniteMassSolution(
        "no stationary solutions with finite total mass for gamma in (1, 6/5)");

  const bool infinite = std::fabs(gamma - 1.2) <= 1e-12;
  const double n = 1.0 / (gamma - 1.0);
  if (xi_max == 0.0) xi_max = infinite ? 20.0 : 50.0;

  StationaryProfile p;
  p.gamma = gamma;
  p.A = cfg.A;
  p.central_density = 1.0;
  p.support_class = infinite ? SupportClass::infinite : SupportClass::compact;

  LaneEmdenIntegrator integ(n, step);
  p.xi.reserve(static_cast<std::size_t>(xi_max / step) + 16);
  p.theta.reserve(p.xi.capacity());
  p.dtheta.reserve(p.xi.capacity());
  for (int i = 0; i <= 10; ++i) {
    OdeSample q = integ.series(i * step);
    p.xi.push_back(q.xi);
    p.theta.push_back(i == 0 ? 1.0 : q.theta);
    p.dtheta.push_back(i == 0 ? 0.0 : q.dtheta);
  }

  OdeSample s = {p.xi.back(), p.theta.back(), p.dtheta.back()};
  bool found_zero = false;
  while (s.xi < xi_max - 0.5 * step) {
    OdeSample next = integ.step(s);
    if (!std::isfinite(next.theta) || !std::isfinite(next.dtheta))
      throw IntegrationFailure("lane_emden_solve: non-finite state at xi=" +
                               std::to_string(s.xi));
    if (next.theta <= 0.0) {
      OdeSample zero = integ.locate_zero(s);
      p.xi1 = zero.xi;
      p.dtheta_at_xi1 = zero.dtheta;
      p.xi.push_back(zero.xi);
      p.theta.push_back(0.0);
      p.dtheta.push_back(zero.dtheta);
      found_zero = true;
      break;
    }
    s = next;
    p.xi.push_back(s.xi);
    p.theta.push_back(s.theta);
    p.dtheta.push_back(s.dtheta);
  }

  if (!infinite && !found_zero)
    throw IntegrationFailure(
        "lane_emden_solve: no zero of theta before xi_max; increase xi_max");
  if (infinite) p.radius = std::numeric_limits<double>::infinity();

  attach_physical_tables(p);
  return p;
}

StationaryProfile normalize_total_mass(const StationaryProfile& profile) {
  if (profile.support_class != SupportClass::compact)
    throw NotCompact("normalize_total_mass: profile support is not finite");
  const double gamma = profile.gamma;
  if (std::fabs(3.0 * gamma - 4.0) < 1e-9)
    throw ValidationError(
        "normalize_total_mass: homology scaling is degenerate at gamma = 4/3");
  const double n = 1.0 / (gamma - 1.0);
  const double m_n = profile.xi1 * profile.xi1 * std::fabs(profile.dtheta_at_xi1);
  // rho_c alpha^3 m_n = 1 with alpha^2 = (n+1) A rho_c^{gamma-2} / 4pi
  const double base = m_n * std::pow((n + 1.0) * profile.A / kFourPi, 1.5);
  const double rho_c = std::pow(base, -2.0 / (3.0 * gamma - 4.0));

  StationaryProfile out = profile;
  out.central_density = rho_c;
  attach_physical_tables(out);
  return out;
}

double StationaryProfile::rho_of_x(double x) const {
  const double n = 1.0 / (gamma - 1.0);
  x = std::clamp(x, 0.0, x_mass_table.back());
  const double q = std::max(q_of_x(x), 0.0);
  return central_density * std::pow(q, n / (n + 1.0));
}

double StationaryProfile::r_of_x(double x) const {
  x = std::clamp(x, 0.0, x_mass_table.back());
  return radius_of_x(x);
}

ExponentFit stationary_exponents(const StationaryProfile& profile, double window) {
  if (profile.support_class != SupportClass::compact)
    throw NotCompact("stationary_exponents: needs a compact profile");
  if (!(window > 0.0 && window <= 0.2))
    throw ValidationError("stationary_exponents: window must lie in (0, 0.2]");
  const double R = profile.radius;
  const double x_total = profile.x_mass_table.back();

  std::vector<double> log_dr, log_rho_r, log_dx, log_rho_x;
  for (std::size_t i = 0; i < profile.r_table.size(); ++i) {
    const double rho = profile.rho_table[i];
    if (rho <= 0.0) continue;
    const double dr = R - profile.r_table[i];
    if (dr > 0.0 && dr < window * R) {
      log_dr.push_back(std::log(dr));
      log_rho_r.push_back(std::log(rho));
    }
    const double dx = x_total - profile.x_mass_table[i];
    if (dx > 0.0 && dx < window * x_total) {
      log_dx.push_back(std::log(dx));
      log_rho_x.push_back(std::log(rho));
    }
  }
  if (log_dr.size() < 8 || log_dx.size() < 8)
    throw InsufficientPoints("stationary_exponents: fewer than 8 samples in the window");
  ExponentFit fit;
  fit.eulerian_exp = fit_slope(log_dr, log_rho_r);
  fit.lagrangian_exp = fit_slope(log_dx, log_rho_x);
  return fit;
}

}  // namespace starsim

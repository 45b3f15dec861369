#include "gausson/model.hpp"

#include <cmath>
#include <string>

#include "gausson/errors.hpp"

namespace gausson {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void PhysicalParams::validate() const {
  require(std::isfinite(mass) && mass > 0.0, "mass: must be > 0");
  require(std::isfinite(hbar) && hbar > 0.0, "hbar: must be > 0");
  require(std::isfinite(delta0) && delta0 > 0.0, "delta0: must be > 0");
  require(std::isfinite(nu) && nu >= 0.0, "nu: must be >= 0");
  require(std::isfinite(kappa) && kappa >= 0.0, "kappa: must be >= 0");
  require(std::isfinite(x0), "x0: must be finite");
  require(std::isfinite(v0), "v0: must be finite");
  require(std::isfinite(deltadot0), "deltadot0: must be finite");
}

PhysicalParams DimensionlessParams::as_physical() const {
  PhysicalParams p;
  p.mass = kMass;
  p.hbar = kHbar;
  p.nu = nu_t;
  p.kappa = kappa_t;
  p.delta0 = delta0_t;
  p.x0 = x0_t;
  p.v0 = v0_t;
  p.deltadot0 = deltadot0_t;
  return p;
}

DimensionlessParams DimensionlessParams::from_physical(const PhysicalParams& p) {
  if (p.mass != kMass || p.hbar != kHbar) {
    throw ConfigError("parameters are not in scaled units (hbar = 1, mass = 1/2)");
  }
  DimensionlessParams d;
  d.nu_t = p.nu;
  d.kappa_t = p.kappa;
  d.x0_t = p.x0;
  d.v0_t = p.v0;
  d.deltadot0_t = p.deltadot0;
  d.delta0_t = p.delta0;
  return d;
}

Scales make_scales(const PhysicalParams& p) {
  p.validate();
  Scales s;
  s.length = p.delta0;
  s.time = 2.0 * p.mass * p.delta0 * p.delta0 / p.hbar;
  s.velocity = s.length / s.time;
  return s;
}

std::pair<DimensionlessParams, Scales> nondimensionalize(const PhysicalParams& p) {
  const Scales s = make_scales(p);
  DimensionlessParams d;
  d.nu_t = p.nu * s.time;
  d.kappa_t = p.kappa * s.time;
  d.x0_t = p.x0 / s.length;
  d.v0_t = p.v0 / s.velocity;
  d.deltadot0_t = p.deltadot0 / s.velocity;
  d.delta0_t = 1.0;
  return {d, s};
}

PhysicalParams redimensionalize(const DimensionlessParams& d, const Scales& s,
                                double hbar) {
  if (!(s.length > 0.0 && s.time > 0.0 && s.velocity > 0.0 && hbar > 0.0)) {
    throw ConfigError("scales and hbar must be strictly positive");
  }
  PhysicalParams p;
  p.hbar = hbar;
  p.mass = hbar * s.time / (2.0 * s.length * s.length);
  p.delta0 = d.delta0_t * s.length;
  p.nu = d.nu_t / s.time;
  p.kappa = d.kappa_t / s.time;
  p.x0 = d.x0_t * s.length;
  p.v0 = d.v0_t * s.velocity;
  p.deltadot0 = d.deltadot0_t * s.velocity;
  return p;
}

double spreading_rate(const PhysicalParams& p) {
  return p.hbar / (2.0 * p.mass * p.delta0 * p.delta0);
}

double gausson_kappa(const PhysicalParams& p) {
  p.validate();
  const double half_nu = 0.5 * p.nu;
  // hypot avoids overflow of the squares at SI magnitudes.
  return half_nu + std::hypot(half_nu, spreading_rate(p));
}

double bohmian_time_constant(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw DomainError("bohmian_time_constant: kappa must be > 0 (no transition without measurement)");
  }
  return 1.0 / kappa;
}

double bohmian_time_constant_approx(const PhysicalParams& p) {
  p.validate();
  const double limit = p.hbar / (p.mass * p.delta0 * p.delta0);
  if (!(p.nu < limit)) {
    throw DomainError("bohmian_time_constant_approx: small-friction condition nu < hbar/(m delta0^2) violated");
  }
  const double t0 = 2.0 * p.mass * p.delta0 * p.delta0 / p.hbar;
  return t0 * (1.0 - p.nu / limit);
}

PhysicalParams electron_preset() {
  PhysicalParams p;
  p.mass = codata::electron_mass;
  p.hbar = codata::hbar;
  p.delta0 = kElectronWidth;
  p.nu = 0.0;
  p.kappa = gausson_kappa(p);
  return p;
}

}  // namespace gausson

#pragma once

#include <utility>

namespace gausson {

namespace codata {
// CODATA 2018 values.
inline constexpr double electron_mass = 9.1093837015e-31;  // kg
inline constexpr double hbar = 1.054571817e-34;            // J s
}  // namespace codata

// Approximate electron size used by the "electron" preset, m.
inline constexpr double kElectronWidth = 2.8e-15;
// Literature value quoted for the electron's upper Bohmian time constant, s.
// Kept for comparison only; the library always computes tau_B itself.
inline constexpr double kReferenceTauBMax = 1e-26;

// Physical parameters of a Gaussian packet under continuous measurement and
// Kostin friction. The same struct carries dimensionless values (see
// DimensionlessParams::as_physical), so every formula below works in SI or in
// scaled units.
struct PhysicalParams {
  double mass = 1.0;       // kg
  double hbar = 1.0;       // J s
  double nu = 0.0;         // friction, 1/s
  double kappa = 0.0;      // measurement resolution, 1/s
  double delta0 = 1.0;     // initial width, m
  double x0 = 0.0;         // initial centre, m
  double v0 = 0.0;         // initial centre velocity, m/s
  double deltadot0 = 0.0;  // initial width rate, m/s

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Length is delta0, time is 2 m delta0^2 / hbar.
struct Scales {
  double length = 1.0;
  double time = 1.0;
  double velocity = 1.0;
};

// Parameters in units where hbar = 1 and mass = 1/2, so the free Schroedinger
// equation reads i psi_t = -psi_xx.
struct DimensionlessParams {
  static constexpr double kHbar = 1.0;
  static constexpr double kMass = 0.5;

  double nu_t = 0.0;
  double kappa_t = 0.0;
  double x0_t = 0.0;
  double v0_t = 0.0;
  double deltadot0_t = 0.0;
  // 1 after nondimensionalize(); sweeps may vary it.
  double delta0_t = 1.0;

  PhysicalParams as_physical() const;
  static DimensionlessParams from_physical(const PhysicalParams& p);
};

Scales make_scales(const PhysicalParams& p);

std::pair<DimensionlessParams, Scales> nondimensionalize(const PhysicalParams& p);

// Inverse of nondimensionalize. The mass follows from hbar and the scales.
PhysicalParams redimensionalize(const DimensionlessParams& d, const Scales& s,
                                double hbar);

// hbar / (2 m delta0^2): inverse free-spreading time.
double spreading_rate(const PhysicalParams& p);

// Resolution for which the width equation has a stationary (Gausson)
// solution of width delta0:  nu/2 + sqrt(nu^2/4 + hbar^2 / (4 m^2 delta0^4)).
double gausson_kappa(const PhysicalParams& p);

// tau_B = 1/kappa. Throws DomainError for kappa <= 0.
double bohmian_time_constant(double kappa);

// First-order small-friction expansion of 1/gausson_kappa:
// (2 m delta0^2/hbar)(1 - nu m delta0^2/hbar). Requires nu < hbar/(m delta0^2).
double bohmian_time_constant_approx(const PhysicalParams& p);

// m = 9.1094e-31 kg, delta0 = 2.8e-15 m, nu = 0, kappa at the Gausson value.
PhysicalParams electron_preset();

}  // namespace gausson

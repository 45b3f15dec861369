#pragma once

#include <span>
#include <vector>

#include "gausson/model.hpp"
#include "gausson/trajectory.hpp"

namespace gausson {

// Dynamical variables of the Gaussian reduction: centre and width with rates.
struct GaussonState {
  double t = 0.0;
  double xbar = 0.0;
  double xbar_dot = 0.0;
  double delta = 1.0;
  double delta_dot = 0.0;
};

GaussonState initial_gausson_state(const PhysicalParams& p);

struct CentreMotion {
  double xbar = 0.0;
  double xbar_dot = 0.0;
};

// Solution of xbar'' + nu xbar' = 0 from (x0, v0).
CentreMotion classical_trajectory(const PhysicalParams& p, double t);

// Width trace of
//   delta'' + (nu - 2 kappa) delta' + (kappa^2 - kappa nu) delta = hbar^2 / (4 m^2 delta^3).
struct WidthSeries {
  std::vector<double> times;
  std::vector<double> deltas;
  std::vector<double> delta_dots;

  std::size_t size() const { return times.size(); }
  // Cubic Hermite interpolation using (delta, delta_dot); exact at stamps.
  // Throws RangeError outside [times.front(), times.back()].
  double delta_at(double t) const;
};

struct WidthOptions {
  double step = 1e-3;         // RK4 step, in units of 2 m delta0^2 / hbar
  double delta_floor = 1e-6;  // collapse floor, in units of delta0
};

// Fixed-step RK4. Each interval of t_grid is split into equal sub-steps no
// longer than options.step, so the trace hits every stamp exactly.
// Throws CollapseError when delta drops to the floor.
WidthSeries integrate_width(const PhysicalParams& p, const GaussonState& initial,
                            std::span<const double> t_grid,
                            const WidthOptions& options = {});

// (kappa^2 - kappa nu) delta - hbar^2/(4 m^2 delta^3); zero at the Gausson value.
double stationary_width_residual(const PhysicalParams& p, double delta);

// Closed-form ensemble  x_i(t) = xbar(t) + (x0_i - xbar(0)) (delta(t)/delta(0)) e^{-kappa t}.
// Reduces to x0_i e^{-t/tau_B} about xbar for a stationary width.
TrajectoryEnsemble bohmian_trajectories_analytic(const PhysicalParams& p,
                                                 std::span<const double> x0i,
                                                 const WidthSeries& width,
                                                 std::span<const double> t_grid);

// v(x) = (delta'/delta - kappa)(x - xbar) + xbar'.
double velocity_field_analytic(const GaussonState& state, double kappa, double x);

// -hbar^2/(2 m phi) phi'' for the Gaussian amplitude:
//   -hbar^2 (x - xbar)^2 / (8 m delta^4) + hbar^2 / (4 m delta^2).
// Uses the instantaneous width; for a stationary packet delta = delta0.
double quantum_potential_gausson(const PhysicalParams& p, const GaussonState& state,
                                 double x);

// -dV_qu/dx along the stationary-width trajectory with offset x0i from the centre:
//   hbar^2 x0i e^{-t/tau_B} / (4 m delta0^4).
double quantum_force_gausson(const PhysicalParams& p, double x0i, double t,
                             double tau_b);

// (2 pi delta^2)^{-1/2} exp(-(x - xbar)^2 / (2 delta^2)).
double density_gausson(const GaussonState& state, double x);

// Closed form of <ln rho> for the Gaussian density: -ln(2 pi delta^2)/2 - 1/2.
double mean_ln_density_gausson(double delta);

}  // namespace gausson

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gausson/analytic.hpp"
#include "gausson/model.hpp"
#include "gausson/spectral.hpp"

namespace gausson {

// Floor applied to rho inside ln(rho).
inline constexpr double kDensityFloor = 1e-30;
// close_tails: fit region and blend band, as densities relative to the peak.
inline constexpr double kTailFitThreshold = 1e-8;
inline constexpr double kTailBlendUpper = 1e-3;
inline constexpr double kTailBlendLower = 1e-6;
// Largest density tolerated at the two outermost grid cells.
inline constexpr double kBoundaryDensityLimit = 1e-10;
// Largest relative norm change tolerated in one step.
inline constexpr double kStepNormTolerance = 1e-6;

// Periodic grid x_i = x_min + i dx, dx = (x_max - x_min) / n_points.
struct Grid {
  double x_min = -12.0;
  double x_max = 12.0;
  std::size_t n_points = 512;
  double dt = 1e-3;

  void validate() const;
  double dx() const { return (x_max - x_min) / static_cast<double>(n_points); }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
  std::vector<double> positions() const;
};

// Packet-to-edge distance, in widths, kept by recommended_grid. At 12 widths
// |psi| at the seam is ~1e-16 of the peak; at 8 the non-periodic jump there
// (~1e-7) leaks into every spectral derivative and grows as 1/dx.
inline constexpr double kGridMarginWidths = 12.0;

// Grid that keeps the packet kGridMarginWidths widths from the edges over
// [0, t_end] (widths taken from the width equation), never smaller than
// `base` and with a spacing no coarser than base.dx().
Grid recommended_grid(const PhysicalParams& p, double t_end, const Grid& base = {});

struct WavepacketState {
  Grid grid;
  double t = 0.0;
  std::vector<cplx> psi;

  std::vector<double> density() const;
  double norm() const;
};

// Gaussian amplitude of width initial.delta with the phase whose gradient is
// the Gaussian velocity field at t = 0:
//   S = (m/2)(delta'/delta - kappa)(x - xbar)^2 + m xbar' (x - xbar).
// Throws ConfigError if xbar +- 6 delta is not inside the grid.
WavepacketState init_gaussian(const Grid& grid, const PhysicalParams& p,
                              const GaussonState& initial);

// Tail closure for the nonlinear runs. ln rho and arg psi are fitted by
// rho-weighted quadratics over the region rho > kTailFitThreshold * peak; psi
// is blended into the fitted Gaussian where the fitted density falls from
// kTailBlendUpper to kTailBlendLower of the peak, and replaced below that.
// The log term raises any density as rho^{e^{-2 kappa t}}; on a truncated
// periodic grid nothing physical flows in at the seam and the far tails fill
// up within a few 1/kappa, so they are slaved to the packet instead.
void close_tails(WavepacketState& state);

// rho-weighted trapezoid mean on the periodic grid.
double weighted_mean(std::span<const double> rho, std::span<const double> f);

// Measurement term  -kappa (ln rho - <ln rho>), rho floored at kDensityFloor
// inside the log.
std::vector<double> compute_wc(const WavepacketState& state, double kappa);

// Friction term, purely imaginary; returns its imaginary part
//   -(nu/hbar)(S - <S>)
// i.e. W_f = -(nu/2)[ln(psi/psi*) - <ln(psi/psi*)>]. With this sign
// i hbar W_f psi = nu (S - <S>) psi, the Kostin damping term.
std::vector<double> compute_wf(const WavepacketState& state, double nu, double hbar = 1.0);

// S = hbar * continuous phase, anchored at arg(psi) on the density peak and
// unwrapped across the contiguous region where rho > kDensityFloor; held
// constant outside it. Throws UnwrapError when adjacent nodes differ by more
// than 0.9 pi (unresolved phase) or a second density lobe above 1e-8 of the
// peak lies outside the region.
std::vector<double> unwrap_phase(const WavepacketState& state, double hbar = 1.0);

// Strang split-step integrator for
//   i hbar psi_t = [-hbar^2/(2m) d_xx + i hbar (W_c + W_f)] psi.
// Nonlinear half-steps integrate the W_c and W_f sub-flow exactly from the
// current psi: ln rho -> e^{-2 kappa h} ln rho + c with c fixed by the norm
// (rho floored at kDensityFloor in the log), S -> <S> + e^{-nu h} (S - <S>).
// The kinetic step is the exact free propagator on the grid. For kappa or nu
// nonzero, close_tails runs after the kinetic step and after the last
// half-step.
class Propagator {
 public:
  Propagator(const Grid& grid, const PhysicalParams& p);

  // Advances state by grid.dt in place. Throws InstabilityError on a norm
  // jump above kStepNormTolerance or non-finite values, BoundaryError when
  // density reaches the edge.
  void step(WavepacketState& state);

  const Grid& grid() const { return grid_; }

 private:
  void nonlinear_half_step(WavepacketState& state) const;

  Grid grid_;
  PhysicalParams params_;
  FourierTransform fft_;
  std::vector<cplx> kinetic_phase_;
  std::vector<cplx> scratch_;
};

WavepacketState step(const WavepacketState& state, const PhysicalParams& p);

// Evolves to t_end and returns snapshots at state.t, every requested time and
// t_end (sorted, duplicates merged). Requested times must be inside
// [state.t, t_end] and on the dt lattice. Step count and stamps come from
// integer step indices, so runs are bit-reproducible.
std::vector<WavepacketState> evolve(const WavepacketState& state, const PhysicalParams& p,
                                    double t_end, std::span<const double> snapshot_times);

// Throws BoundaryError if rho at either outermost cell is >= kBoundaryDensityLimit.
void check_boundary(const WavepacketState& state);

}  // namespace gausson

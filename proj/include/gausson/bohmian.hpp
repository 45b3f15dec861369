#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gausson/model.hpp"
#include "gausson/pde.hpp"
#include "gausson/trajectory.hpp"

namespace gausson {

// v = j / rho is trusted only where rho is at least this; elsewhere it is
// extrapolated linearly from the edge of the trusted region.
inline constexpr double kVelocityDensityFloor = 1e-20;

// Bohmian velocity v = (hbar/m) Im(psi* psi_x) / |psi|^2, psi_x spectral.
std::vector<double> velocity_field_numeric(const WavepacketState& state,
                                           const PhysicalParams& p);

// "quantile": centre + delta0 * Phi^{-1}((i - 1/2)/n), i = 1..n.
// "symmetric": offsets +-k delta0/2, k = 1..n/2, plus the centre when n is odd.
// Both ascending. Throws ConfigError for n < 1 or an unknown scheme.
std::vector<double> sample_initial_positions(double delta0, std::size_t n,
                                             std::string_view scheme, double centre = 0.0);

struct EnsembleOptions {
  // RK4 sub-steps per snapshot interval.
  std::size_t substeps = 1;
  // Grid cells beyond the trusted-velocity region a particle may reach
  // before it is flagged.
  double margin_cells = 4.0;
  std::size_t threads = 1;
};

// Integrates dx_i/dt = v(x_i, t) through the snapshot sequence with RK4,
// interpolating v cubically in space and linearly in time. Particles that
// leave the resolved region are flagged and held at their last position.
// Results do not depend on options.threads.
TrajectoryEnsemble advance_ensemble(std::span<const double> x0,
                                    std::span<const WavepacketState> states,
                                    const PhysicalParams& p,
                                    const EnsembleOptions& options = {});

}  // namespace gausson

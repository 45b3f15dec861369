#pragma once

#include <json.hpp>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gausson/model.hpp"
#include "gausson/pde.hpp"
#include "gausson/trajectory.hpp"

namespace gausson {

enum class Observable { position, momentum, kinetic_energy, ln_rho, phase_S };

// Parses "position", "momentum", "kinetic_energy", "ln_rho", "phase_S".
Observable parse_observable(std::string_view name);

// <O> = int psi* O psi dx / int |psi|^2 dx on the periodic grid (trapezoid
// rule); momentum and kinetic energy use spectral derivatives.
double expectation(const WavepacketState& state, Observable kind, const PhysicalParams& p);

// sqrt of the second central moment of |psi|^2.
double measured_width(const WavepacketState& state);

// mu4 / mu2^2 - 3 of |psi|^2.
double excess_kurtosis(const WavepacketState& state);

struct ContinuityResidual {
  std::vector<double> field;
  double norm = 0.0;  // sqrt(int rho r^2 dx), rho at the midpoint
};

// Centred-in-time residual of the continuity equation with measurement sink
//   rho_t + (rho v)_x + 2 kappa [ln rho - <ln rho>] rho
// between two snapshots. The factor 2 is what the wave equation implies for
// psi_t = W_c psi; with it the Gaussian velocity field balances the sink.
ContinuityResidual continuity_residual(const WavepacketState& prev,
                                       const WavepacketState& next, const PhysicalParams& p);

struct DiagnosticsRecord {
  double t = 0.0;
  double norm = 0.0;
  double mean_x = 0.0;
  double mean_p = 0.0;
  double width = 0.0;
  double mean_ln_rho = 0.0;
  double mean_S = 0.0;
  double energy = 0.0;  // kinetic only; V = 0
  double continuity_residual = 0.0;
  double gaussianity = 0.0;  // excess kurtosis
};

// Observables of `state`; the continuity residual is taken against `prev`
// when given (NaN otherwise).
DiagnosticsRecord make_record(const WavepacketState& state, const PhysicalParams& p,
                              const WavepacketState* prev = nullptr);

// Observable series of one run on a common time grid.
struct RunSeries {
  std::vector<double> times;
  std::vector<double> widths;
  std::vector<double> mean_p;  // may be empty
  std::optional<TrajectoryEnsemble> trajectories;
};

struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> width_rel_error;
  double max_width_rel_error = 0.0;
  std::optional<double> max_trajectory_error;
  // Slope of ln|<p>| over t in [0, 2] and the expected -nu.
  std::optional<double> momentum_decay_exponent;
  double expected_decay_exponent = 0.0;

  nlohmann::json to_json() const;
};

// Below this |<p>(0)| (scaled units) no decay exponent is fitted.
inline constexpr double kMinFitMomentum = 1e-8;

// Throws AlignmentError if the time stamps differ by more than 1e-9.
ComparisonReport compare_runs(const RunSeries& pde, const RunSeries& analytic, double nu);

// Least-squares slope of ln|y| against t restricted to t in [t_lo, t_hi].
// Returns nullopt with fewer than two usable points or any |y| == 0.
std::optional<double> log_decay_rate(std::span<const double> t, std::span<const double> y,
                                     double t_lo = 0.0, double t_hi = 2.0);

}  // namespace gausson

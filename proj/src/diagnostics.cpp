#include "gausson/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gausson/errors.hpp"
#include "gausson/spectral.hpp"

namespace gausson {

Observable parse_observable(std::string_view name) {
  if (name == "position") return Observable::position;
  if (name == "momentum") return Observable::momentum;
  if (name == "kinetic_energy") return Observable::kinetic_energy;
  if (name == "ln_rho") return Observable::ln_rho;
  if (name == "phase_S") return Observable::phase_S;
  throw ConfigError("unknown observable '" + std::string(name) + "'");
}

namespace {

// Returns (sum k^m |psi_hat|^2) / (sum |psi_hat|^2).
double spectral_moment(const WavepacketState& state, int power) {
  const std::size_t n = state.psi.size();
  FourierTransform fft(n);
  std::vector<cplx> hat(n);
  fft.forward(state.psi, hat);
  const auto k = wavenumbers(n, state.grid.dx());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::norm(hat[i]);
    num += std::pow(k[i], power) * w;
    den += w;
  }
  return num / den;
}

std::vector<double> log_density(const std::vector<double>& rho) {
  std::vector<double> out(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) out[i] = std::log(std::max(rho[i], kDensityFloor));
  return out;
}

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
};

Moments central_moments(const WavepacketState& state) {
  const auto rho = state.density();
  const auto xs = state.grid.positions();
  Moments m;
  m.mean = weighted_mean(rho, xs);
  double den = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double d = xs[i] - m.mean;
    const double d2 = d * d;
    m.m2 += rho[i] * d2;
    m.m4 += rho[i] * d2 * d2;
    den += rho[i];
  }
  m.m2 /= den;
  m.m4 /= den;
  return m;
}

// d/dx of the probability current (hbar/m) Im(psi* psi_x), and the current.
std::vector<double> current_divergence(const WavepacketState& state, const PhysicalParams& p,
                                       FourierTransform& fft, std::span<const double> k) {
  const auto dpsi = spectral_derivative(fft, k, state.psi);
  const std::size_t n = state.psi.size();
  std::vector<cplx> j(n);
  for (std::size_t i = 0; i < n; ++i) {
    j[i] = p.hbar / p.mass * std::imag(std::conj(state.psi[i]) * dpsi[i]);
  }
  const auto dj = spectral_derivative(fft, k, j);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = dj[i].real();
  return out;
}

std::vector<double> sink_term(const WavepacketState& state, double kappa) {
  const auto rho = state.density();
  const auto ln_rho = log_density(rho);
  const double mean = weighted_mean(rho, ln_rho);
  std::vector<double> out(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out[i] = 2.0 * kappa * (ln_rho[i] - mean) * rho[i];
  }
  return out;
}

}  // namespace

double expectation(const WavepacketState& state, Observable kind, const PhysicalParams& p) {
  switch (kind) {
    case Observable::position:
      return weighted_mean(state.density(), state.grid.positions());
    case Observable::momentum:
      return p.hbar * spectral_moment(state, 1);
    case Observable::kinetic_energy:
      return p.hbar * p.hbar / (2.0 * p.mass) * spectral_moment(state, 2);
    case Observable::ln_rho: {
      const auto rho = state.density();
      return weighted_mean(rho, log_density(rho));
    }
    case Observable::phase_S:
      return weighted_mean(state.density(), unwrap_phase(state, p.hbar));
  }
  throw ConfigError("unknown observable");
}

double measured_width(const WavepacketState& state) {
  return std::sqrt(central_moments(state).m2);
}

double excess_kurtosis(const WavepacketState& state) {
  const Moments m = central_moments(state);
  return m.m4 / (m.m2 * m.m2) - 3.0;
}

ContinuityResidual continuity_residual(const WavepacketState& prev,
                                       const WavepacketState& next, const PhysicalParams& p) {
  if (prev.psi.size() != next.psi.size()) {
    throw ConfigError("continuity_residual: snapshots on different grids");
  }
  const double dt = next.t - prev.t;
  if (!(dt > 0.0)) throw ConfigError("continuity_residual: snapshots must advance in time");
  const std::size_t n = prev.psi.size();
  FourierTransform fft(n);
  const auto k = wavenumbers(n, prev.grid.dx());

  const auto rho_prev = prev.density();
  const auto rho_next = next.density();
  const auto div_prev = current_divergence(prev, p, fft, k);
  const auto div_next = current_divergence(next, p, fft, k);
  const auto sink_prev = sink_term(prev, p.kappa);
  const auto sink_next = sink_term(next, p.kappa);

  ContinuityResidual out;
  out.field.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (rho_next[i] - rho_prev[i]) / dt + 0.5 * (div_prev[i] + div_next[i]) +
                     0.5 * (sink_prev[i] + sink_next[i]);
    out.field[i] = r;
    acc += 0.5 * (rho_prev[i] + rho_next[i]) * r * r;
  }
  out.norm = std::sqrt(acc * prev.grid.dx());
  return out;
}

DiagnosticsRecord make_record(const WavepacketState& state, const PhysicalParams& p,
                              const WavepacketState* prev) {
  DiagnosticsRecord r;
  r.t = state.t;
  r.norm = state.norm();
  r.mean_x = expectation(state, Observable::position, p);
  r.mean_p = expectation(state, Observable::momentum, p);
  const Moments m = central_moments(state);
  r.width = std::sqrt(m.m2);
  r.gaussianity = m.m4 / (m.m2 * m.m2) - 3.0;
  r.mean_ln_rho = expectation(state, Observable::ln_rho, p);
  r.mean_S = expectation(state, Observable::phase_S, p);
  r.energy = expectation(state, Observable::kinetic_energy, p);
  r.continuity_residual = prev != nullptr ? continuity_residual(*prev, state, p).norm
                                          : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::optional<double> log_decay_rate(std::span<const double> t, std::span<const double> y,
                                     double t_lo, double t_hi) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < t.size() && i < y.size(); ++i) {
    if (t[i] < t_lo - 1e-12 || t[i] > t_hi + 1e-12) continue;
    if (y[i] == 0.0 || !std::isfinite(y[i])) return std::nullopt;
    const double ly = std::log(std::abs(y[i]));
    st += t[i];
    sy += ly;
    stt += t[i] * t[i];
    sty += t[i] * ly;
    ++count;
  }
  if (count < 2) return std::nullopt;
  const double c = static_cast<double>(count);
  const double denom = c * stt - st * st;
  if (denom == 0.0) return std::nullopt;
  return (c * sty - st * sy) / denom;
}

ComparisonReport compare_runs(const RunSeries& pde, const RunSeries& analytic, double nu) {
  if (pde.times.size() != analytic.times.size()) {
    throw AlignmentError("compare_runs: series have different lengths");
  }
  for (std::size_t k = 0; k < pde.times.size(); ++k) {
    if (std::abs(pde.times[k] - analytic.times[k]) > 1e-9 * std::max(1.0, std::abs(pde.times[k]))) {
      throw AlignmentError("compare_runs: time stamps differ at index " + std::to_string(k));
    }
  }
  if (pde.widths.size() != pde.times.size() || analytic.widths.size() != analytic.times.size()) {
    throw AlignmentError("compare_runs: width series do not match their time stamps");
  }

  ComparisonReport rep;
  rep.times = pde.times;
  rep.width_rel_error.resize(pde.times.size());
  for (std::size_t k = 0; k < pde.times.size(); ++k) {
    const double e = std::abs(pde.widths[k] - analytic.widths[k]) / std::abs(analytic.widths[k]);
    rep.width_rel_error[k] = e;
    rep.max_width_rel_error = std::max(rep.max_width_rel_error, e);
  }

  if (pde.trajectories && analytic.trajectories) {
    const auto& a = *pde.trajectories;
    const auto& b = *analytic.trajectories;
    if (a.time_count() != b.time_count() || a.particle_count() != b.particle_count()) {
      throw AlignmentError("compare_runs: trajectory ensembles differ in shape");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < a.time_count(); ++k) {
      for (std::size_t i = 0; i < a.particle_count(); ++i) {
        if (a.flagged[i] || b.flagged[i]) continue;
        worst = std::max(worst, std::abs(a.positions[k][i] - b.positions[k][i]));
      }
    }
    rep.max_trajectory_error = worst;
  }

  rep.expected_decay_exponent = -nu;
  // no exponent to speak of when the packet starts at rest
  if (!pde.mean_p.empty() && std::abs(pde.mean_p.front()) > kMinFitMomentum) {
    rep.momentum_decay_exponent = log_decay_rate(pde.times, pde.mean_p);
  }
  return rep;
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json j;
  j["times"] = times;
  j["width_rel_error"] = width_rel_error;
  j["max_width_rel_error"] = max_width_rel_error;
  j["max_trajectory_error"] = max_trajectory_error ? nlohmann::json(*max_trajectory_error)
                                                   : nlohmann::json(nullptr);
  j["momentum_decay_exponent"] = momentum_decay_exponent
                                     ? nlohmann::json(*momentum_decay_exponent)
                                     : nlohmann::json(nullptr);
  j["expected_decay_exponent"] = expected_decay_exponent;
  return j;
}

}  // namespace gausson

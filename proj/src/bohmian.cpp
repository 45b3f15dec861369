#include "gausson/bohmian.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <thread>

#include "gausson/errors.hpp"
#include "gausson/spectral.hpp"

namespace gausson {

namespace {

struct TrustedRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

TrustedRange trusted_range(const std::vector<double>& rho) {
  const auto peak = static_cast<std::size_t>(std::max_element(rho.begin(), rho.end()) - rho.begin());
  TrustedRange r{peak, peak};
  while (r.lo > 0 && rho[r.lo - 1] >= kVelocityDensityFloor) --r.lo;
  while (r.hi + 1 < rho.size() && rho[r.hi + 1] >= kVelocityDensityFloor) ++r.hi;
  return r;
}

// Velocity samples of one snapshot plus the interval where they are trusted.
struct VelocitySnapshot {
  double t = 0.0;
  std::vector<double> v;
  double x_lo = 0.0;
  double x_hi = 0.0;
};

std::vector<double> velocity_with_range(const WavepacketState& state, const PhysicalParams& p,
                                        FourierTransform& fft, TrustedRange& range) {
  const std::size_t n = state.psi.size();
  const auto k = wavenumbers(n, state.grid.dx());
  // Re and Im differentiated separately so a real psi gives j = 0 exactly
  std::vector<std::complex<double>> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = state.psi[i].real();
    im[i] = state.psi[i].imag();
  }
  const auto da = spectral_derivative(fft, k, re);
  const auto db = spectral_derivative(fft, k, im);
  const auto rho = state.density();
  range = trusted_range(rho);

  std::vector<double> v(n, 0.0);
  const double coeff = p.hbar / p.mass;
  for (std::size_t i = range.lo; i <= range.hi; ++i) {
    const double a = state.psi[i].real();
    const double b = state.psi[i].imag();
    v[i] = coeff * (a * db[i].real() - b * da[i].real()) / rho[i];
  }
  const std::size_t width = range.hi - range.lo;
  if (width == 0) {
    std::fill(v.begin(), v.end(), v[range.lo]);
    return v;
  }
  const std::size_t stride = std::min<std::size_t>(4, width);
  const double left_slope = (v[range.lo + stride] - v[range.lo]) / static_cast<double>(stride);
  const double right_slope = (v[range.hi] - v[range.hi - stride]) / static_cast<double>(stride);
  for (std::size_t i = 0; i < range.lo; ++i) {
    v[i] = v[range.lo] - left_slope * static_cast<double>(range.lo - i);
  }
  for (std::size_t i = range.hi + 1; i < n; ++i) {
    v[i] = v[range.hi] + right_slope * static_cast<double>(i - range.hi);
  }
  return v;
}

// Four-point Lagrange interpolation on the periodic grid.
double interpolate_cubic(const Grid& grid, const std::vector<double>& f, double x) {
  const auto n = static_cast<long>(grid.n_points);
  const double u = (x - grid.x_min) / grid.dx();
  const double base = std::floor(u);
  const double s = u - base;
  const long i = static_cast<long>(base);
  auto at = [&](long j) { return f[static_cast<std::size_t>(((j % n) + n) % n)]; };
  const double fm = at(i - 1);
  const double f0 = at(i);
  const double f1 = at(i + 1);
  const double f2 = at(i + 2);
  return -s * (s - 1) * (s - 2) / 6.0 * fm + (s + 1) * (s - 1) * (s - 2) / 2.0 * f0 -
         (s + 1) * s * (s - 2) / 2.0 * f1 + (s + 1) * s * (s - 1) / 6.0 * f2;
}

}  // namespace

std::vector<double> velocity_field_numeric(const WavepacketState& state,
                                           const PhysicalParams& p) {
  FourierTransform fft(state.psi.size());
  TrustedRange range;
  return velocity_with_range(state, p, fft, range);
}

std::vector<double> sample_initial_positions(double delta0, std::size_t n,
                                             std::string_view scheme, double centre) {
  if (n < 1) throw ConfigError("ensemble: n must be >= 1");
  std::vector<double> xs;
  xs.reserve(n);
  if (scheme == "quantile") {
    const boost::math::normal_distribution<double> standard(0.0, 1.0);
    for (std::size_t i = 1; i <= n; ++i) {
      const double prob = (static_cast<double>(i) - 0.5) / static_cast<double>(n);
      // Exact median; the quantile function returns a signed zero-ish value.
      const double z = (2 * i - 1 == n) ? 0.0 : boost::math::quantile(standard, prob);
      xs.push_back(centre + delta0 * z);
    }
  } else if (scheme == "symmetric") {
    const std::size_t half = n / 2;
    for (std::size_t k = half; k >= 1; --k) {
      xs.push_back(centre - static_cast<double>(k) * 0.5 * delta0);
    }
    if (n % 2 == 1) xs.push_back(centre);
    for (std::size_t k = 1; k <= half; ++k) {
      xs.push_back(centre + static_cast<double>(k) * 0.5 * delta0);
    }
  } else {
    throw ConfigError("ensemble: unknown scheme '" + std::string(scheme) +
                      "' (expected quantile or symmetric)");
  }
  return xs;
}

TrajectoryEnsemble advance_ensemble(std::span<const double> x0,
                                    std::span<const WavepacketState> states,
                                    const PhysicalParams& p, const EnsembleOptions& options) {
  if (states.empty()) throw ConfigError("advance_ensemble: no snapshots");
  if (options.substeps < 1) throw ConfigError("advance_ensemble: substeps must be >= 1");
  const Grid& grid = states.front().grid;
  const double margin = options.margin_cells * grid.dx();

  std::vector<VelocitySnapshot> fields(states.size());
  {
    FourierTransform fft(grid.n_points);
    for (std::size_t k = 0; k < states.size(); ++k) {
      TrustedRange range;
      fields[k].t = states[k].t;
      fields[k].v = velocity_with_range(states[k], p, fft, range);
      fields[k].x_lo = grid.x(range.lo) - margin;
      fields[k].x_hi = grid.x(range.hi) + margin;
      if (k > 0 && !(fields[k].t > fields[k - 1].t)) {
        throw ConfigError("advance_ensemble: snapshot times must increase");
      }
    }
  }

  const std::size_t np = x0.size();
  TrajectoryEnsemble ens;
  ens.x0.assign(x0.begin(), x0.end());
  ens.times.resize(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) ens.times[k] = states[k].t;
  ens.positions.assign(states.size(), std::vector<double>(np, 0.0));
  std::vector<char> flags(np, 0);

  // Velocity between snapshots k and k+1 at time t; nullopt outside the
  // trusted region of either bracketing snapshot.
  auto velocity = [&](std::size_t k, double t, double x) -> std::optional<double> {
    const auto& a = fields[k];
    const auto& b = fields[k + 1];
    if (x < std::max(a.x_lo, b.x_lo) || x > std::min(a.x_hi, b.x_hi)) return std::nullopt;
    const double w = (t - a.t) / (b.t - a.t);
    return (1.0 - w) * interpolate_cubic(grid, a.v, x) + w * interpolate_cubic(grid, b.v, x);
  };

  auto integrate_particle = [&](std::size_t i) {
    double x = x0[i];
    ens.positions[0][i] = x;
    bool flagged = x < fields[0].x_lo || x > fields[0].x_hi;
    for (std::size_t k = 0; k + 1 < fields.size(); ++k) {
      if (!flagged) {
        const double h = (fields[k + 1].t - fields[k].t) / static_cast<double>(options.substeps);
        for (std::size_t s = 0; s < options.substeps && !flagged; ++s) {
          const double t = fields[k].t + static_cast<double>(s) * h;
          const auto k1 = velocity(k, t, x);
          const auto k2 = k1 ? velocity(k, t + 0.5 * h, x + 0.5 * h * *k1) : std::nullopt;
          const auto k3 = k2 ? velocity(k, t + 0.5 * h, x + 0.5 * h * *k2) : std::nullopt;
          const auto k4 = k3 ? velocity(k, t + h, x + h * *k3) : std::nullopt;
          if (!k4) {
            flagged = true;
            break;
          }
          x += h / 6.0 * (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4);
        }
      }
      ens.positions[k + 1][i] = x;
    }
    flags[i] = flagged ? 1 : 0;
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, np));
  if (workers == 1) {
    for (std::size_t i = 0; i < np; ++i) integrate_particle(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < np; i += workers) integrate_particle(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  ens.flagged.resize(np);
  for (std::size_t i = 0; i < np; ++i) ens.flagged[i] = flags[i] != 0;
  return ens;
}

}  // namespace gausson

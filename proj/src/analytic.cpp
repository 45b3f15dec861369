#include "gausson/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gausson/errors.hpp"

namespace gausson {

GaussonState initial_gausson_state(const PhysicalParams& p) {
  GaussonState s;
  s.t = 0.0;
  s.xbar = p.x0;
  s.xbar_dot = p.v0;
  s.delta = p.delta0;
  s.delta_dot = p.deltadot0;
  return s;
}

CentreMotion classical_trajectory(const PhysicalParams& p, double t) {
  CentreMotion c;
  if (p.nu == 0.0) {
    c.xbar = p.x0 + p.v0 * t;
    c.xbar_dot = p.v0;
    return c;
  }
  // (1 - e^{-nu t}) / nu via expm1 keeps the nu -> 0 limit accurate.
  c.xbar = p.x0 - p.v0 * std::expm1(-p.nu * t) / p.nu;
  c.xbar_dot = p.v0 * std::exp(-p.nu * t);
  return c;
}

double WidthSeries::delta_at(double t) const {
  if (times.empty() || t < times.front() || t > times.back()) {
    std::ostringstream os;
    os << "width series does not cover t = " << t;
    throw RangeError(os.str());
  }
  auto it = std::lower_bound(times.begin(), times.end(), t);
  auto k = static_cast<std::size_t>(it - times.begin());
  if (*it == t) return deltas[k];
  const std::size_t k0 = k - 1;
  const double h = times[k] - times[k0];
  const double s = (t - times[k0]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * deltas[k0] + h10 * h * delta_dots[k0] + h01 * deltas[k] +
         h11 * h * delta_dots[k];
}

namespace {

struct WidthRhs {
  double damping;    // nu - 2 kappa
  double stiffness;  // kappa^2 - kappa nu
  double source;     // hbar^2 / (4 m^2)

  std::array<double, 2> operator()(const std::array<double, 2>& y) const {
    const double d = y[0];
    return {y[1], source / (d * d * d) - damping * y[1] - stiffness * d};
  }
};

}  // namespace

WidthSeries integrate_width(const PhysicalParams& p, const GaussonState& initial,
                            std::span<const double> t_grid,
                            const WidthOptions& options) {
  p.validate();
  if (!(initial.delta > 0.0)) throw ConfigError("integrate_width: initial delta must be > 0");
  if (!(options.step > 0.0)) throw ConfigError("integrate_width: step must be > 0");
  if (t_grid.empty()) throw ConfigError("integrate_width: empty time grid");
  if (t_grid.front() < initial.t) {
    throw ConfigError("integrate_width: time grid starts before the initial state");
  }
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) {
      throw ConfigError("integrate_width: time grid must be strictly increasing");
    }
  }

  const double time_unit = 2.0 * p.mass * p.delta0 * p.delta0 / p.hbar;
  const double max_step = options.step * time_unit;
  const double floor = options.delta_floor * p.delta0;
  const WidthRhs rhs{p.nu - 2.0 * p.kappa, p.kappa * p.kappa - p.kappa * p.nu,
                     p.hbar * p.hbar / (4.0 * p.mass * p.mass)};

  auto check = [&](double delta, double t) {
    if (!(delta > floor)) {
      std::ostringstream os;
      os << "width collapsed below floor at t = " << t;
      throw CollapseError(os.str(), t);
    }
  };

  WidthSeries out;
  out.times.reserve(t_grid.size());
  out.deltas.reserve(t_grid.size());
  out.delta_dots.reserve(t_grid.size());

  std::array<double, 2> y{initial.delta, initial.delta_dot};
  double t = initial.t;
  for (double target : t_grid) {
    const double span = target - t;
    if (span > 0.0) {
      const auto n = static_cast<long>(std::ceil(span / max_step * (1.0 - 1e-12)));
      const double h = span / static_cast<double>(n);
      const double t_start = t;
      for (long i = 0; i < n; ++i) {
        const double ti = t_start + static_cast<double>(i) * h;
        auto add = [](const std::array<double, 2>& a, const std::array<double, 2>& b,
                      double c) { return std::array<double, 2>{a[0] + c * b[0], a[1] + c * b[1]}; };
        const auto k1 = rhs(y);
        const auto y2 = add(y, k1, 0.5 * h);
        check(y2[0], ti + 0.5 * h);
        const auto k2 = rhs(y2);
        const auto y3 = add(y, k2, 0.5 * h);
        check(y3[0], ti + 0.5 * h);
        const auto k3 = rhs(y3);
        const auto y4 = add(y, k3, h);
        check(y4[0], ti + h);
        const auto k4 = rhs(y4);
        y[0] += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        check(y[0], ti + h);
      }
      t = target;
    }
    out.times.push_back(target);
    out.deltas.push_back(y[0]);
    out.delta_dots.push_back(y[1]);
  }
  return out;
}

double stationary_width_residual(const PhysicalParams& p, double delta) {
  if (!(delta > 0.0)) throw ConfigError("stationary_width_residual: delta must be > 0");
  const double stiffness = p.kappa * p.kappa - p.kappa * p.nu;
  const double source = p.hbar * p.hbar / (4.0 * p.mass * p.mass);
  return stiffness * delta - source / (delta * delta * delta);
}

TrajectoryEnsemble bohmian_trajectories_analytic(const PhysicalParams& p,
                                                 std::span<const double> x0i,
                                                 const WidthSeries& width,
                                                 std::span<const double> t_grid) {
  if (width.size() == 0) throw RangeError("empty width series");
  const double t_start = width.times.front();
  const double delta_start = width.deltas.front();
  const double centre_start = classical_trajectory(p, t_start).xbar;

  TrajectoryEnsemble ens;
  ens.x0.assign(x0i.begin(), x0i.end());
  ens.flagged.assign(x0i.size(), false);
  ens.times.assign(t_grid.begin(), t_grid.end());
  ens.positions.reserve(t_grid.size());
  for (double t : t_grid) {
    const double ratio = width.delta_at(t) / delta_start;
    const double decay = std::exp(-p.kappa * (t - t_start));
    const double centre = classical_trajectory(p, t).xbar;
    std::vector<double> row(x0i.size());
    for (std::size_t i = 0; i < x0i.size(); ++i) {
      row[i] = centre + (x0i[i] - centre_start) * ratio * decay;
    }
    ens.positions.push_back(std::move(row));
  }
  return ens;
}

double velocity_field_analytic(const GaussonState& state, double kappa, double x) {
  if (!(state.delta > 0.0)) throw ConfigError("velocity_field_analytic: delta must be > 0");
  return (state.delta_dot / state.delta - kappa) * (x - state.xbar) + state.xbar_dot;
}

double quantum_potential_gausson(const PhysicalParams& p, const GaussonState& state,
                                 double x) {
  if (!(state.delta > 0.0)) throw ConfigError("quantum_potential_gausson: delta must be > 0");
  const double h2m = p.hbar * p.hbar / p.mass;
  const double d2 = state.delta * state.delta;
  const double dx = x - state.xbar;
  return -h2m * dx * dx / (8.0 * d2 * d2) + h2m / (4.0 * d2);
}

double quantum_force_gausson(const PhysicalParams& p, double x0i, double t,
                             double tau_b) {
  if (!(tau_b > 0.0)) throw DomainError("quantum_force_gausson: tau_B must be > 0");
  const double d2 = p.delta0 * p.delta0;
  return p.hbar * p.hbar / (4.0 * p.mass * d2 * d2) * x0i * std::exp(-t / tau_b);
}

double density_gausson(const GaussonState& state, double x) {
  if (!(state.delta > 0.0)) throw ConfigError("density_gausson: delta must be > 0");
  const double d2 = state.delta * state.delta;
  const double dx = x - state.xbar;
  return std::exp(-dx * dx / (2.0 * d2)) / std::sqrt(2.0 * std::numbers::pi * d2);
}

double mean_ln_density_gausson(double delta) {
  return -0.5 * std::log(2.0 * std::numbers::pi * delta * delta) - 0.5;
}

bool is_non_crossing(const TrajectoryEnsemble& ensemble) {
  const std::size_t n = ensemble.particle_count();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ensemble.x0[a] < ensemble.x0[b]; });
  for (const auto& row : ensemble.positions) {
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t a = order[k - 1];
      const std::size_t b = order[k];
      if (ensemble.x0[a] < ensemble.x0[b] && !(row[a] < row[b])) return false;
    }
  }
  return true;
}

}  // namespace gausson

#include "gausson/pde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gausson/errors.hpp"

namespace gausson {

void Grid::validate() const {
  if (!(x_max > x_min)) throw ConfigError("grid: x_max must exceed x_min");
  if (n_points < 64 || (n_points & (n_points - 1)) != 0) {
    throw ConfigError("grid: n_points must be a power of two >= 64");
  }
  if (!(dt > 0.0)) throw ConfigError("grid: dt must be > 0");
}

std::vector<double> Grid::positions() const {
  std::vector<double> xs(n_points);
  for (std::size_t i = 0; i < n_points; ++i) xs[i] = x(i);
  return xs;
}

Grid recommended_grid(const PhysicalParams& p, double t_end, const Grid& base) {
  base.validate();
  const GaussonState init = initial_gausson_state(p);
  double delta_max = init.delta;
  double lo = init.xbar;
  double hi = init.xbar;
  if (t_end > 0.0) {
    const std::size_t samples = 200;
    std::vector<double> ts(samples);
    for (std::size_t k = 0; k < samples; ++k) {
      ts[k] = t_end * static_cast<double>(k + 1) / static_cast<double>(samples);
    }
    const WidthSeries w = integrate_width(p, init, ts);
    delta_max = std::max(delta_max, *std::max_element(w.deltas.begin(), w.deltas.end()));
    for (double t : ts) {
      const double c = classical_trajectory(p, t).xbar;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  }
  const double margin = kGridMarginWidths * delta_max;
  Grid g = base;
  g.x_min = std::min(base.x_min, lo - margin);
  g.x_max = std::max(base.x_max, hi + margin);
  const double target_dx = base.dx();
  std::size_t n = base.n_points;
  while ((g.x_max - g.x_min) / static_cast<double>(n) > target_dx) n *= 2;
  g.n_points = n;
  return g;
}

std::vector<double> WavepacketState::density() const {
  std::vector<double> rho(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
  return rho;
}

double WavepacketState::norm() const {
  double sum = 0.0;
  for (const auto& z : psi) sum += std::norm(z);
  return sum * grid.dx();
}

WavepacketState init_gaussian(const Grid& grid, const PhysicalParams& p,
                              const GaussonState& initial) {
  grid.validate();
  if (!(initial.delta > 0.0)) throw ConfigError("init_gaussian: delta must be > 0");
  if (initial.xbar - 6.0 * initial.delta < grid.x_min ||
      initial.xbar + 6.0 * initial.delta > grid.x_max) {
    std::ostringstream os;
    os << "init_gaussian: packet support [" << initial.xbar - 6.0 * initial.delta << ", "
       << initial.xbar + 6.0 * initial.delta << "] exceeds the domain [" << grid.x_min << ", "
       << grid.x_max << "]; use a larger domain";
    throw ConfigError(os.str());
  }
  const double d2 = initial.delta * initial.delta;
  const double amp = std::pow(2.0 * std::numbers::pi * d2, -0.25);
  const double curvature = 0.5 * p.mass * (initial.delta_dot / initial.delta - p.kappa);
  const double slope = p.mass * initial.xbar_dot;

  WavepacketState s;
  s.grid = grid;
  s.t = initial.t;
  s.psi.resize(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    const double dx = grid.x(i) - initial.xbar;
    const double phase = (curvature * dx * dx + slope * dx) / p.hbar;
    s.psi[i] = amp * std::exp(-dx * dx / (4.0 * d2)) * std::polar(1.0, phase);
  }
  return s;
}

double weighted_mean(std::span<const double> rho, std::span<const double> f) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    num += rho[i] * f[i];
    den += rho[i];
  }
  return num / den;
}

std::vector<double> compute_wc(const WavepacketState& state, double kappa) {
  const auto rho = state.density();
  std::vector<double> ln_rho(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    ln_rho[i] = std::log(std::max(rho[i], kDensityFloor));
  }
  const double mean = weighted_mean(rho, ln_rho);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    ln_rho[i] = -kappa * (ln_rho[i] - mean);
  }
  return ln_rho;
}

std::vector<double> compute_wf(const WavepacketState& state, double nu, double hbar) {
  const std::size_t n = state.psi.size();
  if (nu == 0.0) return std::vector<double>(n, 0.0);
  const auto rho = state.density();
  auto s = unwrap_phase(state, hbar);
  const double mean = weighted_mean(rho, s);
  for (auto& v : s) v = -(nu / hbar) * (v - mean);
  return s;
}

std::vector<double> unwrap_phase(const WavepacketState& state, double hbar) {
  const std::size_t n = state.psi.size();
  const auto rho = state.density();
  const auto peak_it = std::max_element(rho.begin(), rho.end());
  const auto peak = static_cast<std::size_t>(peak_it - rho.begin());
  const double peak_rho = *peak_it;

  std::size_t lo = peak;
  while (lo > 0 && rho[lo - 1] > kDensityFloor) --lo;
  std::size_t hi = peak;
  while (hi + 1 < n && rho[hi + 1] > kDensityFloor) ++hi;

  const double lobe_threshold = 1e-8 * peak_rho;
  for (std::size_t i = 0; i < n; ++i) {
    if ((i < lo || i > hi) && rho[i] > lobe_threshold) {
      throw UnwrapError("unwrap_phase: density is not a single contiguous packet");
    }
  }

  constexpr double max_increment = 0.9 * std::numbers::pi;
  std::vector<double> theta(n);
  theta[peak] = std::arg(state.psi[peak]);
  auto increment = [&](std::size_t from, std::size_t to) {
    const double d = std::arg(state.psi[to] * std::conj(state.psi[from]));
    if (std::abs(d) > max_increment) {
      std::ostringstream os;
      os << "unwrap_phase: phase jump " << d << " between nodes " << from << " and " << to
         << " is unresolved; refine the grid";
      throw UnwrapError(os.str());
    }
    return d;
  };
  for (std::size_t i = peak + 1; i <= hi; ++i) theta[i] = theta[i - 1] + increment(i - 1, i);
  for (std::size_t i = peak; i > lo; --i) theta[i - 1] = theta[i] + increment(i, i - 1);
  for (std::size_t i = 0; i < lo; ++i) theta[i] = theta[lo];
  for (std::size_t i = hi + 1; i < n; ++i) theta[i] = theta[hi];

  for (auto& v : theta) v *= hbar;
  return theta;
}

namespace {

// Weighted least-squares quadratic a + b u + c u^2 through (u_i, f_i).
std::array<double, 3> fit_quadratic(std::span<const double> u, std::span<const double> f,
                                    std::span<const double> w) {
  double m[3][4] = {};
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p[3] = {1.0, u[i], u[i] * u[i]};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += w[i] * p[r] * p[c];
      m[r][3] += w[i] * p[r] * f[i];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    std::swap(m[col], m[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f_ = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f_ * m[col][c];
    }
  }
  return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

}  // namespace

void close_tails(WavepacketState& state) {
  const std::size_t n = state.psi.size();
  const auto rho = state.density();
  const auto peak = static_cast<std::size_t>(std::max_element(rho.begin(), rho.end()) - rho.begin());
  const double peak_rho = rho[peak];
  const double fit_floor = kTailFitThreshold * peak_rho;

  std::size_t lo = peak;
  while (lo > 0 && rho[lo - 1] > fit_floor) --lo;
  std::size_t hi = peak;
  while (hi + 1 < n && rho[hi + 1] > fit_floor) ++hi;
  if (hi - lo < 4) throw NumericalError("close_tails: packet spans fewer than 5 nodes; refine the grid");

  const std::size_t m = hi - lo + 1;
  const double xp = state.grid.x(peak);
  std::vector<double> u(m), ln_rho(m), theta(m), w(m);
  for (std::size_t j = 0; j < m; ++j) {
    u[j] = state.grid.x(lo + j) - xp;
    ln_rho[j] = std::log(rho[lo + j]);
    w[j] = rho[lo + j] / peak_rho;
  }
  theta[peak - lo] = std::arg(state.psi[peak]);
  for (std::size_t i = peak + 1; i <= hi; ++i) {
    theta[i - lo] = theta[i - 1 - lo] + std::arg(state.psi[i] * std::conj(state.psi[i - 1]));
  }
  for (std::size_t i = peak; i > lo; --i) {
    theta[i - 1 - lo] = theta[i - lo] + std::arg(state.psi[i - 1] * std::conj(state.psi[i]));
  }
  const auto a = fit_quadratic(u, ln_rho, w);
  const auto b = fit_quadratic(u, theta, w);
  if (!(a[2] < 0.0)) {
    throw NumericalError("close_tails: log-density is not concave; the packet is not Gaussian-like");
  }
  auto quad = [](const std::array<double, 3>& c, double v) { return c[0] + v * (c[1] + v * c[2]); };

  // blend on the fitted log-density: keep psi above the band, fit below it
  const double l_peak = quad(a, -a[1] / (2.0 * a[2]));
  const double top = std::log(kTailBlendUpper);
  const double bottom = std::log(kTailBlendLower);
  const double half_turn = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = state.grid.x(i) - xp;
    const double l = quad(a, ui);
    const double r = l - l_peak;
    if (r >= top) continue;
    const double th = quad(b, ui);
    const cplx fitted = std::polar(std::exp(0.5 * l), th);
    if (r <= bottom) {
      state.psi[i] = fitted;
    } else {
      const double keep = 0.5 - 0.5 * std::cos(half_turn * (r - bottom) / (top - bottom));
      state.psi[i] = keep * state.psi[i] + (1.0 - keep) * fitted;
    }
  }
}

void check_boundary(const WavepacketState& state) {
  const double left = std::norm(state.psi.front());
  const double right = std::norm(state.psi.back());
  if (left >= kBoundaryDensityLimit || right >= kBoundaryDensityLimit) {
    std::ostringstream os;
    os << "packet reached the periodic boundary at t = " << state.t << " (rho_left = " << left
       << ", rho_right = " << right << "); enlarge the domain";
    throw BoundaryError(os.str());
  }
}

Propagator::Propagator(const Grid& grid, const PhysicalParams& p)
    : grid_(grid), params_(p), fft_(grid.n_points) {
  grid_.validate();
  params_.validate();
  const auto k = wavenumbers(grid_.n_points, grid_.dx());
  const double coeff = params_.hbar / (2.0 * params_.mass) * grid_.dt;
  kinetic_phase_.resize(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    kinetic_phase_[i] = std::polar(1.0, -coeff * k[i] * k[i]);
  }
  scratch_.resize(grid_.n_points);
}

void Propagator::nonlinear_half_step(WavepacketState& state) const {
  const double h = 0.5 * grid_.dt;
  const std::size_t n = state.psi.size();
  const auto rho = state.density();

  // S itself is untouched by the amplitude flow, but <S> is rho-weighted
  std::vector<double> s;
  if (params_.nu != 0.0) s = unwrap_phase(state, params_.hbar);

  if (params_.kappa != 0.0) {
    const double shrink = std::expm1(-2.0 * params_.kappa * h);  // e^{-2 kappa h} - 1
    std::vector<double> gain(n);
    double before = 0.0;
    double after = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gain[i] = std::exp(0.5 * shrink * std::log(std::max(rho[i], kDensityFloor)));
      before += rho[i];
      after += rho[i] * gain[i] * gain[i];
    }
    const double renorm = std::sqrt(before / after);
    for (std::size_t i = 0; i < n; ++i) state.psi[i] *= gain[i] * renorm;
  }

  if (!s.empty()) {
    // mean over the sub-step, trapezoid in time
    double mean_s = weighted_mean(rho, s);
    if (params_.kappa != 0.0) mean_s = 0.5 * (mean_s + weighted_mean(state.density(), s));
    const double factor = std::expm1(-params_.nu * h) / params_.hbar;
    for (std::size_t i = 0; i < n; ++i) state.psi[i] *= std::polar(1.0, factor * (s[i] - mean_s));
  }
}

void Propagator::step(WavepacketState& state) {
  if (state.psi.size() != grid_.n_points) {
    throw ConfigError("Propagator::step: state does not match the propagator grid");
  }
  const double norm_before = state.norm();

  nonlinear_half_step(state);
  fft_.forward(state.psi, scratch_);
  for (std::size_t i = 0; i < scratch_.size(); ++i) scratch_[i] *= kinetic_phase_[i];
  fft_.inverse(scratch_, state.psi);
  const bool nonlinear = params_.kappa != 0.0 || params_.nu != 0.0;
  if (nonlinear) close_tails(state);
  nonlinear_half_step(state);
  if (nonlinear) close_tails(state);
  state.t += grid_.dt;

  const double norm_after = state.norm();
  if (!std::isfinite(norm_after) ||
      std::abs(norm_after - norm_before) > kStepNormTolerance * norm_before) {
    std::ostringstream os;
    os << "norm changed from " << norm_before << " to " << norm_after << " in one step at t = "
       << state.t << "; reduce dt";
    throw InstabilityError(os.str());
  }
  check_boundary(state);
}

WavepacketState step(const WavepacketState& state, const PhysicalParams& p) {
  Propagator prop(state.grid, p);
  WavepacketState next = state;
  prop.step(next);
  return next;
}

std::vector<WavepacketState> evolve(const WavepacketState& state, const PhysicalParams& p,
                                    double t_end, std::span<const double> snapshot_times) {
  const double dt = state.grid.dt;
  const double t0 = state.t;
  if (t_end < t0) throw ConfigError("evolve: t_end precedes the initial time");

  auto to_index = [&](double t) -> long {
    const double steps = (t - t0) / dt;
    const long k = std::lround(steps);
    if (std::abs(steps - static_cast<double>(k)) > 1e-6) {
      std::ostringstream os;
      os << "evolve: time " << t << " is not a multiple of dt = " << dt << " from t0";
      throw ConfigError(os.str());
    }
    return k;
  };

  const long total = to_index(t_end);
  std::vector<long> marks{0, total};
  for (double t : snapshot_times) {
    if (t < t0 - 1e-12 || t > t_end + 1e-12) {
      throw ConfigError("evolve: snapshot time outside [t0, t_end]");
    }
    marks.push_back(to_index(t));
  }
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  std::vector<WavepacketState> out;
  out.reserve(marks.size());
  WavepacketState current = state;
  out.push_back(current);
  if (total == 0) return out;

  Propagator prop(state.grid, p);
  std::size_t next_mark = 1;
  for (long k = 1; k <= total; ++k) {
    prop.step(current);
    current.t = t0 + static_cast<double>(k) * dt;
    if (next_mark < marks.size() && marks[next_mark] == k) {
      out.push_back(current);
      ++next_mark;
    }
  }
  return out;
}

}  // namespace gausson

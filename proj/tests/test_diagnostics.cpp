#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "gausson/analytic.hpp"
#include "gausson/bohmian.hpp"
#include "gausson/diagnostics.hpp"
#include "gausson/errors.hpp"
#include "gausson/pde.hpp"

using namespace gausson;

namespace {

PhysicalParams scaled(double kappa, double nu, double v0 = 0.0) {
  DimensionlessParams d;
  d.kappa_t = kappa;
  d.nu_t = nu;
  d.v0_t = v0;
  return d.as_physical();
}

PhysicalParams stationary(double nu) {
  DimensionlessParams d;
  d.nu_t = nu;
  d.kappa_t = gausson_kappa(d.as_physical());
  return d.as_physical();
}

WavepacketState start(const PhysicalParams& p, const Grid& g = {}) {
  return init_gaussian(g, p, initial_gausson_state(p));
}

std::vector<double> every(double step, double t_end) {
  std::vector<double> t;
  const auto n = static_cast<int>(std::lround(t_end / step));
  for (int k = 1; k < n; ++k) t.push_back(k * step);
  return t;
}

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n = 4000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// residual of one free step taken at t = 0.5, on n points with step dt;
// at t = 0 rho(t) is even and the leading error term drops out
double free_residual(std::size_t n, double dt) {
  const auto p = scaled(0.0, 0.0);
  Grid g;
  g.n_points = n;
  g.dt = dt;
  const auto a = evolve(start(p, g), p, 0.5, {}).back();
  const auto b = step(a, p);
  return continuity_residual(a, b, p).norm;
}

}  // namespace

TEST_CASE("parse_observable") {
  CHECK(parse_observable("position") == Observable::position);
  CHECK(parse_observable("momentum") == Observable::momentum);
  CHECK(parse_observable("kinetic_energy") == Observable::kinetic_energy);
  CHECK(parse_observable("ln_rho") == Observable::ln_rho);
  CHECK(parse_observable("phase_S") == Observable::phase_S);
  CHECK_THROWS_AS(parse_observable("energy"), ConfigError);
  CHECK_THROWS_AS(parse_observable(""), ConfigError);
}

TEST_CASE("expectation") {
  SUBCASE("centred real Gaussian") {
    const auto p = scaled(0.0, 0.0);
    const auto s = start(p);
    CHECK(std::abs(expectation(s, Observable::position, p)) <= 1e-10);
    CHECK(std::abs(expectation(s, Observable::momentum, p)) <= 1e-12);
    CHECK(std::abs(expectation(s, Observable::phase_S, p)) <= 1e-12);
    // Gaussian integral: -1/2 ln(2 pi delta^2) - 1/2
    CHECK(expectation(s, Observable::ln_rho, p) ==
          doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi) - 0.5).epsilon(1e-10));
  }
  SUBCASE("kinetic energy against quadrature") {
    const auto p = scaled(0.0, 0.0);
    // psi' for psi = (2 pi)^{-1/4} e^{-x^2/4}; T = hbar^2/(2m) int |psi'|^2
    const double c = std::pow(2.0 * std::numbers::pi, -0.25);
    const double oracle =
        p.hbar * p.hbar / (2.0 * p.mass) *
        simpson([&](double x) { return std::pow(c * 0.5 * x * std::exp(-x * x / 4.0), 2); },
                -20.0, 20.0);
    CHECK(oracle == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(expectation(start(p), Observable::kinetic_energy, p) ==
          doctest::Approx(oracle).epsilon(1e-10));
  }
  SUBCASE("boosted packet") {
    auto p = scaled(0.0, 0.0, 1.7);
    p.x0 = 0.7;
    const auto s = start(p);
    CHECK(expectation(s, Observable::position, p) == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(expectation(s, Observable::momentum, p) == doctest::Approx(0.85).epsilon(1e-10));
    CHECK(expectation(s, Observable::kinetic_energy, p) ==
          doctest::Approx(0.25 + 0.85 * 0.85).epsilon(1e-10));
  }
  SUBCASE("stationary Gausson carries the phase curvature energy") {
    // T = hbar^2/(8 m delta^2) + (m/2) kappa^2 delta^2 = 0.25 + 0.25
    const auto p = stationary(0.0);
    CHECK(expectation(start(p), Observable::kinetic_energy, p) ==
          doctest::Approx(0.5).epsilon(1e-10));
    CHECK(std::abs(expectation(start(p), Observable::momentum, p)) <= 1e-12);
  }
}

TEST_CASE("measured_width and kurtosis") {
  const auto p = scaled(0.0, 0.0);
  const auto s = start(p);
  CHECK(std::abs(measured_width(s) - 1.0) <= 1e-6);
  CHECK(std::abs(excess_kurtosis(s)) <= 1e-10);

  SUBCASE("fitted width in physical units") {
    PhysicalParams q;
    q.mass = 1.0;
    q.hbar = 1.0;
    q.delta0 = 1.3;
    Grid g;
    g.x_min = -15.0;
    g.x_max = 15.0;
    const auto w = start(q, g);
    CHECK(std::abs(measured_width(w) - 1.3) <= 1e-6);
  }
  SUBCASE("free packet at t = 1") {
    const auto run = evolve(s, p, 1.0, {});
    CHECK(std::abs(measured_width(run.back()) - std::sqrt(2.0)) <= 1e-4);
  }
  SUBCASE("Gausson at t = 3") {
    const auto g = stationary(0.0);
    const auto run = evolve(start(g), g, 3.0, {});
    CHECK(std::abs(measured_width(run.back()) - 1.0) <= 1e-3);
  }
  SUBCASE("non-Gaussian profile") {
    // two separated lobes: variance 1 + 4, kurtosis of the mixture
    auto w = s;
    for (std::size_t i = 0; i < w.psi.size(); ++i) {
      const double x = w.grid.x(i);
      w.psi[i] = std::sqrt(0.5 * (std::exp(-(x - 2) * (x - 2) / 2) + std::exp(-(x + 2) * (x + 2) / 2)) /
                           std::sqrt(2.0 * std::numbers::pi));
    }
    CHECK(measured_width(w) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-10));
    // mu4 = 3 + 6*4 + 16 = 43
    CHECK(excess_kurtosis(w) == doctest::Approx(43.0 / 25.0 - 3.0).epsilon(1e-10));
  }
}

TEST_CASE("continuity_residual") {
  const double coarse = free_residual(512, 1e-3);
  const double fine = free_residual(1024, 5e-4);
  CHECK(coarse <= 1e-5);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.1));

  SUBCASE("stationary Gausson balances flux against the sink") {
    const auto p = stationary(0.0);
    const auto a = evolve(start(p), p, 0.5, {}).back();
    const auto b = step(a, p);
    const auto r = continuity_residual(a, b, p);
    CHECK(r.norm <= 1e-5);
    CHECK(r.norm <= 10.0 * coarse);
    CHECK(r.norm >= 0.01 * coarse);

    // the same residual with the sink at strength kappa instead of 2 kappa
    const auto ra = a.density();
    const auto rb = b.density();
    std::vector<double> la(ra.size()), lb(rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      la[i] = std::log(std::max(ra[i], kDensityFloor));
      lb[i] = std::log(std::max(rb[i], kDensityFloor));
    }
    const double ma = weighted_mean(ra, la);
    const double mb = weighted_mean(rb, lb);
    double acc = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
      const double half_sink = 0.5 * p.kappa * ((la[i] - ma) * ra[i] + (lb[i] - mb) * rb[i]);
      const double lit = r.field[i] - half_sink;
      acc += 0.5 * (ra[i] + rb[i]) * lit * lit;
    }
    const double literal = std::sqrt(acc * a.grid.dx());
    CHECK(literal >= 1e3 * r.norm);
  }
  SUBCASE("bad inputs") {
    const auto p = scaled(0.0, 0.0);
    const auto a = start(p);
    CHECK_THROWS_AS(continuity_residual(a, a, p), ConfigError);
    Grid g;
    g.n_points = 256;
    auto b = start(p, g);
    b.t = 1.0;
    CHECK_THROWS_AS(continuity_residual(a, b, p), ConfigError);
  }
}

TEST_CASE("make_record") {
  const auto p = stationary(0.0);
  const auto a = start(p);
  const auto r0 = make_record(a, p);
  CHECK(std::abs(r0.norm - 1.0) <= 1e-12);
  CHECK(std::isnan(r0.continuity_residual));
  CHECK(r0.width == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r0.energy == doctest::Approx(0.5).epsilon(1e-10));
  const auto b = step(a, p);
  const auto r1 = make_record(b, p, &a);
  CHECK(std::isfinite(r1.continuity_residual));
  CHECK(r1.t == b.t);
}

TEST_CASE("log_decay_rate") {
  std::vector<double> t, y;
  for (int k = 0; k <= 40; ++k) {
    t.push_back(0.1 * k);
    y.push_back(-3.0 * std::exp(-0.37 * t.back()));
  }
  const auto r = log_decay_rate(t, y);
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(-0.37).epsilon(1e-12));
  CHECK_FALSE(log_decay_rate(std::vector<double>{0.0}, std::vector<double>{1.0}).has_value());
  y[3] = 0.0;
  CHECK_FALSE(log_decay_rate(t, y).has_value());
}

TEST_CASE("compare_runs") {
  RunSeries a;
  a.times = {0.0, 0.5, 1.0};
  a.widths = {1.0, 1.1, 1.3};
  a.mean_p = {1.0, 0.9, 0.8};

  SUBCASE("identical series") {
    const auto rep = compare_runs(a, a, 0.2);
    CHECK(rep.max_width_rel_error == 0.0);
    for (double e : rep.width_rel_error) CHECK(e == 0.0);
    CHECK_FALSE(rep.max_trajectory_error.has_value());
    CHECK(rep.expected_decay_exponent == -0.2);
    const auto j = rep.to_json();
    CHECK(j["max_width_rel_error"] == 0.0);
    CHECK(j["max_trajectory_error"].is_null());
  }
  SUBCASE("misaligned stamps") {
    RunSeries b = a;
    b.times[1] = 0.5 + 1e-6;
    CHECK_THROWS_AS(compare_runs(a, b, 0.0), AlignmentError);
    b = a;
    b.times.pop_back();
    b.widths.pop_back();
    CHECK_THROWS_AS(compare_runs(a, b, 0.0), AlignmentError);
  }
  SUBCASE("packet at rest has no exponent") {
    RunSeries b = a;
    b.mean_p = {0.0, 0.0, 0.0};
    CHECK_FALSE(compare_runs(b, b, 0.2).momentum_decay_exponent.has_value());
  }
  SUBCASE("friction decay of <p> and trajectories") {
    const auto p = scaled(0.0, 0.2, 1.0);
    const auto g = recommended_grid(p, 2.0);
    const auto run = evolve(start(p, g), p, 2.0, every(0.05, 2.0));
    RunSeries pde, ana;
    for (const auto& s : run) {
      pde.times.push_back(s.t);
      pde.widths.push_back(measured_width(s));
      pde.mean_p.push_back(expectation(s, Observable::momentum, p));
    }
    ana.times = pde.times;
    const auto w = integrate_width(p, initial_gausson_state(p), ana.times);
    ana.widths = w.deltas;
    const std::vector<double> x0{-1.0, 0.0, 1.0};
    pde.trajectories = advance_ensemble(x0, run, p);
    ana.trajectories = bohmian_trajectories_analytic(p, x0, w, ana.times);

    const auto rep = compare_runs(pde, ana, p.nu);
    REQUIRE(rep.momentum_decay_exponent.has_value());
    CHECK(std::abs(*rep.momentum_decay_exponent + 0.2) <= 0.002);
    CHECK(rep.max_width_rel_error <= 1e-3);
    REQUIRE(rep.max_trajectory_error.has_value());
    CHECK(*rep.max_trajectory_error <= 1e-3);
  }
}

TEST_CASE("kinetic energy under friction is non-increasing") {
  const auto p = scaled(0.0, 0.5, 1.0);
  const auto g = recommended_grid(p, 2.0);
  const auto run = evolve(start(p, g), p, 2.0, every(0.02, 2.0));
  double prev = expectation(run.front(), Observable::kinetic_energy, p);
  for (std::size_t k = 1; k < run.size(); ++k) {
    const double e = expectation(run[k], Observable::kinetic_energy, p);
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
  CHECK(prev < expectation(run.front(), Observable::kinetic_energy, p));
}

TEST_CASE("norm drift") {
  for (const auto& p : {stationary(0.0), stationary(1.5), scaled(0.5, 0.2, 0.4)}) {
    const auto g = recommended_grid(p, 3.0);
    const auto run = evolve(start(p, g), p, 3.0, {});
    CHECK(std::abs(run.back().norm() - 1.0) / 3.0 <= 1e-8);
  }
}

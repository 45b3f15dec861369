#include <doctest.h>

#include <cmath>
#include <vector>

#include "gausson/errors.hpp"
#include "gausson/model.hpp"

using namespace gausson;

namespace {

PhysicalParams natural(double nu = 0.0, double kappa = 0.0) {
  PhysicalParams p;
  p.mass = 1.0;
  p.hbar = 1.0;
  p.nu = nu;
  p.kappa = kappa;
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("validate rejects bad fields") {
  PhysicalParams p = natural();
  CHECK_NOTHROW(p.validate());
  p.mass = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = natural();
  p.hbar = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = natural();
  p.delta0 = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = natural(-0.1);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = natural(0.0, -1.0);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = natural();
  p.x0 = std::nan("");
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("scales") {
  SUBCASE("natural units give time scale 2") {
    const auto s = make_scales(natural());
    CHECK(s.length == 1.0);
    CHECK(s.time == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("electron time scale") {
    // 2 m delta0^2 / hbar evaluated by hand with the CODATA values
    const double expected = 2.0 * 9.1093837015e-31 * 2.8e-15 * 2.8e-15 / 1.054571817e-34;
    const auto s = make_scales(electron_preset());
    CHECK(rel(s.time, expected) < 1e-14);
    CHECK(s.time == doctest::Approx(1.354e-25).epsilon(1e-3));
  }
  SUBCASE("time * hbar = 2 m L^2") {
    PhysicalParams p = natural();
    p.mass = 3.7;
    p.hbar = 0.21;
    p.delta0 = 1.9;
    const auto s = make_scales(p);
    CHECK(rel(s.time * p.hbar, 2.0 * p.mass * s.length * s.length) < 1e-14);
    CHECK(s.velocity > 0.0);
  }
}

TEST_CASE("nondimensionalize") {
  PhysicalParams p = natural(0.3, 0.8);
  p.mass = 2.5;
  p.hbar = 0.7;
  p.delta0 = 1.3;
  p.x0 = 0.4;
  p.v0 = -0.2;
  p.deltadot0 = 0.05;
  const auto [d, s] = nondimensionalize(p);
  CHECK(rel(d.kappa_t, p.kappa * s.time) < 1e-14);
  CHECK(rel(d.nu_t, p.nu * s.time) < 1e-14);
  CHECK(d.delta0_t == 1.0);
  // hbar/(2 m delta0^2) in scaled time is 1
  CHECK(rel(spreading_rate(p) * s.time, 1.0) < 1e-14);

  SUBCASE("round trip") {
    const auto back = redimensionalize(d, s, p.hbar);
    CHECK(rel(back.mass, p.mass) < 1e-12);
    CHECK(rel(back.delta0, p.delta0) < 1e-12);
    CHECK(rel(back.nu, p.nu) < 1e-12);
    CHECK(rel(back.kappa, p.kappa) < 1e-12);
    CHECK(rel(back.x0, p.x0) < 1e-12);
    CHECK(rel(back.v0, p.v0) < 1e-12);
    CHECK(rel(back.deltadot0, p.deltadot0) < 1e-12);
  }
  SUBCASE("round trip electron") {
    PhysicalParams e = electron_preset();
    e.nu = 1e23;
    e.v0 = 1e5;
    const auto [de, se] = nondimensionalize(e);
    const auto back = redimensionalize(de, se, e.hbar);
    CHECK(rel(back.mass, e.mass) < 1e-12);
    CHECK(rel(back.kappa, e.kappa) < 1e-12);
    CHECK(rel(back.nu, e.nu) < 1e-12);
    CHECK(rel(back.v0, e.v0) < 1e-12);
  }
  SUBCASE("zero friction stays zero") {
    PhysicalParams q = p;
    q.nu = 0.0;
    CHECK(nondimensionalize(q).first.nu_t == 0.0);
  }
  SUBCASE("scaled params are their own scaled form") {
    const auto phys = d.as_physical();
    CHECK(phys.hbar == 1.0);
    CHECK(phys.mass == 0.5);
    const auto again = DimensionlessParams::from_physical(phys);
    CHECK(rel(again.kappa_t, d.kappa_t) < 1e-14);
    CHECK(make_scales(phys).time == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("gausson_kappa") {
  DimensionlessParams d;
  CHECK(gausson_kappa(d.as_physical()) == doctest::Approx(1.0).epsilon(1e-15));
  d.nu_t = 1.5;
  CHECK(gausson_kappa(d.as_physical()) == doctest::Approx(2.0).epsilon(1e-15));

  SUBCASE("electron is the inverse time scale") {
    const auto e = electron_preset();
    const double k = gausson_kappa(e);
    CHECK(rel(k, 1.0 / make_scales(e).time) < 1e-14);
    CHECK(k == doctest::Approx(7.39e24).epsilon(2e-3));
  }
  SUBCASE("satisfies the stationarity condition") {
    for (double nu : {0.0, 0.01, 0.3, 1.5, 7.0, 120.0}) {
      PhysicalParams p = natural(nu);
      p.delta0 = 0.7;
      p.mass = 1.9;
      const double k = gausson_kappa(p);
      const double rhs = p.hbar * p.hbar / (4.0 * p.mass * p.mass * std::pow(p.delta0, 4));
      CHECK(rel(k * k - k * nu, rhs) < 1e-12);
    }
  }
  SUBCASE("monotone in nu") {
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
      DimensionlessParams q;
      q.nu_t = 0.05 * i;
      const double k = gausson_kappa(q.as_physical());
      CHECK(k > prev);
      prev = k;
    }
  }
  SUBCASE("nu = 0 identity") {
    PhysicalParams p = natural();
    p.mass = 0.3;
    p.delta0 = 2.2;
    CHECK(gausson_kappa(p) * make_scales(p).time == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("bohmian_time_constant") {
  CHECK(bohmian_time_constant(1.0) == 1.0);
  CHECK(bohmian_time_constant(2.0) == 0.5);
  CHECK_THROWS_AS(bohmian_time_constant(0.0), DomainError);
  CHECK_THROWS_AS(bohmian_time_constant(-1.0), DomainError);
  const auto e = electron_preset();
  CHECK(bohmian_time_constant(gausson_kappa(e)) == doctest::Approx(1.3544e-25).epsilon(1e-4));
}

TEST_CASE("bohmian_time_constant_approx") {
  DimensionlessParams d;
  CHECK(bohmian_time_constant_approx(d.as_physical()) == 1.0);

  d.nu_t = 0.1;
  const double approx = bohmian_time_constant_approx(d.as_physical());
  const double exact = 1.0 / (0.05 + std::sqrt(1.0025));
  CHECK(approx == doctest::Approx(0.95).epsilon(1e-14));
  CHECK(exact == doctest::Approx(0.951249).epsilon(1e-6));
  CHECK(rel(1.0 / gausson_kappa(d.as_physical()), exact) < 1e-14);

  d.nu_t = 0.5;
  CHECK(bohmian_time_constant_approx(d.as_physical()) == doctest::Approx(0.75));
  CHECK(1.0 / gausson_kappa(d.as_physical()) == doctest::Approx(0.78078).epsilon(1e-5));

  SUBCASE("small-friction condition") {
    d.nu_t = 2.0;  // hbar/(m delta0^2) = 2 in scaled units
    CHECK_THROWS_AS(bohmian_time_constant_approx(d.as_physical()), DomainError);
    d.nu_t = 1.99;
    CHECK_NOTHROW(bohmian_time_constant_approx(d.as_physical()));
  }
  SUBCASE("gap is second order") {
    // |approx - exact| / nu^2 tends to a constant as nu -> 0
    std::vector<double> c;
    for (double nu : {0.001, 0.01, 0.05, 0.1}) {
      DimensionlessParams q;
      q.nu_t = nu;
      const double gap = std::abs(bohmian_time_constant_approx(q.as_physical()) -
                                  1.0 / gausson_kappa(q.as_physical()));
      c.push_back(gap / (nu * nu));
    }
    for (double v : c) CHECK(v == doctest::Approx(c.front()).epsilon(0.1));
    CHECK(c.front() == doctest::Approx(0.125).epsilon(0.01));
  }
}

TEST_CASE("electron preset") {
  const auto e = electron_preset();
  CHECK(e.mass == codata::electron_mass);
  CHECK(e.hbar == codata::hbar);
  CHECK(e.delta0 == kElectronWidth);
  CHECK(e.nu == 0.0);
  CHECK(rel(e.kappa, gausson_kappa(e)) < 1e-15);
}

#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mfcl/pde.hpp"
#include "mfcl/sde.hpp"
#include "mfcl/transport.hpp"

using namespace mfcl;

namespace {

ParticleEnsemble mapped(const std::vector<double>& labels, double eps, const std::function<double(double)>& map) {
  ParticleEnsemble e(labels, eps);
  e.record(0.0, labels);
  std::vector<double> x(labels.size());
  for (std::size_t p = 0; p < x.size(); ++p) x[p] = map(labels[p]);
  e.record(1.0, x);
  return e;
}

SpaceTimeField frozen(const Grid1D& g, double c, double T) {
  SpaceTimeField f(g);
  const std::vector<double> v(g.size(), c);
  f.append(0.0, v);
  f.append(T, v);
  return f;
}

}  // namespace

TEST_CASE("dual cells and particle masses") {
  const std::vector<double> labels{-1.0, 0.0, 1.0};
  CHECK(dual_widths(labels, 1.0) == std::vector<double>{0.5, 1.0, 0.5});
  CHECK(dual_widths(std::vector<double>{0.0}, 3.0) == std::vector<double>{6.0});
  const auto m = particle_masses(InitialData::compressive(), labels, 1.0);
  CHECK(m == std::vector<double>{0.5, 0.0, -0.5});
  CHECK_THROWS_AS(dual_widths(std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST_CASE("identity flow reproduces the initial data") {
  const auto labels = seed_particles(6.0, 100);
  const auto u_in = InitialData::compressive();
  const auto s = pushforward_density(u_in, mapped(labels, 1.0, [](double x) { return x; }), 1);
  REQUIRE(s.carrier_values.size() == labels.size());
  for (std::size_t p = 0; p < labels.size(); ++p) CHECK(s.carrier_values[p] == doctest::Approx(u_in(labels[p])));
  CHECK(s.t == 1.0);
}

TEST_CASE("dilation halves the density and keeps the mass") {
  const auto labels = seed_particles(3.0, 61);
  const auto u_in = InitialData::constant(1.0);
  const auto s = pushforward_density(u_in, mapped(labels, 1.0, [](double x) { return 2.0 * x; }), 1);
  for (double v : s.carrier_values) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.total_mass == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(mass_defect(u_in, s) <= 1e-12);
}

TEST_CASE("coincident particles: error for eps > 0, merge for eps = 0") {
  const std::vector<double> labels{-1.0, -0.5, 0.0, 0.5, 1.0};
  const auto squash = [](double x) { return x < 0.0 ? x : std::max(0.0, x - 0.5); };
  const auto u_in = InitialData::constant(1.0);
  CHECK_THROWS_AS(pushforward_density(u_in, mapped(labels, 0.5, squash), 1), MonotonicityError);
  const auto s = pushforward_density(u_in, mapped(labels, 0.0, squash), 1);
  CHECK(s.carrier_positions == std::vector<double>{-1.0, -0.5, 0.0, 0.5});
  CHECK(s.carrier_multiplicity == std::vector<std::size_t>{1, 1, 2, 1});
  CHECK(s.carrier_masses[2] == doctest::Approx(1.0));
  CHECK(s.total_mass == doctest::Approx(2.0));
}

TEST_CASE("viscous pushforward conserves mass and satisfies the weak identity") {
  const Grid1D g(6.0, 301);
  const double T = 1.0;
  const auto a_fn = [](double v) { return drift_a(burgers_flux(), v); };
  for (const auto& u_in : {InitialData::compressive(), InitialData::expansive()}) {
    const double norm = u_in.integral(-6.0, 6.0) == 0.0 ? 12.0 : std::abs(u_in.integral(-6.0, 6.0));
    for (double eps : {1.0 / 3.0, 1.0}) {
      const auto m = solve_viscous(g, burgers_flux(), eps, u_in, T);
      const auto ens = evolve_flow(m, a_fn, seed_particles(6.0, 1001), eps, make_brownian(4, 1, 1000, 1e-3), {100});
      for (std::size_t j = 0; j < ens.n_times(); ++j) {
        const auto s = pushforward_density(u_in, ens, j, &g);
        CHECK(mass_defect(u_in, s) <= 1e-8 * norm);
        for (const auto& th : default_test_functions()) {
          const double lhs = carrier_weak_integral(s, th);
          const double rhs = pushforward_weak_integral(s, th);
          CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
        }
        CHECK(s.grid_resampled.size() == g.size());
      }
    }
  }
}

TEST_CASE("mass piles up with opposite signs on both sides of the shock") {
  const Grid1D g(6.0, 301);
  const double eps = 1.0 / 3.0;
  const auto u_in = InitialData::compressive();
  const auto m = solve_viscous(g, burgers_flux(), eps, u_in, 1.0);
  const auto a_fn = [](double v) { return drift_a(burgers_flux(), v); };
  const auto ens = evolve_flow(m, a_fn, seed_particles(6.0, 1001), eps, make_brownian(1, 0, 1000, 1e-3), {1000});
  const auto s = pushforward_density(u_in, ens, ens.n_times() - 1);
  double lo = 0.0, hi = 0.0;
  for (std::size_t c = 0; c < s.carrier_positions.size(); ++c) {
    lo = std::min(lo, s.carrier_values[c]);
    hi = std::max(hi, s.carrier_values[c]);
  }
  CHECK(hi > 1.1);
  CHECK(lo < -1.1);
  // the extremes sit next to each other, the positive one on the left
  std::size_t i_hi = 0, i_lo = 0;
  for (std::size_t c = 0; c < s.carrier_values.size(); ++c) {
    if (s.carrier_values[c] == hi) i_hi = c;
    if (s.carrier_values[c] == lo) i_lo = c;
  }
  CHECK(i_hi < i_lo);
  CHECK(s.carrier_positions[i_lo] - s.carrier_positions[i_hi] < 1.0);
}

TEST_CASE("resampling onto the grid") {
  const Grid1D g(1.0, 5);
  DensitySample s;
  s.carrier_positions = g.nodes();
  s.carrier_values = {1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(resample_to_grid(s, g) == s.carrier_values);

  DensitySample two;
  two.carrier_positions = {-0.5, 0.5};
  two.carrier_values = {2.0, 4.0};
  const auto v = resample_to_grid(two, g);
  CHECK(v[2] == doctest::Approx(3.0));
  CHECK(v[0] == 2.0);
  CHECK(v[4] == 4.0);
}

TEST_CASE("resampled mass matches the carrier mass") {
  const Grid1D g(6.0, 301);
  const auto u_in = InitialData::expansive();
  const auto m = solve_viscous(g, burgers_flux(), 1.0, u_in, 1.0);
  // labels on [-4, 4] so that the carrier hull stays inside the grid
  const auto ens = evolve_flow(m, [](double v) { return 0.5 * v; }, seed_particles(4.0, 1001), 1.0,
                               make_brownian(8, 0, 1000, 1e-3), {1000});
  const auto s = pushforward_density(u_in, ens, ens.n_times() - 1, &g);
  REQUIRE(s.carrier_positions.front() > -6.0);
  REQUIRE(s.carrier_positions.back() < 6.0);
  std::vector<double> inside(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.node(i) >= s.carrier_positions.front() && g.node(i) <= s.carrier_positions.back())
      inside[i] = s.grid_resampled[i];
  const double carriers = trapezoid(s.carrier_positions, s.carrier_values);
  CHECK(std::abs(trapezoid(g, inside) - carriers) <= 2.0 * g.dx() * u_in.sup_norm());
}

TEST_CASE("windowed functional adds the far states") {
  const auto labels = seed_particles(3.0, 31);
  const auto u_in = InitialData::constant(1.0);
  const auto s = pushforward_density(u_in, mapped(labels, 1.0, [](double x) { return x + 0.4; }), 1);
  const TestFunction th = test_function("gauss");
  // every mass moved by 0.4; the window [-3, 3] is refilled by the left state
  const double exact = th.integral(-3.0, 3.0);
  CHECK(windowed_weak_integral(s, th) == doctest::Approx(exact).epsilon(2e-3));
}

TEST_CASE("composition solution") {
  const Grid1D g(6.0, 121);
  const auto labels = seed_particles(6.0, 481);
  const auto u_in = InitialData::analytic([](double x) { return std::tanh(x); }, 1.0);

  SUBCASE("identity") {
    const auto e = evolve_flow(frozen(g, 0.0, 1.0), {}, labels, 0.0, make_brownian(1, 0, 50, 0.02));
    const auto v = compose_solution(u_in, e, e.n_times() - 1, g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(v[i] == doctest::Approx(std::tanh(g.node(i))).epsilon(1e-12));
  }
  SUBCASE("translation") {
    const double c = 0.5;
    const auto e = evolve_flow(frozen(g, c, 1.0), {}, labels, 0.0, make_brownian(1, 0, 50, 0.02));
    const auto v = compose_solution(u_in, e, e.n_times() - 1, g);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.node(i) > -6.0 + c) CHECK(v[i] == doctest::Approx(std::tanh(g.node(i) - c)).epsilon(1e-10));
  }
}

TEST_CASE("composition of expansive data never forms a fan") {
  const Grid1D g(6.0, 301);
  const auto u_in = InitialData::expansive();
  for (double eps : {1.0 / 3.0, 1.0}) {
    const auto m = solve_viscous(g, burgers_flux(), eps, u_in, 1.0);
    const auto e = evolve_flow(m, {}, seed_particles(6.0, 1001), eps, make_brownian(2, 0, 1000, 1e-3), {100});
    for (std::size_t j = 0; j < e.n_times(); ++j) {
      const auto v = compose_solution(u_in, e, j, g);
      std::size_t intermediate = 0;
      for (double x : v) {
        CHECK(x >= -1.0);
        CHECK(x <= 1.0);
        if (std::abs(std::abs(x) - 1.0) > 1e-12) ++intermediate;
      }
      CHECK(intermediate <= 1);
    }
  }
}

TEST_CASE("k-shifted representation") {
  const FluxModel f = burgers_flux();
  const Grid1D g(6.0, 301);
  const TestFunction th = test_function("tanh");
  const double t = 1.0;

  SUBCASE("stationary shock, k = 0 and k = 0.5") {
    const auto u_in = InitialData::compressive();
    const auto u = solve_entropy_reference(g, f, u_in, t);
    const double exact = th.integral(-6.0, 0.0) - th.integral(0.0, 6.0);
    const double r0 = representation_k(u_in, f, 0.0, u, t, th);
    const double r5 = representation_k(u_in, f, 0.5, u, t, th);
    CHECK(std::abs(r0 - exact) <= 2.0 * (g.dx() + 1e-3) * std::abs(exact));
    CHECK(std::abs(r0 - r5) <= 2.0 * (g.dx() + 1e-3) * std::abs(exact));
  }
  SUBCASE("constant data equal to k") {
    const auto u_in = InitialData::constant(0.3);
    const auto u = solve_entropy_reference(g, f, u_in, t);
    CHECK(representation_k(u_in, f, 0.3, u, t, th) == doctest::Approx(0.3 * th.integral(-6.0, 6.0)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(representation_k(InitialData::compressive(), f, 0.0,
                                   solve_entropy_reference(g, f, InitialData::compressive(), t), t, th, {1, 1e-3}),
                  std::invalid_argument);
}

TEST_CASE("density and carrier csv") {
  const Grid1D g(1.0, 3);
  DensitySample s;
  s.t = 0.5;
  s.carrier_positions = {-1.0, 1.0};
  s.carrier_values = {2.0, 4.0};
  std::ostringstream a, b;
  write_density_csv(a, std::vector<DensitySample>{s}, g);
  CHECK(a.str() == "t,x,u_eps\n0.5,-1,2\n0.5,0,3\n0.5,1,4\n");
  write_carrier_csv(b, std::vector<DensitySample>{s});
  CHECK(b.str() == "t,particle_id,position,value\n0.5,0,-1,2\n0.5,1,1,4\n");
}

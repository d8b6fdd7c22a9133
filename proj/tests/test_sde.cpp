#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <omp.h>

#include "doctest.h"
#include "mfcl/kernels.hpp"
#include "mfcl/pde.hpp"
#include "mfcl/sde.hpp"

using namespace mfcl;

namespace {

SpaceTimeField constant_field(const Grid1D& g, double c, double T) {
  SpaceTimeField f(g);
  const std::vector<double> v(g.size(), c);
  f.append(0.0, v);
  f.append(T, v);
  return f;
}

}  // namespace

TEST_CASE("brownian bundles are pure functions of (seed, sample)") {
  const auto a = make_brownian(42, 3, 4000, 1e-3);
  const auto b = make_brownian(42, 3, 4000, 1e-3);
  CHECK(a.increments == b.increments);
  const auto c = make_brownian(43, 3, 4000, 1e-3);
  CHECK(a.increments != c.increments);
  // Any single increment can be regenerated on its own.
  CHECK(a.increments[1234] == std::sqrt(1e-3) * counter_normal(42, 3, 1234));
  CHECK_THROWS_AS(make_brownian(1, 0, 0, 1e-3), std::invalid_argument);
}

TEST_CASE("distinct samples are decorrelated") {
  const std::size_t n = 4000;
  const auto a = make_brownian(1, 0, n, 1e-3);
  const auto b = make_brownian(1, 1, n, 1e-3);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sab += a.increments[j] * b.increments[j];
    saa += a.increments[j] * a.increments[j];
    sbb += b.increments[j] * b.increments[j];
  }
  CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.1);
}

TEST_CASE("increments have the normal moments") {
  const std::size_t n = 4000;
  const double dt = 1e-3;
  const auto b = make_brownian(9, 0, n, dt);
  double mean = 0.0, var = 0.0;
  for (double d : b.increments) mean += d;
  mean /= n;
  for (double d : b.increments) var += (d - mean) * (d - mean);
  var /= n - 1;
  CHECK(std::abs(mean) <= 5.0 * std::sqrt(dt / n));
  CHECK(var == doctest::Approx(dt).epsilon(0.1));

  std::vector<double> z;
  for (std::uint64_t k = 0; k < 20000; ++k) z.push_back(counter_normal(5, 7, k));
  std::size_t below = 0;
  for (double v : z) below += v < 1.0;
  CHECK(static_cast<double>(below) / z.size() == doctest::Approx(0.8413).epsilon(0.02));
}

TEST_CASE("drift interpolation") {
  const Grid1D g(1.0, 5);
  SpaceTimeField f(g);
  std::vector<double> a(5), b(5);
  for (std::size_t i = 0; i < 5; ++i) {
    a[i] = 2.0 * g.node(i);
    b[i] = 2.0 * g.node(i) + 1.0;
  }
  f.append(0.0, a);
  f.append(1.0, b);
  CHECK(interp_drift(f, g.node(3), 0.0) == a[3]);
  CHECK(interp_drift(f, g.node(3), 1.0) == b[3]);
  CHECK(interp_drift(f, 0.3, 0.0) == doctest::Approx(0.6));
  CHECK(interp_drift(f, 0.3, 0.5) == doctest::Approx(1.1));
  CHECK(interp_drift(f, 2.0, 1.0) == b[4]);
  CHECK(interp_drift(f, -7.0, 0.0) == a[0]);
  CHECK_THROWS_AS(interp_drift(f, 0.0, 1.5), std::invalid_argument);

  SpaceTimeField step(Grid1D(6.0, 13));
  step.append(0.0, InitialData::compressive().sample_on(step.grid()));
  CHECK(interp_drift(step, 7.0, 0.0) == -1.0);
}

TEST_CASE("particle seeding") {
  const auto x = seed_particles(6.0, 4001);
  CHECK(x.front() == -6.0);
  CHECK(x.back() == 6.0);
  CHECK(x[2000] == 0.0);
  CHECK(seed_particles(6.0, 1) == std::vector<double>{0.0});
}

TEST_CASE("zero drift: every particle follows x + eps W") {
  const double T = 1.0, eps = 1.0;
  const Grid1D g(6.0, 61);
  const auto b = make_brownian(3, 0, 500, T / 500);
  const auto labels = seed_particles(6.0, 41);
  const auto ens = evolve_flow(constant_field(g, 0.0, T), {}, labels, eps, b);
  double W = 0.0;
  for (std::size_t j = 0; j < b.n_steps; ++j) {
    W += b.increments[j];
    const auto x = ens.positions(j + 1);
    for (std::size_t p = 0; p < labels.size(); ++p) CHECK(x[p] - labels[p] == doctest::Approx(eps * W).epsilon(1e-9));
  }
  CHECK(ens.violations().empty());
}

TEST_CASE("constant drift at eps = 0 translates exactly") {
  const double T = 0.8, c = 0.6;
  const Grid1D g(6.0, 61);
  const auto b = make_brownian(3, 0, 400, T / 400);
  const auto labels = seed_particles(3.0, 11);
  const auto transform = [](double v) { return 0.5 * v; };
  const auto ens = evolve_flow(constant_field(g, c, T), transform, labels, 0.0, b);
  for (std::size_t j = 0; j < ens.n_times(); ++j)
    for (std::size_t p = 0; p < labels.size(); ++p)
      CHECK(ens.positions(j)[p] == doctest::Approx(labels[p] + 0.5 * c * ens.times()[j]).epsilon(1e-12));
}

TEST_CASE("eps = 0 flows ignore the bundle contents") {
  const Grid1D g(6.0, 121);
  const auto m = solve_viscous(g, burgers_flux(), 0.5, InitialData::compressive(), 1.0);
  const auto labels = seed_particles(6.0, 101);
  const auto a = evolve_flow(m, {}, labels, 0.0, make_brownian(1, 0, 200, 0.005));
  const auto b = evolve_flow(m, {}, labels, 0.0, make_brownian(2, 9, 200, 0.005));
  for (std::size_t j = 0; j < a.n_times(); ++j)
    CHECK(std::vector<double>(a.positions(j).begin(), a.positions(j).end()) ==
          std::vector<double>(b.positions(j).begin(), b.positions(j).end()));
}

TEST_CASE("common noise couples ensembles bitwise") {
  const Grid1D g(6.0, 121);
  const auto m = solve_viscous(g, burgers_flux(), 1.0, InitialData::compressive(), 1.0);
  const auto b = make_brownian(11, 4, 200, 0.005);
  const auto a_fn = [](double v) { return drift_a(burgers_flux(), v); };
  const auto labels = seed_particles(6.0, 101);
  const auto x1 = evolve_flow(m, a_fn, labels, 1.0, b);
  const auto x2 = evolve_flow(m, a_fn, labels, 1.0, b);
  const std::vector<double> sub{labels[10], labels[50], labels[90]};
  const auto x3 = evolve_flow(m, a_fn, sub, 1.0, b);
  for (std::size_t j = 0; j < x1.n_times(); ++j) {
    CHECK(std::vector<double>(x1.positions(j).begin(), x1.positions(j).end()) ==
          std::vector<double>(x2.positions(j).begin(), x2.positions(j).end()));
    CHECK(x3.positions(j)[1] == x1.positions(j)[50]);
  }
}

TEST_CASE("viscous flows stay monotone") {
  const Grid1D g(6.0, 301);
  for (const auto& u_in : {InitialData::compressive(), InitialData::expansive()}) {
    for (double eps : {1.0 / 3.0, 1.0}) {
      const auto m = solve_viscous(g, burgers_flux(), eps, u_in, 1.0);
      const auto a_fn = [](double v) { return drift_a(burgers_flux(), v); };
      for (std::uint64_t s = 0; s < 3; ++s) {
        const auto b = make_brownian(1, s, 1000, 1e-3);
        for (const auto& tr : {std::function<double(double)>(a_fn), std::function<double(double)>()}) {
          const auto ens = evolve_flow(m, tr, seed_particles(6.0, 1001), eps, b, {10});
          CHECK(ens.violations().empty());
          for (std::size_t j = 0; j < ens.n_times(); ++j) CHECK_NOTHROW(require_monotone(ens, j));
        }
      }
    }
  }
}

TEST_CASE("mean-square displacement concentrates near eps^2 T") {
  const double T = 1.0, eps = 0.7;
  const Grid1D g(6.0, 61);
  const auto field = constant_field(g, 0.0, T);
  const auto labels = seed_particles(6.0, 21);
  double msd = 0.0;
  const std::size_t n_samples = 2000;
  for (std::uint64_t s = 0; s < n_samples; ++s) {
    const auto ens = evolve_flow(field, {}, labels, eps, make_brownian(17, s, 1000, T / 1000), {1000});
    const auto x = ens.positions(ens.n_times() - 1);
    double acc = 0.0;
    for (std::size_t p = 0; p < labels.size(); ++p) acc += (x[p] - labels[p]) * (x[p] - labels[p]);
    msd += acc / labels.size();
  }
  msd /= n_samples;
  CHECK(msd == doctest::Approx(eps * eps * T).epsilon(0.1));
}

TEST_CASE("record stride keeps the end points") {
  const Grid1D g(6.0, 61);
  const auto ens = evolve_flow(constant_field(g, 0.0, 1.0), {}, seed_particles(1.0, 3), 1.0,
                               make_brownian(1, 0, 95, 1.0 / 95), {10});
  CHECK(ens.times().front() == 0.0);
  CHECK(ens.times().back() == 1.0);
  CHECK(ens.n_times() == 11);
  CHECK(ens.times()[3] == doctest::Approx(30.0 / 95));
  CHECK_THROWS_AS(evolve_flow(constant_field(g, 0.0, 2.0), {}, seed_particles(1.0, 3), 1.0,
                              make_brownian(1, 0, 95, 1.0 / 95)),
                  std::invalid_argument);
}

TEST_CASE("inverse flow") {
  const Grid1D g(6.0, 61);
  const double T = 1.0, c = 0.4;
  const auto labels = seed_particles(6.0, 121);
  SUBCASE("identity") {
    const auto ens = evolve_flow(constant_field(g, 0.0, T), {}, labels, 0.0, make_brownian(1, 0, 100, 0.01));
    for (double q : {-3.3, 0.0, 0.77, 5.2}) CHECK(invert_flow(ens, ens.n_times() - 1, q) == doctest::Approx(q));
  }
  SUBCASE("translation") {
    const auto ens = evolve_flow(constant_field(g, c, T), {}, labels, 0.0, make_brownian(1, 0, 100, 0.01));
    for (std::size_t j : {std::size_t{20}, ens.n_times() - 1})
      for (double q : {-3.3, 0.0, 0.77})
        CHECK(invert_flow(ens, j, q) == doctest::Approx(q - c * ens.times()[j]).epsilon(1e-12));
  }
  SUBCASE("round trip through a random viscous flow") {
    const auto m = solve_viscous(g, burgers_flux(), 1.0, InitialData::compressive(), T);
    const auto ens = evolve_flow(m, {}, labels, 1.0, make_brownian(5, 2, 100, 0.01));
    const auto j = ens.n_times() - 1;
    const auto x = ens.positions(j);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> q_dist(x[1], x[x.size() - 2]);
    for (int k = 0; k < 200; ++k) {
      const double q = q_dist(rng);
      const double label = invert_flow(ens, j, q);
      // forward image of the label by linear interpolation of the recorded map
      const auto it = std::upper_bound(labels.begin(), labels.end(), label);
      const std::size_t p = static_cast<std::size_t>(it - labels.begin()) - 1;
      const double w = (label - labels[p]) / (labels[p + 1] - labels[p]);
      const double forward = (1.0 - w) * x[p] + w * x[p + 1];
      CHECK(std::abs(forward - q) <= g.dx());
    }
  }
}

TEST_CASE("monotonicity violations are reported, not fixed") {
  ParticleEnsemble ens({0.0, 1.0, 2.0}, 1.0);
  ens.record(0.0, std::vector<double>{0.0, 1.0, 2.0});
  ens.record(1.0, std::vector<double>{0.0, 1.5, 1.5});
  CHECK_NOTHROW(require_monotone(ens, 0));
  CHECK_THROWS_AS(require_monotone(ens, 1), MonotonicityError);
}

TEST_CASE("eps = 0 characteristics reach the stationary shock and stay") {
  // speed a(-1) = -1/2 from x0 = 0.5: the shock is reached at t = 1
  const Grid1D g(6.0, 301);
  const double T = 2.0, dt = 1e-3;
  const auto u = solve_entropy_reference(g, burgers_flux(), InitialData::compressive(), T);
  const auto a_fn = [](double v) { return drift_a(burgers_flux(), v); };
  const auto ens = evolve_flow(u, a_fn, std::vector<double>{-0.5, 0.5}, 0.0, make_brownian(1, 0, 2000, dt));
  for (std::size_t j = 0; j < ens.n_times(); ++j) {
    const double t = ens.times()[j];
    const auto x = ens.positions(j);
    // exact until the particle enters the cell [0, dx] where the drift is interpolated
    if (0.5 - 0.5 * t >= g.dx()) CHECK(x[1] == doctest::Approx(0.5 - 0.5 * t).epsilon(1e-9));
    if (t >= 1.0) {
      CHECK(std::abs(x[1]) <= g.dx() + dt);
      CHECK(std::abs(x[0]) <= g.dx() + dt);
    }
    CHECK(x[0] <= x[1]);
  }
}

TEST_CASE("trajectory csv") {
  ParticleEnsemble ens({0.0, 1.0}, 1.0);
  ens.record(0.0, std::vector<double>{0.0, 1.0});
  std::ostringstream os;
  write_trajectory_csv(os, ens);
  CHECK(os.str() == "t,particle_id,position\n0,0,0\n0,1,1\n");
}

TEST_CASE("parallel particle kernel matches the serial reference bitwise") {
  const Grid1D g(6.0, 301);
  const auto m = solve_viscous(g, burgers_flux(), 1.0, InitialData::compressive(), 1.0);
  const auto s = drift_slice(m, 0.37);
  const std::function<double(double)> a_fn = [](double v) { return drift_a(burgers_flux(), v); };
  const int saved = omp_get_max_threads();
  for (int threads : {1, 3, 4}) {
    omp_set_num_threads(threads);
    auto x = seed_particles(6.0, 4001);
    auto y = x;
    for (int k = 0; k < 20; ++k) {
      kernels::advance_particles(x, s, a_fn, 1e-3, 0.01);
      kernels::serial::advance_particles(y, s, a_fn, 1e-3, 0.01);
    }
    CHECK(x == y);
  }
  omp_set_num_threads(saved);

  const auto b = make_brownian(2, 0, 500, 2e-3);
  const auto e1 = evolve_flow(m, a_fn, seed_particles(6.0, 1001), 1.0, b);
  const auto e2 = evolve_flow_serial(m, a_fn, seed_particles(6.0, 1001), 1.0, b);
  const auto j = e1.n_times() - 1;
  CHECK(std::vector<double>(e1.positions(j).begin(), e1.positions(j).end()) ==
        std::vector<double>(e2.positions(j).begin(), e2.positions(j).end()));
}

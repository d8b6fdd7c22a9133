#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mfcl/diagnostics.hpp"
#include "mfcl/pde.hpp"

using namespace mfcl;

namespace {

// A sample whose carriers hold point masses; far states and window as given.
DensitySample point_masses(double t, std::vector<double> x, std::vector<double> mass, double L) {
  DensitySample s;
  s.t = t;
  s.carrier_positions = std::move(x);
  s.carrier_masses = std::move(mass);
  s.carrier_values.assign(s.carrier_positions.size(), 0.0);
  s.carrier_multiplicity.assign(s.carrier_positions.size(), 1);
  for (double m : s.carrier_masses) s.total_mass += m;
  s.half_length = L;
  return s;
}

SpaceTimeField erf_field(const Grid1D& g, double eps, const std::vector<double>& times) {
  SpaceTimeField f(g);
  for (double t : times) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -std::erf(g.node(i) / (eps * std::sqrt(2.0 * t)));
    f.append(t, v);
  }
  return f;
}

}  // namespace

TEST_CASE("heat kernel normalization and gradient anchor") {
  for (double eps : {1.0, 0.5, 0.25}) {
    for (double t : {0.1, 0.5, 1.0}) {
      const auto rep = heat_kernel_check(eps, t, 0.5, geometric_h_list(eps, t, -4, 2));
      CHECK(std::abs(rep.normalization - 1.0) <= 1e-12);
      CHECK(rep.gradient_l1 == doctest::Approx(rep.gradient_anchor).epsilon(1e-9));
      CHECK(rep.gradient_anchor == doctest::Approx(std::sqrt(2.0 / std::numbers::pi) / (eps * std::sqrt(t))));
    }
  }
}

TEST_CASE("heat kernel differences match the erf closed form") {
  // ||K(. + h) - K||_1 = 2 erf(h / (2 sqrt(2) sigma)).
  const double eps = 0.5, t = 0.5, sigma = eps * std::sqrt(t);
  const auto h = geometric_h_list(eps, t, -6, 3);
  const auto rep = heat_kernel_check(eps, t, 0.7, h);
  REQUIRE(rep.diff_l1.size() == h.size());
  for (std::size_t k = 0; k < h.size(); ++k)
    CHECK(rep.diff_l1[k] == doctest::Approx(2.0 * std::erf(h[k] / (2.0 * std::sqrt(2.0) * sigma))).epsilon(1e-9));
  CHECK(rep.h[0] == doctest::Approx(sigma / 64.0));
}

TEST_CASE("heat kernel Lipschitz ratio stays at or below one") {
  const auto rep = heat_kernel_check(1.0, 1.0, 1.0, geometric_h_list(1.0, 1.0, -8, 0));
  CHECK(rep.lipschitz_ratio <= 1.0 + 1e-6);
  CHECK(rep.lipschitz_ratio > 0.9);
  CHECK_THROWS_AS(heat_kernel_check(0.0, 1.0, 0.5, rep.h), std::invalid_argument);
  CHECK_THROWS_AS(heat_kernel_check(1.0, 1.0, 1.5, rep.h), std::invalid_argument);
  const std::vector<double> bad{-1.0};
  CHECK_THROWS_AS(heat_kernel_check(1.0, 1.0, 0.5, bad), std::invalid_argument);
}

TEST_CASE("heat kernel constants scale out sigma") {
  const auto a = heat_kernel_check(1.0, 1.0, 0.5, geometric_h_list(1.0, 1.0, -5, 2));
  const auto b = heat_kernel_check(0.25, 0.1, 0.5, geometric_h_list(0.25, 0.1, -5, 2));
  CHECK(a.constant_k == doctest::Approx(b.constant_k).epsilon(1e-8));
  CHECK(a.constant_grad == doctest::Approx(b.constant_grad).epsilon(1e-8));
}

TEST_CASE("riemann functional matches brute-force quadrature") {
  const FluxModel f = burgers_flux();
  const std::vector<double> times{0.0, 0.3, 1.0, 2.5};
  const double L = 6.0;
  for (const auto& u_in : {InitialData::compressive(), InitialData::expansive(), parse_initial("riemann:2,0.5,1")}) {
    for (const auto& th : default_test_functions()) {
      const auto got = riemann_functional(f, u_in, times, th, L);
      for (std::size_t j = 0; j < times.size(); ++j) {
        const double t = times[j];
        const int n = 200000;
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
          const double x = -L + (k + 0.5) * 2.0 * L / n;
          const double u = t == 0.0 ? u_in(x)
                                    : exact_riemann(f, u_in.left_state(), u_in.right_state(),
                                                    x - u_in.jump_position(), t);
          acc += th(x) * u;
        }
        CHECK(got[j] == doctest::Approx(acc * 2.0 * L / n).epsilon(1e-5));
      }
    }
  }
  const auto smooth = InitialData::analytic([](double x) { return std::sin(x); }, 1.0, "sin");
  CHECK_THROWS_AS(riemann_functional(f, smooth, times, default_test_functions()[0], L), std::invalid_argument);
}

TEST_CASE("weak-star error of exact samples is zero") {
  const auto th = test_function("gauss");
  const std::vector<double> times{0.0, 1.0};
  const double L = 4.0;
  // Point masses at x = +-1 with zero far states.
  const DensitySeries s{point_masses(0.0, {-1.0, 1.0}, {1.0, 2.0}, L), point_masses(1.0, {-1.0, 1.0}, {1.0, 2.0}, L)};
  const double exact = 3.0 * th(1.0);
  const std::vector<double> ref{exact, exact};
  const std::vector<DensitySeries> samples{s, s};
  CHECK(weak_star_error(samples, times, ref, th, 1.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(sup_weak_deviation(s, times, ref, th) <= 1e-15);

  // An odd perturbation is invisible to an even test function.
  const DensitySeries odd{point_masses(0.0, {-1.0, 1.0}, {1.5, 1.5}, L), point_masses(1.0, {-1.0, 1.0}, {0.5, 2.5}, L)};
  const std::vector<DensitySeries> odd_samples{odd};
  CHECK(weak_star_error(odd_samples, times, ref, th, 2.0) <= 1e-28);
}

TEST_CASE("weak-star error moments") {
  const auto th = test_function("gauss");
  const std::vector<double> times{0.5};
  std::vector<DensitySeries> samples;
  for (double m : {0.0, 0.5, 1.0, 3.0}) samples.push_back({point_masses(0.5, {0.0}, {m}, 4.0)});
  const std::vector<double> ref{0.0};
  const double p1 = weak_star_error(samples, times, ref, th, 1.0);
  const double p2 = weak_star_error(samples, times, ref, th, 2.0);
  CHECK(p1 == doctest::Approx(1.125));
  CHECK(p2 == doctest::Approx((0.25 + 1.0 + 9.0) / 4.0));
  CHECK(p2 >= p1 * p1);
  CHECK_THROWS_AS(weak_star_error(samples, times, ref, th, 0.5), std::invalid_argument);
  const std::vector<double> wrong_times{0.6};
  CHECK_THROWS_AS(weak_star_error(samples, wrong_times, ref, th, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(mc_moment(std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST_CASE("weak-star error against a grid reference uses far states") {
  const Grid1D g(4.0, 401);
  const auto th = test_function("tanh");
  SpaceTimeField ref(g);
  ref.append(0.0, InitialData::compressive().sample_on(g));
  // Carriers at the jump with zero mass; far states carry the whole integral.
  auto s = point_masses(0.0, {0.0, 0.0}, {0.0, 0.0}, 4.0);
  s.left_state = 1.0;
  s.right_state = -1.0;
  const std::vector<DensitySeries> samples{{s}};
  CHECK(weak_star_error(samples, ref, th, 1.0) <= 1e-4);
}

TEST_CASE("ensemble statistics") {
  const std::vector<std::vector<double>> rows{{1.0, 2.0}, {3.0, 4.0}};
  const auto s = ensemble_stats(rows);
  CHECK(s.n_samples == 2);
  CHECK(s.mean == std::vector<double>{2.0, 3.0});
  CHECK(s.stddev[0] == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.std_error[1] == doctest::Approx(1.0));

  const std::vector<double> m{2.5, 5.0};
  CHECK(band_coverage(s, m, 0, 1) == 0.5);
  CHECK(band_coverage(s, m, 0, 0) == 1.0);
  CHECK_THROWS_AS(band_coverage(s, m, 1, 2), std::invalid_argument);

  const std::vector<std::vector<double>> ragged{{1.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(ensemble_stats(ragged), std::invalid_argument);
  const std::vector<std::vector<double>> one{{1.0, 2.0}};
  CHECK(ensemble_stats(one).stddev[0] == 0.0);
}

TEST_CASE("mean consistency") {
  const Grid1D g(2.0, 41);
  SpaceTimeField m(g);
  m.append(0.0, std::vector<double>(g.size(), 0.0));
  std::vector<double> last(g.size());
  for (std::size_t i = 0; i < last.size(); ++i) last[i] = std::sin(g.node(i));
  m.append(1.0, last);
  const std::vector<std::vector<double>> same{last, last};
  CHECK(mean_consistency(same, m) <= 1e-15);
  std::vector<double> up = last, down = last;
  for (auto& v : up) v += 0.3;
  for (auto& v : down) v += 0.1;
  const std::vector<std::vector<double>> shifted{up, down};
  CHECK(mean_consistency(shifted, m) == doctest::Approx(0.2 * 4.0));
  const std::vector<std::vector<double>> wrong{{1.0}};
  CHECK_THROWS_AS(mean_consistency(wrong, m), std::invalid_argument);
}

TEST_CASE("maximum principle check") {
  const Grid1D g(6.0, 121);
  const auto u = solve_viscous(g, burgers_flux(), 0.5, InitialData::compressive(), 1.0);
  CHECK(max_principle_check(u, InitialData::compressive()) >= -1e-12);
  const auto big = map_field(u, [](double v) { return 1.1 * v; });
  CHECK(max_principle_check(big, InitialData::compressive()) == doctest::Approx(-0.1));
  SpaceTimeField c(g);
  c.append(0.0, std::vector<double>(g.size(), 0.4));
  CHECK(max_principle_check(c, InitialData::constant(0.4)) == 0.0);
}

TEST_CASE("holder check on constant data is zero") {
  const Grid1D g(6.0, 121);
  SpaceTimeField c(g);
  for (double t : {0.1, 0.5}) c.append(t, std::vector<double>(g.size(), 0.7));
  const auto rep = holder_bound_check(c, InitialData::constant(0.7), burgers_flux(), 0.5);
  CHECK(rep.constant == 0.0);
  CHECK(rep.h.size() == 4);
  CHECK_THROWS_AS(holder_bound_check(c, InitialData::constant(0.7), burgers_flux(), 1.0), std::invalid_argument);
}

TEST_CASE("holder check on the heat profile matches the closed form") {
  // f = 0, m = -erf(x / (eps sqrt(2t))): sup_x |m(x + h) - m(x)| = 2 erf(h / (2 eps sqrt(2t)))
  // for h an even multiple of dx (the pair straddles the origin symmetrically).
  const double eps = 0.5, beta = 0.9;
  const Grid1D g(6.0, 601);
  const auto field = erf_field(g, eps, {1e-3, 0.05, 0.2, 1.0});
  const auto rep = holder_bound_check(field, InitialData::compressive(), zero_flux(), beta);
  REQUIRE(rep.ratio_per_h.size() == 4);
  for (std::size_t k = 1; k < 4; ++k) {
    const double h = rep.h[k];
    double expect = 0.0;
    for (double t : {0.05, 0.2, 1.0})
      expect = std::max(expect, 2.0 * std::erf(h / (2.0 * eps * std::sqrt(2.0 * t))) /
                                    (std::pow(h, beta) * std::pow(t, -beta / 2.0)));
    CHECK(rep.ratio_per_h[k] == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(rep.h[0] == doctest::Approx(g.dx()));
}

TEST_CASE("holder constant is stable under grid refinement") {
  const auto u_in = InitialData::compressive();
  const auto a = solve_viscous(Grid1D(6.0, 121), burgers_flux(), 1.0, u_in, 1.0);
  const auto b = solve_viscous(Grid1D(6.0, 241), burgers_flux(), 1.0, u_in, 1.0);
  const double ca = holder_bound_check(a, u_in, burgers_flux(), 0.9).constant;
  const double cb = holder_bound_check(b, u_in, burgers_flux(), 0.9).constant;
  CHECK(ca > 0.0);
  CHECK(std::abs(ca - cb) / cb < 0.2);
}

TEST_CASE("oleinik margins") {
  const Grid1D g(6.0, 601);
  const FluxModel f = burgers_flux();

  // Exact fan x / t: slope equals the bound.
  const auto fan = exact_riemann_field(g, f, InitialData::expansive(), {1.0, 2.0});
  const auto rows = oleinik_check(fan, f, 0.5);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(std::abs(r.margin) <= 1e-9);

  // A shock is nonincreasing: the whole bound is slack.
  const auto shock = exact_riemann_field(g, f, InitialData::compressive(), {0.0, 1.0, 2.0});
  const auto srows = oleinik_check(shock, f, 0.5);
  REQUIRE(srows.size() == 2);
  CHECK(min_margin(srows) == doctest::Approx(0.5));

  const auto visc = solve_viscous(Grid1D(6.0, 241), f, 1.0, InitialData::expansive(), 1.0);
  CHECK(min_margin(oleinik_check(visc, f, 0.5)) >= -5.0 * 0.05);

  CHECK_THROWS_AS(oleinik_check(fan, zero_flux(), 0.5), std::invalid_argument);
}

TEST_CASE("report csv and table") {
  ConvergenceReport rep;
  rep.config_hash = 0xabcdef;
  rep.seed = 3;
  ReportRow r;
  r.epsilon = 0.5;
  r.theta = "gauss";
  r.weak_star_error = 1.0 / 3.0;
  r.n_mc = 10;
  rep.rows = {r, r};
  std::ostringstream a, b;
  write_report_csv(a, rep);
  write_report_csv(b, rep);
  CHECK(a.str() == b.str());
  const std::string head =
      "epsilon,theta,p,weak_star_error,l1_mean_field,mean_consistency,path_error,oleinik_margin,mass_defect,n_mc\n";
  CHECK(a.str().rfind(head, 0) == 0);
  CHECK(a.str().find("0.33333333333333331") != std::string::npos);

  std::ostringstream t;
  print_report(t, rep);
  CHECK(t.str().find("config_hash abcdef") != std::string::npos);
  CHECK(t.str().find("gauss") != std::string::npos);
}

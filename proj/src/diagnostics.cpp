#include "mfcl/diagnostics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mfcl/filippov.hpp"
#include "mfcl/pde.hpp"

namespace mfcl {

namespace {

using boost::math::quadrature::gauss_kronrod;

void check_times(std::span<const DensitySample> series, std::span<const double> times) {
  if (series.size() != times.size()) throw std::invalid_argument("sample and reference have different time counts");
  for (std::size_t j = 0; j < times.size(); ++j)
    if (std::abs(series[j].t - times[j]) > 1e-9 * std::max(1.0, std::abs(times[j]))) {
      std::ostringstream os;
      os << "time stamp mismatch at index " << j << ": sample t = " << series[j].t << ", reference t = " << times[j];
      throw std::invalid_argument(os.str());
    }
}

}  // namespace

std::vector<double> riemann_functional(const FluxModel& flux, const InitialData& u_in, std::span<const double> times,
                                       const TestFunction& theta, double L) {
  if (u_in.kind() != InitialData::Kind::riemann) throw std::invalid_argument("riemann_functional needs Riemann data");
  const double l = u_in.left_state(), r = u_in.right_state(), x0 = u_in.jump_position();
  auto clip = [L](double x) { return std::clamp(x, -L, L); };
  std::vector<double> out(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    if (t <= 0.0 || l == r) {
      out[j] = l * theta.integral(-L, clip(x0)) + r * theta.integral(clip(x0), L);
      continue;
    }
    if (!flux.is_strictly_convex) throw std::invalid_argument("riemann_functional needs a strictly convex flux");
    if (l > r) {
      const double s = x0 + t * (flux.f(l) - flux.f(r)) / (l - r);
      out[j] = l * theta.integral(-L, clip(s)) + r * theta.integral(clip(s), L);
    } else {
      const double a = clip(x0 + t * flux.f_prime(l));
      const double b = clip(x0 + t * flux.f_prime(r));
      double fan = 0.0;
      if (b > a) {
        auto g = [&](double x) { return theta(x) * exact_riemann(flux, l, r, x - x0, t); };
        fan = gauss_kronrod<double, 61>::integrate(g, a, b, 15, 1e-14);
      }
      out[j] = l * theta.integral(-L, a) + fan + r * theta.integral(b, L);
    }
  }
  return out;
}

std::vector<double> field_functional(const SpaceTimeField& u_ref, const TestFunction& theta) {
  std::vector<double> out(u_ref.n_times());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = grid_weak_integral(u_ref.grid(), u_ref.slice(j), theta);
  return out;
}

double sup_weak_deviation(const DensitySeries& series, std::span<const double> times,
                          std::span<const double> reference, const TestFunction& theta) {
  if (reference.size() != times.size()) throw std::invalid_argument("weak_star_error: reference/time size mismatch");
  check_times(series, times);
  double dev = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j)
    dev = std::max(dev, std::abs(windowed_weak_integral(series[j], theta) - reference[j]));
  return dev;
}

double mc_moment(std::span<const double> deviations, double p) {
  if (deviations.empty()) throw std::invalid_argument("weak_star_error: no samples");
  if (!(p >= 1.0)) throw std::invalid_argument("weak_star_error: p must be >= 1");
  double acc = 0.0;
  for (double d : deviations) acc += p == 1.0 ? d : std::pow(d, p);
  return acc / static_cast<double>(deviations.size());
}

double weak_star_error(std::span<const DensitySeries> samples, std::span<const double> times,
                       std::span<const double> reference, const TestFunction& theta, double p) {
  std::vector<double> dev;
  dev.reserve(samples.size());
  for (const auto& series : samples) dev.push_back(sup_weak_deviation(series, times, reference, theta));
  return mc_moment(dev, p);
}

double weak_star_error(std::span<const DensitySeries> samples, const SpaceTimeField& u_ref, const TestFunction& theta,
                       double p) {
  return weak_star_error(samples, u_ref.times(), field_functional(u_ref, theta), theta, p);
}

EnsembleStats ensemble_stats(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw std::invalid_argument("ensemble_stats: no rows");
  const std::size_t n = rows.front().size();
  EnsembleStats s;
  s.n_samples = rows.size();
  s.mean.assign(n, 0.0);
  s.stddev.assign(n, 0.0);
  s.std_error.assign(n, 0.0);
  for (const auto& r : rows) {
    if (r.size() != n) throw std::invalid_argument("ensemble_stats: ragged rows");
    for (std::size_t i = 0; i < n; ++i) s.mean[i] += r[i];
  }
  const auto N = static_cast<double>(rows.size());
  for (double& m : s.mean) m /= N;
  if (rows.size() > 1) {
    for (const auto& r : rows)
      for (std::size_t i = 0; i < n; ++i) s.stddev[i] += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
    for (std::size_t i = 0; i < n; ++i) {
      s.stddev[i] = std::sqrt(s.stddev[i] / (N - 1.0));
      s.std_error[i] = s.stddev[i] / std::sqrt(N);
    }
  }
  return s;
}

double mean_consistency(std::span<const std::vector<double>> final_densities, const SpaceTimeField& m_eps) {
  const auto stats = ensemble_stats(final_densities);
  const auto m = m_eps.slice(m_eps.n_times() - 1);
  if (m.size() != stats.mean.size()) throw std::invalid_argument("mean_consistency: grid mismatch");
  std::vector<double> d(m.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(stats.mean[i] - m[i]);
  return trapezoid(m_eps.grid(), d);
}

double band_coverage(const EnsembleStats& stats, std::span<const double> m, std::size_t first, std::size_t last) {
  if (last >= m.size() || first > last || m.size() != stats.mean.size())
    throw std::invalid_argument("band_coverage: bad node range");
  std::size_t inside = 0;
  for (std::size_t i = first; i <= last; ++i)
    if (std::abs(stats.mean[i] - m[i]) <= stats.std_error[i]) ++inside;
  return static_cast<double>(inside) / static_cast<double>(last - first + 1);
}

double max_principle_check(const SpaceTimeField& field, const InitialData& u_in) {
  return u_in.sup_norm() - field.max_abs();
}

HolderReport holder_bound_check(const SpaceTimeField& field, const InitialData& u_in, const FluxModel& flux,
                                double beta, double t_min) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("holder_bound_check needs 0 < beta < 1");
  const double lip = flux.max_abs_f_prime_on(-u_in.sup_norm(), u_in.sup_norm());
  const Grid1D& g = field.grid();
  HolderReport rep;
  rep.beta = beta;
  for (std::size_t shift : {1, 2, 4, 8}) {
    if (shift >= g.size()) break;
    const double h = static_cast<double>(shift) * g.dx();
    double worst = 0.0;
    for (std::size_t j = 0; j < field.n_times(); ++j) {
      const double t = field.times()[j];
      if (t < t_min || t <= 0.0) continue;
      const auto m = field.slice(j);
      double d = 0.0;
      for (std::size_t i = 0; i + shift < m.size(); ++i) d = std::max(d, std::abs(m[i + shift] - m[i]));
      const double scale = std::pow(h, beta) * (std::pow(t, -beta / 2.0) + lip * std::pow(t, (1.0 - beta) / 2.0));
      worst = std::max(worst, d / (u_in.sup_norm() > 0.0 ? u_in.sup_norm() : 1.0) / scale);
    }
    rep.h.push_back(h);
    rep.ratio_per_h.push_back(worst);
    rep.constant = std::max(rep.constant, worst);
  }
  return rep;
}

double heat_kernel(double epsilon, double t, double x) {
  const double var = epsilon * epsilon * t;
  return std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

double heat_kernel_dx(double epsilon, double t, double x) {
  return -x / (epsilon * epsilon * t) * heat_kernel(epsilon, t, x);
}

namespace {

// int_a^b |g|, split at sign changes located on a sampling mesh.
template <class G>
double abs_integral(G g, double a, double b) {
  constexpr int mesh = 4000;
  std::vector<double> cuts{a};
  double prev_x = a, prev = g(a);
  for (int k = 1; k <= mesh; ++k) {
    const double x = a + (b - a) * k / mesh;
    const double v = g(x);
    if ((prev < 0.0 && v > 0.0) || (prev > 0.0 && v < 0.0)) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ((g(mid) < 0.0) == (prev < 0.0) ? lo : hi) = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev_x = x;
    prev = v;
  }
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    double err = 0.0, l1 = 0.0;
    const double part =
        gauss_kronrod<double, 61>::integrate([&](double x) { return std::abs(g(x)); }, cuts[c], cuts[c + 1], 20, 1e-13,
                                             &err, &l1);
    if (!(err <= 1e-10 * std::max(1.0, l1))) throw Error("heat-kernel quadrature did not converge");
    total += part;
  }
  return total;
}

}  // namespace

std::vector<double> geometric_h_list(double epsilon, double t, int k_lo, int k_hi) {
  std::vector<double> h;
  for (int k = k_lo; k <= k_hi; ++k) h.push_back(epsilon * std::sqrt(t) * std::ldexp(1.0, k));
  return h;
}

HeatKernelReport heat_kernel_check(double epsilon, double t, double beta, std::span<const double> h_list) {
  if (!(epsilon > 0.0) || !(t > 0.0)) throw std::invalid_argument("heat_kernel_check needs eps > 0 and t > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("heat_kernel_check needs 0 < beta <= 1");
  HeatKernelReport rep;
  rep.epsilon = epsilon;
  rep.t = t;
  rep.beta = beta;
  const double sigma = epsilon * std::sqrt(t);
  const double span = 12.0 * sigma;
  rep.normalization =
      gauss_kronrod<double, 61>::integrate([&](double x) { return heat_kernel(epsilon, t, x); }, -span, span, 20, 1e-15);
  rep.gradient_l1 = abs_integral([&](double x) { return heat_kernel_dx(epsilon, t, x); }, -span, span);
  rep.gradient_anchor = std::sqrt(2.0 / std::numbers::pi) / sigma;
  for (double h : h_list) {
    if (!(h > 0.0)) throw std::invalid_argument("heat_kernel_check needs positive h");
    const double a = -span - h, b = span;
    const double dk = abs_integral([&](double x) { return heat_kernel(epsilon, t, x + h) - heat_kernel(epsilon, t, x); },
                                   a, b);
    const double dg = abs_integral(
        [&](double x) { return heat_kernel_dx(epsilon, t, x + h) - heat_kernel_dx(epsilon, t, x); }, a, b);
    rep.h.push_back(h);
    rep.diff_l1.push_back(dk);
    rep.grad_diff_l1.push_back(dg);
    rep.constant_k = std::max(rep.constant_k, dk * std::pow(sigma, beta) / std::pow(h, beta));
    rep.constant_grad = std::max(rep.constant_grad, dg * std::pow(sigma, 1.0 + beta) / std::pow(h, beta));
    if (h <= sigma) rep.lipschitz_ratio = std::max(rep.lipschitz_ratio, dk / (rep.gradient_anchor * h));
  }
  return rep;
}

std::vector<OleinikRow> oleinik_check(const SpaceTimeField& field, const FluxModel& flux, double t_min) {
  std::vector<OleinikRow> rows;
  for (std::size_t j = 0; j < field.n_times(); ++j) {
    const double t = field.times()[j];
    if (t < t_min || t <= 0.0) continue;
    const auto s = field.slice(j);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    const double c = flux.f_second_min_on(*lo, *hi);
    if (!(c > 0.0)) throw std::invalid_argument("oleinik_check needs f'' > 0 on the solution range");
    OleinikRow r{t, osl_seminorm(field.grid(), s), 1.0 / (t * c), 0.0};
    r.margin = r.bound - r.osl;
    rows.push_back(r);
  }
  return rows;
}

double min_margin(std::span<const OleinikRow> rows) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) m = std::min(m, r.margin);
  return m;
}

void write_report_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "epsilon,theta,p,weak_star_error,l1_mean_field,mean_consistency,path_error,oleinik_margin,mass_defect,n_mc\n"
      << std::setprecision(17);
  for (const auto& r : report.rows)
    out << r.epsilon << ',' << r.theta << ',' << r.p << ',' << r.weak_star_error << ',' << r.l1_mean_field << ','
        << r.mean_consistency << ',' << r.path_error << ',' << r.oleinik_margin << ',' << r.mass_defect << ','
        << r.n_mc << '\n';
}

void print_report(std::ostream& out, const ConvergenceReport& report) {
  std::ostringstream os;
  os << "config_hash " << std::hex << report.config_hash << std::dec << "  seed " << report.seed
     << "  sup_t over " << report.time_sup << '\n';
  os << std::left << std::setw(10) << "epsilon" << std::setw(9) << "theta" << std::setw(4) << "p" << std::setw(13)
     << "weak*" << std::setw(13) << "l1(m,u)" << std::setw(13) << "mean-cons" << std::setw(13) << "path"
     << std::setw(13) << "oleinik" << std::setw(11) << "mass" << "n_mc\n";
  os << std::setprecision(4);
  for (const auto& r : report.rows)
    os << std::setw(10) << r.epsilon << std::setw(9) << r.theta << std::setw(4) << r.p << std::setw(13)
       << r.weak_star_error << std::setw(13) << r.l1_mean_field << std::setw(13) << r.mean_consistency
       << std::setw(13) << r.path_error << std::setw(13) << r.oleinik_margin << std::setw(11) << r.mass_defect
       << r.n_mc << '\n';
  out << os.str();
}

}  // namespace mfcl

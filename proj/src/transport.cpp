#include "mfcl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "mfcl/filippov.hpp"

namespace mfcl {

std::vector<double> dual_widths(std::span<const double> labels, double half_length) {
  const std::size_t n = labels.size();
  if (n == 0) throw std::invalid_argument("no labels");
  if (n == 1) return {2.0 * half_length};
  std::vector<double> w(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double lo = p == 0 ? -half_length : 0.5 * (labels[p - 1] + labels[p]);
    const double hi = p + 1 == n ? half_length : 0.5 * (labels[p] + labels[p + 1]);
    w[p] = hi - lo;
  }
  return w;
}

std::vector<double> particle_masses(const InitialData& u_in, std::span<const double> labels, double half_length) {
  const std::size_t n = labels.size();
  if (n == 0) throw std::invalid_argument("no labels");
  std::vector<double> m(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double lo = p == 0 ? -half_length : 0.5 * (labels[p - 1] + labels[p]);
    const double hi = p + 1 == n ? half_length : 0.5 * (labels[p] + labels[p + 1]);
    m[p] = u_in.integral(lo, hi);
  }
  return m;
}

namespace {

double half_length_of(std::span<const double> labels) {
  return labels.size() == 1 ? 0.0 : 0.5 * (labels.back() - labels.front());
}

// Final dual widths of carriers (ends one-sided, matching the trapezoid weights).
std::vector<double> carrier_widths(std::span<const double> y) {
  const std::size_t n = y.size();
  std::vector<double> w(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double lo = c == 0 ? y[0] : y[c - 1];
    const double hi = c + 1 == n ? y[n - 1] : y[c + 1];
    w[c] = 0.5 * (hi - lo);
  }
  return w;
}

}  // namespace

DensitySample pushforward_density(const InitialData& u_in, const ParticleEnsemble& ensemble, std::size_t j,
                                  const Grid1D* grid) {
  if (j >= ensemble.n_times()) throw std::out_of_range("pushforward_density: time index");
  const auto& labels = ensemble.initial_positions();
  const auto x = ensemble.positions(j);
  const bool merging = ensemble.epsilon() == 0.0;
  if (!merging) require_monotone(ensemble, j);

  double L = half_length_of(labels);
  if (labels.size() == 1) L = grid ? grid->half_length() : 1.0;
  const auto masses = particle_masses(u_in, labels, L);

  DensitySample s;
  s.t = ensemble.times()[j];
  s.left_state = u_in.left_state();
  s.right_state = u_in.right_state();
  s.half_length = L;
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (merging && !s.carrier_positions.empty() && x[p] <= s.carrier_positions.back()) {
      s.carrier_masses.back() += masses[p];
      ++s.carrier_multiplicity.back();
      continue;
    }
    s.carrier_positions.push_back(x[p]);
    s.carrier_masses.push_back(masses[p]);
    s.carrier_multiplicity.push_back(1);
  }

  const std::size_t nc = s.carrier_positions.size();
  if (nc == 1) {
    s.carrier_values = {s.carrier_masses[0] / (labels.size() == 1 ? 2.0 * L : dual_widths(labels, L)[0])};
  } else {
    const auto w = carrier_widths(s.carrier_positions);
    const double floor = merging ? 0.1 * (labels[1] - labels[0]) : 0.0;
    s.carrier_values.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) s.carrier_values[c] = s.carrier_masses[c] / std::max(w[c], floor);
  }
  for (double m : s.carrier_masses) s.total_mass += m;
  if (grid) s.grid_resampled = resample_to_grid(s, *grid);
  return s;
}

std::vector<double> resample_to_grid(const DensitySample& s, const Grid1D& grid) {
  const auto& y = s.carrier_positions;
  const auto& v = s.carrier_values;
  if (y.empty()) throw std::invalid_argument("resample_to_grid: no carriers");
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double q = grid.node(i);
    if (q <= y.front()) {
      out[i] = v.front();
    } else if (q >= y.back()) {
      out[i] = v.back();
    } else {
      const auto c = static_cast<std::size_t>(std::upper_bound(y.begin(), y.end(), q) - y.begin()) - 1;
      const double w = (q - y[c]) / (y[c + 1] - y[c]);
      out[i] = v[c] + w * (v[c + 1] - v[c]);
    }
  }
  return out;
}

std::vector<double> compose_solution(const InitialData& u_in, const ParticleEnsemble& ensemble_y, std::size_t j,
                                     const Grid1D& grid) {
  const auto nodes = grid.nodes();
  auto labels = invert_flow(ensemble_y, j, nodes);
  for (double& l : labels) l = u_in(l);
  return labels;
}

double pushforward_weak_integral(const DensitySample& s, const TestFunction& theta) {
  double acc = 0.0;
  for (std::size_t c = 0; c < s.carrier_positions.size(); ++c) acc += theta(s.carrier_positions[c]) * s.carrier_masses[c];
  return acc;
}

double carrier_weak_integral(const DensitySample& s, const TestFunction& theta) {
  const auto& y = s.carrier_positions;
  if (y.size() == 1) return theta(y[0]) * s.carrier_masses[0];
  std::vector<double> f(y.size());
  for (std::size_t c = 0; c < y.size(); ++c) f[c] = theta(y[c]) * s.carrier_values[c];
  return trapezoid(y, f);
}

double windowed_weak_integral(const DensitySample& s, const TestFunction& theta) {
  const double L = s.half_length;
  return pushforward_weak_integral(s, theta) + s.left_state * theta.integral(-L, s.carrier_positions.front()) +
         s.right_state * theta.integral(s.carrier_positions.back(), L);
}

double mass_defect(const InitialData& u_in, const DensitySample& s) {
  return std::abs(s.total_mass - u_in.integral(-s.half_length, s.half_length));
}

double grid_weak_integral(const Grid1D& grid, std::span<const double> values, const TestFunction& theta) {
  if (values.size() != grid.size()) throw std::invalid_argument("grid_weak_integral: size mismatch");
  std::vector<double> f(values.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = theta(grid.node(i)) * values[i];
  return trapezoid(grid, f);
}

double representation_k(const InitialData& u_in, const FluxModel& flux, double k, const SpaceTimeField& entropy_field,
                        double t, const TestFunction& theta, const RepresentationOptions& opt) {
  if (opt.n_labels < 2) throw std::invalid_argument("representation_k needs at least two labels");
  const double L = entropy_field.grid().half_length();
  const auto labels = seed_particles(L, opt.n_labels);
  auto masses = particle_masses(u_in, labels, L);
  const auto widths = dual_widths(labels, L);
  for (std::size_t p = 0; p < masses.size(); ++p) masses[p] -= k * widths[p];

  const Drift b = entropy_drift(entropy_field, flux, k);
  const FilippovOptions fo{opt.dt, entropy_field.grid().dx(), entropy_drift_bound(entropy_field, flux, k), false};
  const auto n = static_cast<long>(labels.size());
  std::vector<double> end(labels.size());
#pragma omp parallel for schedule(static)
  for (long p = 0; p < n; ++p) {
    const auto q = static_cast<std::size_t>(p);
    end[q] = t > 0.0 ? filippov_solve(b, labels[q], 0.0, t, fo).positions.back() : labels[q];
  }
  double acc = k * theta.integral(-L, L);
  for (std::size_t p = 0; p < end.size(); ++p) acc += theta(end[p]) * masses[p];
  acc += (u_in.left_state() - k) * theta.integral(-L, end.front());
  acc += (u_in.right_state() - k) * theta.integral(end.back(), L);
  return acc;
}

void write_density_csv(std::ostream& out, std::span<const DensitySample> samples, const Grid1D& grid) {
  out << "t,x,u_eps\n" << std::setprecision(17);
  for (const auto& s : samples) {
    const auto v = s.grid_resampled.size() == grid.size() ? s.grid_resampled : resample_to_grid(s, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out << s.t << ',' << grid.node(i) << ',' << v[i] << '\n';
  }
}

void write_carrier_csv(std::ostream& out, std::span<const DensitySample> samples, std::size_t particle_stride) {
  particle_stride = std::max<std::size_t>(1, particle_stride);
  out << "t,particle_id,position,value\n" << std::setprecision(17);
  for (const auto& s : samples)
    for (std::size_t c = 0; c < s.carrier_positions.size(); c += particle_stride)
      out << s.t << ',' << c << ',' << s.carrier_positions[c] << ',' << s.carrier_values[c] << '\n';
}

}  // namespace mfcl

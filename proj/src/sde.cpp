#include "mfcl/sde.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mfcl {

namespace {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using StepKernel = void (*)(std::span<double>, const kernels::DriftSlice&, const std::function<double(double)>&,
                            double, double);

ParticleEnsemble integrate(StepKernel step, const SpaceTimeField& drift_field,
                           const std::function<double(double)>& transform, std::span<const double> initial,
                           double epsilon, const BrownianBundle& bundle, const FlowOptions& options) {
  if (initial.empty()) throw std::invalid_argument("evolve_flow needs at least one particle");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (options.record_stride == 0) throw std::invalid_argument("record_stride must be positive");
  const double horizon = static_cast<double>(bundle.n_steps) * bundle.dt;
  if (std::abs(horizon - drift_field.final_time()) > 1e-9 * std::max(1.0, horizon))
    throw std::invalid_argument("Brownian horizon n_steps*dt does not match the drift field's final time");

  ParticleEnsemble ens({initial.begin(), initial.end()}, epsilon);
  std::vector<double> x(initial.begin(), initial.end());
  ens.record(0.0, x);
  for (std::size_t j = 0; j < bundle.n_steps; ++j) {
    const double t = static_cast<double>(j) * bundle.dt;
    step(x, drift_slice(drift_field, t), transform, bundle.dt, epsilon * bundle.increments[j]);
    for (double v : x)
      if (!std::isfinite(v)) throw InstabilityError("non-finite particle position in evolve_flow");
    if (epsilon == 0.0) {
      // colliding particles merge: they share drift and noise from here on
      std::size_t merged = 0;
      for (std::size_t p = 0; p + 1 < x.size(); ++p)
        if (x[p + 1] < x[p]) {
          x[p + 1] = x[p];
          ++merged;
        }
      ens.note_merges(merged);
    }
    const bool last = j + 1 == bundle.n_steps;
    if ((j + 1) % options.record_stride == 0 || last) {
      ens.record(last ? horizon : static_cast<double>(j + 1) * bundle.dt, x);
      if (epsilon > 0.0)
        for (std::size_t p = 0; p + 1 < x.size(); ++p)
          if (!(x[p] < x[p + 1])) ens.note_violation({ens.n_times() - 1, p});
    }
  }
  return ens;
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t sample_index, std::uint64_t step) {
  const std::uint64_t key = mix64(seed ^ mix64(sample_index + 0x632be59bd9b4e019ULL));
  const std::uint64_t bits = mix64(key + mix64(step));
  const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

BrownianBundle make_brownian(std::uint64_t seed, std::uint64_t sample_index, std::size_t n_steps, double dt) {
  if (n_steps == 0) throw std::invalid_argument("make_brownian needs n_steps > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("make_brownian needs dt > 0");
  BrownianBundle b{seed, sample_index, n_steps, dt, std::vector<double>(n_steps)};
  const double scale = std::sqrt(dt);
  for (std::size_t j = 0; j < n_steps; ++j) b.increments[j] = scale * counter_normal(seed, sample_index, j);
  return b;
}

kernels::DriftSlice drift_slice(const SpaceTimeField& field, double t) {
  const auto& ts = field.times();
  if (ts.empty()) throw std::invalid_argument("empty drift field");
  const double tol = 1e-12 * (1.0 + std::abs(ts.back()));
  if (t < ts.front() - tol || t > ts.back() + tol) throw std::invalid_argument("drift time outside [0, T]");
  kernels::DriftSlice s;
  const auto& g = field.grid();
  s.x0 = -g.half_length();
  s.dx = g.dx();
  s.n = g.size();
  if (ts.size() == 1) {
    s.lo = s.hi = field.slice(0);
    return s;
  }
  t = std::clamp(t, ts.front(), ts.back());
  auto j = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
  j = std::clamp<std::size_t>(j, 1, ts.size() - 1) - 1;
  s.lo = field.slice(j);
  s.hi = field.slice(j + 1);
  s.weight = std::clamp((t - ts[j]) / (ts[j + 1] - ts[j]), 0.0, 1.0);
  return s;
}

double interp_drift(const SpaceTimeField& field, double x, double t) { return kernels::interp(drift_slice(field, t), x); }

std::vector<double> seed_particles(double half_length, std::size_t n_particles) {
  if (n_particles == 0) throw std::invalid_argument("need at least one particle");
  if (n_particles == 1) return {0.0};
  std::vector<double> x(n_particles);
  const auto n1 = static_cast<double>(n_particles - 1);
  for (std::size_t p = 0; p < n_particles; ++p) x[p] = half_length * ((2.0 * static_cast<double>(p) - n1) / n1);
  return x;
}

ParticleEnsemble::ParticleEnsemble(std::vector<double> initial_positions, double epsilon)
    : initial_(std::move(initial_positions)), epsilon_(epsilon) {}

void ParticleEnsemble::record(double t, std::span<const double> x) {
  if (x.size() != initial_.size()) throw std::invalid_argument("record: particle count mismatch");
  times_.push_back(t);
  positions_.insert(positions_.end(), x.begin(), x.end());
}

ParticleEnsemble evolve_flow(const SpaceTimeField& drift_field, const std::function<double(double)>& transform,
                             std::span<const double> initial_positions, double epsilon, const BrownianBundle& bundle,
                             const FlowOptions& options) {
  return integrate(&kernels::advance_particles, drift_field, transform, initial_positions, epsilon, bundle, options);
}

ParticleEnsemble evolve_flow_serial(const SpaceTimeField& drift_field, const std::function<double(double)>& transform,
                                    std::span<const double> initial_positions, double epsilon,
                                    const BrownianBundle& bundle, const FlowOptions& options) {
  return integrate(&kernels::serial::advance_particles, drift_field, transform, initial_positions, epsilon, bundle,
                   options);
}

void require_monotone(const ParticleEnsemble& ensemble, std::size_t time_index) {
  const auto x = ensemble.positions(time_index);
  for (std::size_t p = 0; p + 1 < x.size(); ++p)
    if (!(x[p] < x[p + 1])) {
      std::ostringstream os;
      os << std::setprecision(17) << "flow not monotone at time index " << time_index << ": particles " << p << " and "
         << p + 1 << " at " << x[p] << " >= " << x[p + 1];
      throw MonotonicityError(os.str());
    }
}

namespace {

double invert_in_row(std::span<const double> x, const std::vector<double>& labels, double q) {
  if (x.size() == 1 || q <= x.front()) return labels.front();
  if (q >= x.back()) return labels.back();
  const auto it = std::upper_bound(x.begin(), x.end(), q);
  const auto p = static_cast<std::size_t>(it - x.begin()) - 1;
  const double w = (q - x[p]) / (x[p + 1] - x[p]);
  return labels[p] + w * (labels[p + 1] - labels[p]);
}

}  // namespace

namespace {

// eps = 0 rows may hold merged (equal) neighbours; the inverse is still defined.
void require_invertible(const ParticleEnsemble& ensemble, std::size_t time_index) {
  if (ensemble.epsilon() > 0.0) return require_monotone(ensemble, time_index);
  const auto x = ensemble.positions(time_index);
  if (!std::is_sorted(x.begin(), x.end())) throw MonotonicityError("eps = 0 flow out of order");
}

}  // namespace

double invert_flow(const ParticleEnsemble& ensemble, std::size_t time_index, double query) {
  require_invertible(ensemble, time_index);
  return invert_in_row(ensemble.positions(time_index), ensemble.initial_positions(), query);
}

std::vector<double> invert_flow(const ParticleEnsemble& ensemble, std::size_t time_index,
                                std::span<const double> queries) {
  require_invertible(ensemble, time_index);
  const auto x = ensemble.positions(time_index);
  std::vector<double> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) out[q] = invert_in_row(x, ensemble.initial_positions(), queries[q]);
  return out;
}

void write_trajectory_csv(std::ostream& out, const ParticleEnsemble& ensemble, std::size_t time_stride,
                          std::size_t particle_stride) {
  time_stride = std::max<std::size_t>(1, time_stride);
  particle_stride = std::max<std::size_t>(1, particle_stride);
  out << "t,particle_id,position\n" << std::setprecision(17);
  for (std::size_t j = 0; j < ensemble.n_times(); ++j) {
    if (j % time_stride != 0 && j + 1 != ensemble.n_times()) continue;
    const auto x = ensemble.positions(j);
    for (std::size_t p = 0; p < x.size(); p += particle_stride)
      out << ensemble.times()[j] << ',' << p << ',' << x[p] << '\n';
  }
}

}  // namespace mfcl

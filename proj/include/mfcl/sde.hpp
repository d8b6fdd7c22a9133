// Brownian paths and Euler-Maruyama particle flows driven by common noise.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfcl/core.hpp"
#include "mfcl/kernels.hpp"

namespace mfcl {

/// One Brownian path, a pure function of (seed, sample_index). Increments are
/// Normal(0, dt) drawn from a counter-based stream keyed by
/// (seed, sample_index, step), so regeneration never depends on the order in
/// which samples are produced.
struct BrownianBundle {
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;
  std::size_t n_steps = 0;
  double dt = 0.0;
  std::vector<double> increments;
};

/// Standard normal variate for the given counter. Uses the inverse normal CDF
/// (boost erfc_inv) of a 53-bit uniform in (0, 1).
double counter_normal(std::uint64_t seed, std::uint64_t sample_index, std::uint64_t step);

BrownianBundle make_brownian(std::uint64_t seed, std::uint64_t sample_index, std::size_t n_steps, double dt);

/// Bilinear interpolation of a stored field in (x, t). Outside [-L, L] the
/// boundary value (at that time) is returned.
double interp_drift(const SpaceTimeField& field, double x, double t);

/// The two slices bracketing t with the time weight, for the particle kernel.
kernels::DriftSlice drift_slice(const SpaceTimeField& field, double t);

/// Uniform seeding over [-L, L], endpoints included (a single particle sits at 0).
std::vector<double> seed_particles(double half_length, std::size_t n_particles);

struct MonotonicityViolation {
  std::size_t time_index;
  std::size_t particle;  // positions[particle] >= positions[particle + 1]
};

class ParticleEnsemble {
 public:
  ParticleEnsemble(std::vector<double> initial_positions, double epsilon);

  std::size_t n_particles() const { return initial_.size(); }
  std::size_t n_times() const { return times_.size(); }
  const std::vector<double>& initial_positions() const { return initial_; }
  const std::vector<double>& times() const { return times_; }
  double epsilon() const { return epsilon_; }
  std::span<const double> positions(std::size_t j) const {
    return {positions_.data() + j * initial_.size(), initial_.size()};
  }
  /// Order violations seen while recording (eps > 0 only; eps = 0 merges instead).
  const std::vector<MonotonicityViolation>& violations() const { return violations_; }
  /// Particles merged into a neighbour during eps = 0 integration.
  std::size_t merge_events() const { return merges_; }

  void record(double t, std::span<const double> x);
  void note_violation(MonotonicityViolation v) { violations_.push_back(v); }
  void note_merges(std::size_t k) { merges_ += k; }

 private:
  std::vector<double> initial_;
  double epsilon_;
  std::vector<double> times_;
  std::vector<double> positions_;
  std::vector<MonotonicityViolation> violations_;
  std::size_t merges_ = 0;
};

struct FlowOptions {
  /// Record every `record_stride` steps (t = 0 and the final time are always kept).
  std::size_t record_stride = 1;
};

/// Euler-Maruyama for dX = transform(m(X, t)) dt + eps dW with the SAME
/// increment applied to every particle. transform is a(.) for the mean-field
/// flow and empty (identity) for the LA SALT flow.
ParticleEnsemble evolve_flow(const SpaceTimeField& drift_field, const std::function<double(double)>& transform,
                             std::span<const double> initial_positions, double epsilon, const BrownianBundle& bundle,
                             const FlowOptions& options = {});

/// Same integration, serial reference kernel.
ParticleEnsemble evolve_flow_serial(const SpaceTimeField& drift_field, const std::function<double(double)>& transform,
                                    std::span<const double> initial_positions, double epsilon,
                                    const BrownianBundle& bundle, const FlowOptions& options = {});

/// Initial label whose forward image at recorded time j is `query`
/// (piecewise-linear inverse; clamps to the end labels outside the hull).
/// Requires a strictly increasing row, or a nondecreasing one when eps = 0.
double invert_flow(const ParticleEnsemble& ensemble, std::size_t time_index, double query);
/// Vectorised inverse for many queries.
std::vector<double> invert_flow(const ParticleEnsemble& ensemble, std::size_t time_index,
                                std::span<const double> queries);

/// Throws MonotonicityError naming the first pair with x_p >= x_{p+1}.
void require_monotone(const ParticleEnsemble& ensemble, std::size_t time_index);

/// `t,particle_id,position` rows; every `stride`-th recorded time and particle.
void write_trajectory_csv(std::ostream& out, const ParticleEnsemble& ensemble, std::size_t time_stride = 1,
                          std::size_t particle_stride = 1);

}  // namespace mfcl

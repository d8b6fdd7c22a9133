// Reconstruction of the stochastic solutions from particle flows: the
// pushforward u^eps = (X_t)_# u_in, the composition v^eps = u_in(Y_0), and
// the k-shifted representation u(t) = k + (X^k_t)_# (u_in - k).
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfcl/core.hpp"
#include "mfcl/sde.hpp"

namespace mfcl {

/// Dual-cell widths of seeded labels inside [-L, L]: half the distance to each
/// neighbour, end cells reaching out to +-L. A lone particle owns [-L, L].
std::vector<double> dual_widths(std::span<const double> labels, double half_length);

/// Signed mass carried by each label: the integral of u_in over its dual cell.
std::vector<double> particle_masses(const InitialData& u_in, std::span<const double> labels, double half_length);

struct DensitySample {
  double t = 0.0;
  std::vector<double> carrier_positions;
  std::vector<double> carrier_values;
  /// Signed mass per carrier; merged particles (eps = 0) are aggregated.
  std::vector<double> carrier_masses;
  /// Labels that collapsed into each carrier.
  std::vector<std::size_t> carrier_multiplicity;
  std::vector<double> grid_resampled;
  double total_mass = 0.0;
  /// Far-field states and window of the initial data, for tail terms.
  double left_state = 0.0;
  double right_state = 0.0;
  double half_length = 0.0;
};

/// Carrier value of particle p is its mass over its final dual width, i.e.
/// u_in(x_p) (x_{p+1} - x_{p-1}) / (X(x_{p+1}) - X(x_{p-1})) with one-sided
/// ratios at the ends. With eps > 0 a zero final spacing raises
/// MonotonicityError; with eps = 0 coincident particles merge into one carrier
/// whose displayed density uses a floor spacing of dx/10. If `grid` is given
/// the sample is also resampled onto it.
DensitySample pushforward_density(const InitialData& u_in, const ParticleEnsemble& ensemble, std::size_t time_index,
                                  const Grid1D* grid = nullptr);

/// Piecewise-linear interpolation of carrier values onto the nodes; nodes
/// outside the carrier hull take the nearest end value.
std::vector<double> resample_to_grid(const DensitySample& sample, const Grid1D& grid);

/// v(x_i) = u_in(Y_0(x_i)) with Y_0 the inverse of the recorded forward flow.
std::vector<double> compose_solution(const InitialData& u_in, const ParticleEnsemble& ensemble_y,
                                     std::size_t time_index, const Grid1D& grid);

/// sum_p theta(X_p) m_p: the right-hand side of the pushforward weak identity.
double pushforward_weak_integral(const DensitySample& sample, const TestFunction& theta);
/// Trapezoid integral of theta * carrier density over the carrier positions.
double carrier_weak_integral(const DensitySample& sample, const TestFunction& theta);
/// int_{-L}^{L} theta u^eps: carrier masses plus the constant far states
/// transported between +-L and the outermost carriers.
double windowed_weak_integral(const DensitySample& sample, const TestFunction& theta);

/// |total carrier mass - int_{-L}^{L} u_in|.
double mass_defect(const InitialData& u_in, const DensitySample& sample);

/// Trapezoid int_{-L}^{L} theta * values for a field sampled on the grid.
double grid_weak_integral(const Grid1D& grid, std::span<const double> values, const TestFunction& theta);

struct RepresentationOptions {
  std::size_t n_labels = 2001;
  double dt = 1e-3;
};

/// k int_{-L}^{L} theta + int theta(X^k_t(x)) (u_in(x) - k) dx, where X^k is
/// the Filippov flow of a_k(u, k) through the entropy field and the constant
/// far states are transported rigidly up to +-L.
double representation_k(const InitialData& u_in, const FluxModel& flux, double k, const SpaceTimeField& entropy_field,
                        double t, const TestFunction& theta, const RepresentationOptions& options = {});

/// `t,x,u_eps` rows for each sample (grid-resampled values).
void write_density_csv(std::ostream& out, std::span<const DensitySample> samples, const Grid1D& grid);
/// `t,particle_id,position,value` rows (carriers).
void write_carrier_csv(std::ostream& out, std::span<const DensitySample> samples, std::size_t particle_stride = 1);

}  // namespace mfcl

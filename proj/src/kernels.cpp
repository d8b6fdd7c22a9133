#include "mfcl/kernels.hpp"

#include <cstdint>

namespace mfcl::kernels {

namespace {

inline double node_update(std::span<const double> u, std::span<const double> flux_at, std::size_t i,
                          double lambda, double mu) {
  return u[i] - lambda * (flux_at[i] - flux_at[i - 1]) + mu * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
}

inline double particle_update(double x, const DriftSlice& drift, const std::function<double(double)>& transform,
                              double dt, double noise) {
  const double m = interp(drift, x);
  const double v = transform ? transform(m) : m;
  return x + v * dt + noise;
}

}  // namespace

void viscous_step(const FluxModel& flux, std::span<const double> u, std::span<double> interface_flux,
                  double dt_over_dx, double diffusion_number, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(u.size());
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n - 1; ++i) interface_flux[i] = godunov_flux(flux, u[i], u[i + 1]);
#pragma omp for schedule(static)
    for (std::int64_t i = 1; i < n - 1; ++i)
      out[i] = node_update(u, interface_flux, static_cast<std::size_t>(i), dt_over_dx, diffusion_number);
  }
  out[0] = u[0];
  out[n - 1] = u[n - 1];
}

void advance_particles(std::span<double> positions, const DriftSlice& drift,
                       const std::function<double(double)>& transform, double dt, double noise) {
  const auto n = static_cast<std::int64_t>(positions.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) positions[p] = particle_update(positions[p], drift, transform, dt, noise);
}

namespace serial {

void viscous_step(const FluxModel& flux, std::span<const double> u, std::span<double> interface_flux,
                  double dt_over_dx, double diffusion_number, std::span<double> out) {
  const std::size_t n = u.size();
  for (std::size_t i = 0; i + 1 < n; ++i) interface_flux[i] = godunov_flux(flux, u[i], u[i + 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = node_update(u, interface_flux, i, dt_over_dx, diffusion_number);
  out[0] = u[0];
  out[n - 1] = u[n - 1];
}

void advance_particles(std::span<double> positions, const DriftSlice& drift,
                       const std::function<double(double)>& transform, double dt, double noise) {
  for (double& x : positions) x = particle_update(x, drift, transform, dt, noise);
}

}  // namespace serial

}  // namespace mfcl::kernels

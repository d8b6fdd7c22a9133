// Data-parallel inner loops. Each kernel has an OpenMP version (namespace
// kernels) and a serial reference (kernels::serial) producing bitwise
// identical output; the tests hold them to that.
#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "mfcl/core.hpp"

namespace mfcl::kernels {

/// Godunov flux F(uL, uR) = min f on [uL, uR] if uL <= uR, else max f on [uR, uL].
inline double godunov_flux(const FluxModel& flux, double ul, double ur) {
  return ul <= ur ? flux.min_on(ul, ur) : flux.max_on(ur, ul);
}

/// Two stored time slices and the linear time weight between them; the
/// spatial layout is the uniform grid (x0 = -L, dx, n nodes).
struct DriftSlice {
  std::span<const double> lo;
  std::span<const double> hi;
  double weight = 0.0;  // 0 -> lo, 1 -> hi
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t n = 0;
};

/// Bilinear value at x; outside the grid the boundary node value is used.
inline double interp(const DriftSlice& s, double x) {
  const double r = (x - s.x0) / s.dx;
  std::size_t i;
  double w;
  if (!(r > 0.0)) {
    i = 0;
    w = 0.0;
  } else if (r >= static_cast<double>(s.n - 1)) {
    i = s.n - 2;
    w = 1.0;
  } else {
    i = static_cast<std::size_t>(r);
    if (i > s.n - 2) i = s.n - 2;
    w = r - static_cast<double>(i);
  }
  const double a = (1.0 - s.weight) * s.lo[i] + s.weight * s.hi[i];
  const double b = (1.0 - s.weight) * s.lo[i + 1] + s.weight * s.hi[i + 1];
  return (1.0 - w) * a + w * b;
}

/// One explicit step of u_t + f(u)_x = diffusion * u_xx on interior nodes;
/// boundary nodes are copied (Dirichlet). `interface_flux` is scratch of size n-1.
void viscous_step(const FluxModel& flux, std::span<const double> u, std::span<double> interface_flux,
                  double dt_over_dx, double diffusion_number, std::span<double> out);

/// x_p += drift(interp(m, x_p)) * dt + noise for every particle. An empty
/// `transform` means the identity.
void advance_particles(std::span<double> positions, const DriftSlice& drift,
                       const std::function<double(double)>& transform, double dt, double noise);

namespace serial {

void viscous_step(const FluxModel& flux, std::span<const double> u, std::span<double> interface_flux,
                  double dt_over_dx, double diffusion_number, std::span<double> out);

void advance_particles(std::span<double> positions, const DriftSlice& drift,
                       const std::function<double(double)>& transform, double dt, double noise);

}  // namespace serial

}  // namespace mfcl::kernels

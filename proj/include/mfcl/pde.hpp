// Deterministic solvers: viscous mean-field law, inviscid entropy reference,
// exact Riemann solutions, and the Duhamel-formula oracle.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "mfcl/core.hpp"

namespace mfcl {

/// Explicit scheme for m_t + f(m)_x = (eps^2/2) m_xx: Godunov (upwind)
/// advection, central diffusion, forward Euler.
struct PdeScheme {
  double cfl_safety = 0.4;
  /// Upper bound on the number of stored time slices (t = 0 and t = T always kept).
  std::size_t store_slices = 400;
  /// Largest tolerated departure from u_in(+-L) one node inside the boundary.
  double boundary_tolerance = 1e-3;
};

/// Largest stable step: cfl_safety * min(dx / max|f'|, dx^2 / eps^2), with
/// max|f'| taken over [-sup_norm, sup_norm]. Not yet fitted to a final time.
double cfl_timestep(const Grid1D& grid, const FluxModel& flux, double epsilon, double sup_norm,
                    double cfl_safety);

struct StepPlan {
  std::size_t n_steps = 0;
  std::size_t stride = 1;  // steps between stored slices
  double dt = 0.0;
};

/// Rounds dt_max down so that T/dt is an integer multiple of the storage stride.
StepPlan plan_steps(double T, double dt_max, std::size_t store_slices);

SpaceTimeField solve_viscous(const Grid1D& grid, const FluxModel& flux, double epsilon, const InitialData& u_in,
                             double T, const PdeScheme& scheme = {});

/// solve_viscous with eps = 0 (Godunov scheme); requires a strictly convex flux.
SpaceTimeField solve_entropy_reference(const Grid1D& grid, const FluxModel& flux, const InitialData& u_in, double T,
                                       const PdeScheme& scheme = {});

/// Number of solve_viscous calls made by this process (entropy reference included).
std::size_t viscous_solve_count();

/// Entropy solution of the Riemann problem (left, right) jumping at x = 0.
double exact_riemann(const FluxModel& flux, double left, double right, double x, double t);

/// Exact Riemann solution of u_in sampled at `times` on the grid (t = 0 gives
/// the sampled initial data). A node sitting exactly on a shock gets the mean
/// of both states.
SpaceTimeField exact_riemann_field(const Grid1D& grid, const FluxModel& flux, const InitialData& u_in,
                                   const std::vector<double>& times);

struct DuhamelOptions {
  std::size_t n_time_levels = 100;
  /// Successive-iterate sup distance at which a time level is accepted.
  double tolerance = 1e-13;
  /// Heat-kernel truncation in standard deviations.
  double truncation_sigmas = 8.0;
};

/// Fixed point of m = K_t * u_in - int_0^t dx K_{t-s} * f(m(s)) ds, computed
/// level by level with at most n_picard iterations each. Heat-kernel
/// integrals are evaluated in closed form against piecewise-constant cells.
SpaceTimeField duhamel_solve(const Grid1D& grid, const FluxModel& flux, double epsilon, const InitialData& u_in,
                             double T, std::size_t n_picard, const DuhamelOptions& options = {});

/// Pure heat evolution (K_t^eps * u_in) on the grid, exact for Riemann data.
std::vector<double> heat_convolve(const Grid1D& grid, double epsilon, const InitialData& u_in, double t);

/// Values at time t, linear in time between stored slices.
std::vector<double> field_at_time(const SpaceTimeField& field, double t);
/// Resamples the field onto new time stamps (linear in time).
SpaceTimeField resample_times(const SpaceTimeField& field, const std::vector<double>& times);

/// `t,x,value` rows, time-major.
void write_field_csv(std::ostream& out, const SpaceTimeField& field);

}  // namespace mfcl

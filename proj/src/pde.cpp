#include "mfcl/pde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "mfcl/kernels.hpp"

namespace mfcl {

namespace {

std::atomic<std::size_t> g_viscous_solves{0};

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Antiderivative in tau of the heat kernel K_tau(z), vanishing at tau = 0.
double kernel_time_antiderivative(double tau, double z, double epsilon) {
  if (tau <= 0.0) return 0.0;
  const double az = std::abs(z);
  const double e2 = epsilon * epsilon;
  return std::sqrt(2.0 * tau / M_PI) / epsilon * std::exp(-z * z / (2.0 * e2 * tau)) -
         az / e2 * std::erfc(az / (epsilon * std::sqrt(2.0 * tau)));
}

struct LagWeights {
  std::int64_t reach = 0;       // offsets d in [-reach, reach + 1]
  std::vector<double> weights;  // index d + reach
};

// out_i -= sum_d w[d] * jumps[i - d], jumps indexed by interface j (between nodes j, j+1).
void subtract_interface_convolution(const LagWeights& lag, const std::vector<double>& jumps, std::vector<double>& out) {
  const auto n = static_cast<std::int64_t>(out.size());
  const auto n_if = static_cast<std::int64_t>(jumps.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t j_lo = std::max<std::int64_t>(0, i - lag.reach - 1);
    const std::int64_t j_hi = std::min<std::int64_t>(n_if - 1, i + lag.reach);
    double s = 0.0;
    for (std::int64_t j = j_lo; j <= j_hi; ++j) s += lag.weights[static_cast<std::size_t>(i - j + lag.reach)] * jumps[j];
    out[i] -= s;
  }
}

std::vector<double> interface_jumps(const std::vector<double>& cell_values) {
  std::vector<double> d(cell_values.size() - 1);
  for (std::size_t j = 0; j + 1 < cell_values.size(); ++j) d[j] = cell_values[j + 1] - cell_values[j];
  return d;
}

}  // namespace

double cfl_timestep(const Grid1D& grid, const FluxModel& flux, double epsilon, double sup_norm, double cfl_safety) {
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw std::invalid_argument("cfl_safety must lie in (0, 1]");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  const double dx = grid.dx();
  const double speed = flux.max_abs_f_prime_on(-sup_norm, sup_norm);
  const double inf = std::numeric_limits<double>::infinity();
  const double advective = speed > 0.0 ? dx / speed : inf;
  const double diffusive = epsilon > 0.0 ? dx * dx / (epsilon * epsilon) : inf;
  if (advective == inf && diffusive == inf)
    throw std::invalid_argument("degenerate time step: max|f'| = 0 and epsilon = 0, nothing evolves");
  return cfl_safety * std::min(advective, diffusive);
}

StepPlan plan_steps(double T, double dt_max, std::size_t store_slices) {
  if (!(T > 0.0) || !(dt_max > 0.0)) throw std::invalid_argument("plan_steps needs T > 0 and dt_max > 0");
  if (store_slices == 0) throw std::invalid_argument("store_slices must be positive");
  StepPlan p;
  auto n = static_cast<std::size_t>(std::ceil(T / dt_max - 1e-12));
  n = std::max<std::size_t>(n, 1);
  p.stride = std::max<std::size_t>(1, (n + store_slices - 1) / store_slices);
  p.n_steps = ((n + p.stride - 1) / p.stride) * p.stride;
  p.dt = T / static_cast<double>(p.n_steps);
  return p;
}

SpaceTimeField solve_viscous(const Grid1D& grid, const FluxModel& flux, double epsilon, const InitialData& u_in,
                             double T, const PdeScheme& scheme) {
  ++g_viscous_solves;
  const double dt_max = cfl_timestep(grid, flux, epsilon, u_in.sup_norm(), scheme.cfl_safety);
  const StepPlan plan = plan_steps(T, dt_max, scheme.store_slices);
  const double lambda = plan.dt / grid.dx();
  const double mu = 0.5 * epsilon * epsilon * plan.dt / (grid.dx() * grid.dx());

  const std::size_t n = grid.size();
  std::vector<double> u = u_in.sample_on(grid);
  std::vector<double> next(n), scratch(n - 1);
  const double left_bc = u_in(-grid.half_length());
  const double right_bc = u_in(grid.half_length());
  u.front() = left_bc;
  u.back() = right_bc;

  SpaceTimeField field(grid);
  field.append(0.0, u);
  for (std::size_t step = 1; step <= plan.n_steps; ++step) {
    kernels::viscous_step(flux, u, scratch, lambda, mu, next);
    u.swap(next);
    if (std::abs(u[1] - left_bc) > scheme.boundary_tolerance ||
        std::abs(u[n - 2] - right_bc) > scheme.boundary_tolerance) {
      std::ostringstream os;
      os << "boundary contamination at t = " << step * plan.dt << ": the solution reached +-L; enlarge the domain";
      throw BoundaryContaminationError(os.str());
    }
    if (step % plan.stride == 0) {
      for (double v : u)
        if (!std::isfinite(v)) throw InstabilityError("non-finite value in viscous solve");
      const double t = step == plan.n_steps ? T : static_cast<double>(step) * plan.dt;
      field.append(t, u);
    }
  }
  return field;
}

SpaceTimeField solve_entropy_reference(const Grid1D& grid, const FluxModel& flux, const InitialData& u_in, double T,
                                       const PdeScheme& scheme) {
  if (!flux.is_strictly_convex) throw std::invalid_argument("entropy reference requires a strictly convex flux");
  return solve_viscous(grid, flux, 0.0, u_in, T, scheme);
}

std::size_t viscous_solve_count() { return g_viscous_solves.load(); }

double exact_riemann(const FluxModel& flux, double left, double right, double x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("exact_riemann needs t > 0");
  if (!flux.is_strictly_convex) throw std::invalid_argument("exact_riemann requires a strictly convex flux");
  if (left == right) return left;
  const double xi = x / t;
  if (left > right) {
    const double s = (flux.f(left) - flux.f(right)) / (left - right);
    return xi < s ? left : right;
  }
  if (xi <= flux.f_prime(left)) return left;
  if (xi >= flux.f_prime(right)) return right;
  double lo = left, hi = right;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (flux.f_prime(mid) < xi ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SpaceTimeField exact_riemann_field(const Grid1D& grid, const FluxModel& flux, const InitialData& u_in,
                                   const std::vector<double>& times) {
  if (u_in.kind() != InitialData::Kind::riemann) throw std::invalid_argument("exact_riemann_field needs Riemann data");
  const double l = u_in.left_state(), r = u_in.right_state(), x0 = u_in.jump_position();
  const bool shock = l > r;
  const double s = shock ? (flux.f(l) - flux.f(r)) / (l - r) : 0.0;
  SpaceTimeField field(grid);
  std::vector<double> row(grid.size());
  for (double t : times) {
    if (t <= 0.0) {
      row = u_in.sample_on(grid);
    } else {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i) - x0;
        if (shock && std::abs(x - s * t) <= 1e-12 * (1.0 + std::abs(x)))
          row[i] = 0.5 * (l + r);
        else
          row[i] = exact_riemann(flux, l, r, x, t);
      }
    }
    field.append(t, row);
  }
  return field;
}

std::vector<double> heat_convolve(const Grid1D& grid, double epsilon, const InitialData& u_in, double t) {
  if (t <= 0.0 || epsilon == 0.0) return u_in.sample_on(grid);
  const double sigma = epsilon * std::sqrt(t);
  const std::size_t n = grid.size();
  std::vector<double> out(n);
  if (u_in.kind() == InitialData::Kind::riemann) {
    const double l = u_in.left_state(), r = u_in.right_state(), x0 = u_in.jump_position();
    for (std::size_t i = 0; i < n; ++i) out[i] = r + (l - r) * normal_cdf((x0 - grid.node(i)) / sigma);
    return out;
  }
  // piecewise-constant cells around the nodes, extended constantly beyond +-L
  const auto v = u_in.sample_on(grid);
  const auto jumps = interface_jumps(v);
  const double dx = grid.dx();
  for (std::size_t i = 0; i < n; ++i) {
    double s = v.front();
    for (std::size_t j = 0; j < jumps.size(); ++j) {
      if (jumps[j] == 0.0) continue;
      const double y = grid.node(j) + 0.5 * dx;
      s += jumps[j] * normal_cdf((grid.node(i) - y) / sigma);
    }
    out[i] = s;
  }
  return out;
}

SpaceTimeField duhamel_solve(const Grid1D& grid, const FluxModel& flux, double epsilon, const InitialData& u_in,
                             double T, std::size_t n_picard, const DuhamelOptions& options) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("duhamel_solve needs epsilon > 0");
  if (!(T > 0.0)) throw std::invalid_argument("duhamel_solve needs T > 0");
  if (n_picard == 0 || options.n_time_levels == 0) throw std::invalid_argument("duhamel_solve needs positive counts");

  const std::size_t levels = options.n_time_levels;
  const double dt = T / static_cast<double>(levels);
  const double dx = grid.dx();
  const std::size_t n = grid.size();

  std::vector<LagWeights> lags(levels + 1);
  for (std::size_t l = 1; l <= levels; ++l) {
    auto& lag = lags[l];
    const double sigma = epsilon * std::sqrt(static_cast<double>(l) * dt);
    lag.reach = static_cast<std::int64_t>(std::ceil(options.truncation_sigmas * sigma / dx)) + 1;
    lag.reach = std::min<std::int64_t>(lag.reach, static_cast<std::int64_t>(n));
    lag.weights.resize(static_cast<std::size_t>(2 * lag.reach + 2));
    for (std::int64_t d = -lag.reach; d <= lag.reach + 1; ++d) {
      const double z = (static_cast<double>(d) - 0.5) * dx;
      lag.weights[static_cast<std::size_t>(d + lag.reach)] =
          kernel_time_antiderivative(static_cast<double>(l) * dt, z, epsilon) -
          kernel_time_antiderivative(static_cast<double>(l - 1) * dt, z, epsilon);
    }
  }

  auto flux_of = [&](const std::vector<double>& m) {
    std::vector<double> out(m.size());
    std::transform(m.begin(), m.end(), out.begin(), [&](double v) { return flux.f(v); });
    return out;
  };

  std::vector<std::vector<double>> m(levels + 1);
  std::vector<std::vector<double>> jumps(levels);  // per time interval k = [t_k, t_{k+1}]
  m[0] = u_in.sample_on(grid);
  std::vector<double> f_prev = flux_of(m[0]);

  SpaceTimeField field(grid);
  field.append(0.0, m[0]);
  for (std::size_t level = 1; level <= levels; ++level) {
    const double t = level == levels ? T : static_cast<double>(level) * dt;
    std::vector<double> settled = heat_convolve(grid, epsilon, u_in, t);
    for (std::size_t k = 0; k + 1 < level; ++k) subtract_interface_convolution(lags[level - k], jumps[k], settled);

    std::vector<double> current = m[level - 1];
    std::vector<double> last_jumps;
    double previous = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (std::size_t it = 0; it < n_picard; ++it) {
      const auto f_now = flux_of(current);
      std::vector<double> mean(n);
      for (std::size_t i = 0; i < n; ++i) mean[i] = 0.5 * (f_prev[i] + f_now[i]);
      last_jumps = interface_jumps(mean);
      std::vector<double> next = settled;
      subtract_interface_convolution(lags[1], last_jumps, next);
      double dist = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(next[i])) throw InstabilityError("non-finite value in Duhamel iteration");
        dist = std::max(dist, std::abs(next[i] - current[i]));
      }
      current.swap(next);
      if (dist <= options.tolerance) {
        converged = true;
        break;
      }
      if (it >= 2 && dist >= previous) {
        std::ostringstream os;
        os << "Duhamel iteration does not contract at t = " << t << " (iterate distance grew from " << previous
           << " to " << dist << "); use a smaller T or more time levels";
        throw ContractionError(os.str());
      }
      previous = dist;
    }
    if (!converged && previous > 1e-8) throw ContractionError("Duhamel iteration did not converge; use a smaller T");
    {
      // final interval jumps consistent with the accepted value
      const auto f_now = flux_of(current);
      std::vector<double> mean(n);
      for (std::size_t i = 0; i < n; ++i) mean[i] = 0.5 * (f_prev[i] + f_now[i]);
      jumps[level - 1] = interface_jumps(mean);
      f_prev = f_now;
    }
    m[level] = current;
    field.append(t, current);
  }
  return field;
}

std::vector<double> field_at_time(const SpaceTimeField& field, double t) {
  const auto& ts = field.times();
  if (ts.empty()) throw std::invalid_argument("empty field");
  const double tol = 1e-12 * (1.0 + std::abs(ts.back()));
  if (t < ts.front() - tol || t > ts.back() + tol) throw std::invalid_argument("time outside the stored range");
  t = std::clamp(t, ts.front(), ts.back());
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t j = it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
  if (j + 1 >= ts.size()) {
    const auto s = field.slice(ts.size() - 1);
    return {s.begin(), s.end()};
  }
  const double w = (t - ts[j]) / (ts[j + 1] - ts[j]);
  const auto a = field.slice(j), b = field.slice(j + 1);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
  return out;
}

SpaceTimeField resample_times(const SpaceTimeField& field, const std::vector<double>& times) {
  SpaceTimeField out(field.grid());
  for (double t : times) out.append(t, field_at_time(field, t));
  return out;
}

void write_field_csv(std::ostream& out, const SpaceTimeField& field) {
  out << "t,x,value\n";
  out << std::setprecision(17);
  const auto& g = field.grid();
  for (std::size_t j = 0; j < field.n_times(); ++j)
    for (std::size_t i = 0; i < g.size(); ++i) out << field.times()[j] << ',' << g.node(i) << ',' << field.at(j, i) << '\n';
}

}  // namespace mfcl

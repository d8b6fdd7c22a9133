#include "mfcl/filippov.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mfcl {

namespace {

// Node index range [lo, hi] within distance R of x; empty when lo > hi.
std::pair<long, long> window(const Grid1D& g, double x, double R) {
  const double L = g.half_length();
  const double dx = g.dx();
  const auto n = static_cast<long>(g.size());
  const long lo = std::max(0L, static_cast<long>(std::ceil((x - R + L) / dx - 1e-9)));
  const long hi = std::min(n - 1, static_cast<long>(std::floor((x + R + L) / dx + 1e-9)));
  return {lo, hi};
}

Interval hull_of(std::span<const double> v, long lo, long hi) {
  const auto [mn, mx] = std::minmax_element(v.begin() + lo, v.begin() + hi + 1);
  return {*mn, *mx};
}

void check_compatible(const SpaceTimeField& a, const SpaceTimeField& b) {
  if (a.grid().size() != b.grid().size() || a.grid().half_length() != b.grid().half_length())
    throw std::invalid_argument("drift fields live on different grids");
}

}  // namespace

Interval local_hull(const SpaceTimeField& field, double x, double t, double R) {
  const auto [lo, hi] = window(field.grid(), x, R);
  if (lo > hi) {
    std::ostringstream os;
    os << "no grid node within R = " << R << " of x = " << x;
    throw std::invalid_argument(os.str());
  }
  return hull_of(field.slice(field.nearest_slice(t)), lo, hi);
}

double local_esssup(const SpaceTimeField& field, double x, double t, double R) { return local_hull(field, x, t, R).hi; }
double local_essinf(const SpaceTimeField& field, double x, double t, double R) { return local_hull(field, x, t, R).lo; }

double d_R_distance(const SpaceTimeField& b_approx, const SpaceTimeField& b_limit, double R, double t) {
  check_compatible(b_approx, b_limit);
  const auto a = b_approx.slice(b_approx.nearest_slice(t));
  const auto b = b_limit.slice(b_limit.nearest_slice(t));
  const auto r = static_cast<long>(std::floor(R / b_limit.grid().dx() + 1e-9));
  const auto n = static_cast<long>(a.size());
  double d = 0.0;
  for (long i = 0; i < n; ++i) {
    const Interval k = hull_of(b, std::max(0L, i - r), std::min(n - 1, i + r));
    d = std::max(d, k.distance(a[static_cast<std::size_t>(i)]));
  }
  return d;
}

double osl_seminorm(const Grid1D& grid, std::span<const double> values) {
  if (values.size() < 2 || values.size() != grid.size()) throw std::invalid_argument("osl_seminorm needs a full slice");
  double s = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < values.size(); ++i) s = std::max(s, values[i + 1] - values[i]);
  return s / grid.dx();
}

double osl_seminorm(const SpaceTimeField& field, double t) {
  return osl_seminorm(field.grid(), field.slice(field.nearest_slice(t)));
}

FilippovPath filippov_solve(const Drift& drift, double x0, double s, double T, const FilippovOptions& opt) {
  if (!(opt.dt > 0.0) || !(opt.dx > 0.0) || !(opt.drift_bound >= 0.0))
    throw std::invalid_argument("filippov_solve needs dt > 0, dx > 0, drift_bound >= 0");
  if (!(T >= s)) throw std::invalid_argument("filippov_solve needs T >= s");
  const auto n_steps = static_cast<std::size_t>(std::ceil((T - s) / opt.dt - 1e-9));
  const double dt = n_steps ? (T - s) / static_cast<double>(n_steps) : 0.0;
  const double B = opt.drift_bound;
  const double R = std::max(opt.dx, B * dt);

  auto sticks = [&](double x, double t) {
    double lo = drift(x, t), hi = lo;
    for (int q = -4; q <= 4; ++q) {
      const double v = drift(x + R * q / 4.0, t);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return lo <= 0.0 && 0.0 <= hi;
  };

  FilippovPath path;
  path.times.reserve(n_steps + 1);
  path.positions.reserve(n_steps + 1);
  double x = x0;
  path.times.push_back(s);
  path.positions.push_back(x);
  path.sticking.push_back(opt.track_sticking && sticks(x, s));
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double t = k == n_steps ? T : s + static_cast<double>(k) * dt;
    const double v = drift(x, t);
    const double trial = x + dt * v;
    if (v != 0.0 && drift(trial, t) == v) {
      x = trial;  // drift constant across the step: the explicit point is the root
    } else if (v != 0.0) {
      // g(y) = y - dt b(y, t) - x changes sign on [x, x + dt B] (v > 0) or [x - dt B, x] (v < 0)
      double lo = v > 0.0 ? x : x - dt * B;
      double hi = v > 0.0 ? x + dt * B : x;
      auto g = [&](double y) { return y - dt * drift(y, t) - x; };
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) < 0.0 ? lo : hi) = mid;
      }
      x = 0.5 * (lo + hi);
    }
    path.times.push_back(t);
    path.positions.push_back(x);
    path.sticking.push_back(opt.track_sticking && sticks(x, t));
  }
  return path;
}

Drift entropy_drift(const SpaceTimeField& u, const FluxModel& flux, double k) {
  if (u.n_times() == 0) throw std::invalid_argument("empty entropy field");
  return [&u, flux, k](double x, double t) {
    const auto& ts = u.times();
    const std::size_t i = u.grid().nearest_index(x);
    if (ts.size() == 1 || t <= ts.front()) return drift_a_k(flux, u.at(0, i), k);
    if (t >= ts.back()) return drift_a_k(flux, u.at(ts.size() - 1, i), k);
    const auto j = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin()) - 1;
    const double w = (t - ts[j]) / (ts[j + 1] - ts[j]);
    return (1.0 - w) * drift_a_k(flux, u.at(j, i), k) + w * drift_a_k(flux, u.at(j + 1, i), k);
  };
}

double entropy_drift_bound(const SpaceTimeField& u, const FluxModel& flux, double k) {
  double bound = 0.0;
  for (std::size_t j = 0; j < u.n_times(); ++j)
    for (double v : u.slice(j)) bound = std::max(bound, std::abs(drift_a_k(flux, v, k)));
  return bound;
}

FilippovPath filippov_solve(const SpaceTimeField& u, const FluxModel& flux, double k, double x0, double s, double T,
                            double dt) {
  if (u.n_times() == 0) throw std::invalid_argument("empty entropy field");
  if (T > u.final_time() + 1e-9 * std::max(1.0, T)) throw std::invalid_argument("horizon beyond the entropy field");
  return filippov_solve(entropy_drift(u, flux, k), x0, s, T,
                        FilippovOptions{dt, u.grid().dx(), entropy_drift_bound(u, flux, k)});
}

Lemma51Report lemma51_check(const SpaceTimeField& b_approx, const SpaceTimeField& b_limit,
                            const std::function<double(double)>& osl_bound, double R, double t_min,
                            double tolerance, double osl_slack) {
  check_compatible(b_approx, b_limit);
  Lemma51Report rep;
  const Grid1D& g = b_approx.grid();
  std::vector<double> diff(g.size());
  for (std::size_t j = 0; j < b_approx.n_times(); ++j) {
    const double t = b_approx.times()[j];
    if (t < t_min) continue;
    const std::size_t jl = b_limit.nearest_slice(t);
    if (std::abs(b_limit.times()[jl] - t) > 1e-9 * std::max(1.0, t))
      throw std::invalid_argument("lemma51_check: drifts have different time stamps");
    Lemma51Row row{};
    row.t = t;
    row.osl = osl_seminorm(g, b_approx.slice(j));
    row.osl_bound = osl_bound(t);
    if (row.osl > row.osl_bound + osl_slack && rep.precondition_ok) {
      rep.precondition_ok = false;
      rep.violating_slice = j;
    }
    const auto a = b_approx.slice(j);
    const auto b = b_limit.slice(jl);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(a[i] - b[i]);
    const double l1 = trapezoid(g, diff);
    row.d_R = d_R_distance(b_approx, b_limit, R, t);
    row.bound = std::sqrt(2.0 * std::max(row.osl_bound, 0.0) * l1) + tolerance;
    row.ratio = row.bound > 0.0 ? row.d_R / row.bound : (row.d_R > 0.0 ? HUGE_VAL : 0.0);
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.rows.push_back(row);
  }
  return rep;
}

void write_path_csv(std::ostream& out, const FilippovPath& path) {
  out << "t,x\n" << std::setprecision(17);
  for (std::size_t k = 0; k < path.times.size(); ++k) out << path.times[k] << ',' << path.positions[k] << '\n';
}

void write_lemma51_csv(std::ostream& out, const Lemma51Report& report) {
  out << "t,d_R,bound,ratio\n" << std::setprecision(17);
  for (const auto& r : report.rows) out << r.t << ',' << r.d_R << ',' << r.bound << ',' << r.ratio << '\n';
}

}  // namespace mfcl
